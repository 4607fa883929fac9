# -*- coding: utf-8 -*-

"""Tests of the weighted inequality and the cone lifting on a sector."""

import unittest

import numpy as np

from platestruct.core import ConfigError, GeometryError
from platestruct.reference3d.lemmas import (
    RandomSmoothField,
    barycentric_weight,
    cone_lifting,
    weighted_poincare_check,
)


class TestWeightedPoincare(unittest.TestCase):
    def test_constant(self):
        check = weighted_poincare_check(lambda r, t: np.ones_like(r), 1.0)
        self.assertTrue(check.success)
        self.assertAlmostEqual(check.lhs, 0.5 * np.pi, places=10)
        self.assertAlmostEqual(check.rhs, np.pi, places=10)

    def test_radius(self):
        check = weighted_poincare_check(
            lambda r, t: r, 1.0, grad=lambda r, t: (np.ones_like(r), np.zeros_like(r))
        )
        self.assertTrue(check.success)
        self.assertAlmostEqual(check.lhs, np.pi / 6.0, places=10)
        self.assertAlmostEqual(check.rhs, np.pi, places=10)

    def test_singular_weight(self):
        check = weighted_poincare_check(lambda r, t: np.ones_like(r), 0.25, theta0=1.0)
        self.assertAlmostEqual(check.lhs, 4.0, places=8)
        self.assertTrue(check.success)

    def test_random_fields(self):
        for alpha in (0.25, 0.5, 1.0):
            for seed in range(50):
                phi = RandomSmoothField(seed)
                check = weighted_poincare_check(phi, alpha, grad=phi.gradient)
                self.assertTrue(check.success, msg="alpha={} seed={}: {}".format(alpha, seed, check.message))
                self.assertGreater(check.lhs, 0.0)

    def test_finite_differences_match_gradient(self):
        phi = RandomSmoothField(11)
        exact = weighted_poincare_check(phi, 0.5, grad=phi.gradient)
        approximate = weighted_poincare_check(phi, 0.5)
        self.assertAlmostEqual(exact.rhs, approximate.rhs, delta=1e-6 * exact.rhs)

    def test_alpha_range(self):
        with self.assertRaises(ConfigError):
            weighted_poincare_check(lambda r, t: r, 1.5)
        with self.assertRaises(ConfigError):
            weighted_poincare_check(lambda r, t: r, 0.0)


class TestConeLifting(unittest.TestCase):
    def test_barycentric_weight(self):
        theta0 = 2.0
        self.assertEqual(barycentric_weight(np.array(0.0), theta0), 1.0)
        self.assertAlmostEqual(float(barycentric_weight(np.array(theta0), theta0)), 0.0, places=15)

    def test_constant_traces(self):
        lifting = cone_lifting(lambda t: np.full_like(t, 2.5), lambda t: np.full_like(t, 2.5), 1.0, theta0=2.0)
        self.assertTrue(lifting.success)
        np.testing.assert_allclose(lifting.values, 2.5, atol=1e-12)
        self.assertAlmostEqual(lifting.gradient_integral, 0.0, places=12)

    def test_zero_traces(self):
        lifting = cone_lifting(np.zeros(11), np.zeros(11), 1.0)
        self.assertFalse(np.any(lifting.values))

    def test_linear_trace(self):
        lifting = cone_lifting(lambda t: t, lambda t: np.zeros_like(t), 1.0)
        self.assertTrue(lifting.success, msg=lifting.message)
        self.assertLess(lifting.trace_error, 1e-10)
        self.assertLess(lifting.relative_change, 0.05)
        self.assertTrue(np.isfinite(lifting.gradient_integral))
        self.assertGreater(lifting.gradient_integral, 0.0)
        self.assertGreater(lifting.l2_norm_sq, 0.0)

    def test_sampled_traces(self):
        t = np.linspace(0.0, 1.0, 21)
        lifting = cone_lifting(t ** 2, np.sin(t), 0.5, theta0=2.5)
        self.assertLess(lifting.trace_error, 1e-10)

    def test_invalid_input(self):
        with self.assertRaises(GeometryError):
            cone_lifting(lambda t: t, lambda t: t, 1.0, theta0=np.pi)
        with self.assertRaises(GeometryError):
            cone_lifting(lambda t: t, lambda t: t, 1.0, theta0=0.0)
        with self.assertRaises(ConfigError):
            cone_lifting(lambda t: t, lambda t: t, 2.5)


if __name__ == "__main__":
    unittest.main()
