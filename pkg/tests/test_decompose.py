# -*- coding: utf-8 -*-

"""Tests of the plate and structure displacement decompositions."""

import csv
import tempfile
import unittest
from pathlib import Path

import numpy as np

from platestruct.core import DecompositionError, EpdTypes, EstimateStatus, HypothesisError
from platestruct.decompose import (
    ElementaryPlateDisplacement,
    blend_edge,
    bounded_ratios,
    compare_epd,
    epd_ball,
    epd_fiber,
    erd_fit,
    extend_sample,
    fold,
    grid_l2_norm_sq,
    kl_split,
    structure_epd,
    unfold,
    verify_estimates,
)
from platestruct.fields import PlateGrid3D, energy_E, l2_norm_sq, sample_from_function
from tests.structures import build, disjoint_squares, right_angle_pair, unit_square


def rigid_field(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return lambda points: a + np.cross(b, points)


def bending_field(points):
    x1, x3 = points[:, 0], points[:, 2]
    return np.column_stack([-2.0 * x1 * x3, np.zeros_like(x1), x1 ** 2])


def smooth_field(seed):
    rng = np.random.default_rng(seed)
    linear = rng.normal(size=(3, 3))
    quadratic = rng.normal(size=(3, 3, 3))

    def field(points):
        return points @ linear.T + np.einsum("ijk,nj,nk->ni", quadratic, points, points)

    return field


def square_sample(func, delta=0.1, n=11, nz=5):
    face = build(unit_square()).faces[1]
    grids = {1: PlateGrid3D.regular(face, n, n, nz, delta)}
    return sample_from_function(grids, func)


def unclamped_right_angle_pair():
    data = right_angle_pair()
    data["edges"][1]["clamped"] = False
    return build(data)


def right_angle_sample(skeleton, func, delta=0.1, n=11):
    grids = {
        face_id: PlateGrid3D.regular(skeleton.faces[face_id], n, n, 5, delta)
        for face_id in skeleton.face_ids
    }
    return sample_from_function(grids, func)


class TestFiberEPD(unittest.TestCase):
    def test_constant_field(self):
        sample = square_sample(lambda x: np.tile([0.3, -1.0, 2.0], (x.shape[0], 1)))
        epd = epd_fiber(sample, 1)
        np.testing.assert_allclose(epd.translation, np.broadcast_to([0.3, -1.0, 2.0], epd.translation.shape), atol=1e-14)
        np.testing.assert_allclose(epd.rotation, 0.0, atol=1e-14)
        self.assertEqual(epd.kind, EpdTypes.FIBER)

    def test_rotation_about_e1(self):
        sample = square_sample(rigid_field(np.zeros(3), [1.0, 0.0, 0.0]))
        epd = epd_fiber(sample, 1)
        x2 = sample.grids[1].midsurface_local[..., 1]
        np.testing.assert_allclose(epd.translation[..., 2], x2, atol=1e-14)
        np.testing.assert_allclose(epd.translation[..., :2], 0.0, atol=1e-14)
        np.testing.assert_allclose(epd.rotation, np.broadcast_to([1.0, 0.0, 0.0], epd.rotation.shape), atol=1e-13)
        np.testing.assert_allclose(epd.evaluate(sample.grids[1].x3), sample.values[1], atol=1e-14)

    def test_rotation_third_component_vanishes(self):
        epd = epd_fiber(square_sample(smooth_field(1)), 1)
        self.assertTrue(np.all(epd.rotation[..., 2] == 0.0))

    def test_bending_field(self):
        sample = square_sample(bending_field)
        epd = epd_fiber(sample, 1)
        x1 = sample.grids[1].midsurface_local[..., 0]
        np.testing.assert_allclose(epd.translation[..., 2], x1 ** 2, atol=1e-14)
        np.testing.assert_allclose(epd.rotation[..., 1], -2.0 * x1, atol=1e-13)
        np.testing.assert_allclose(epd.rotation[..., 0], 0.0, atol=1e-14)

    def test_random_rigid_fields(self):
        rng = np.random.default_rng(11)
        for k in range(20):
            with self.subTest(field=k):
                sample = square_sample(rigid_field(rng.normal(size=3), rng.normal(size=3)))
                grid = sample.grids[1]
                elementary = epd_fiber(sample, 1).to_sample(grid)
                residual = l2_norm_sq(sample - elementary)
                self.assertLess(np.sqrt(residual / l2_norm_sq(sample)), 1e-12)
                self.assertLess(energy_E(elementary), 1e-20)

    def test_linearity(self):
        first, second = square_sample(smooth_field(2)), square_sample(smooth_field(3))
        combined = epd_fiber(first * 2.0 + second, 1)
        expected = 2.0 * epd_fiber(first, 1).rotation + epd_fiber(second, 1).rotation
        np.testing.assert_allclose(combined.rotation, expected, atol=1e-11)


class TestKirchhoffLove(unittest.TestCase):
    def test_bending_field_has_no_residual(self):
        sample = square_sample(bending_field)
        kl_part, residual = kl_split(sample, epd_fiber(sample, 1))
        np.testing.assert_allclose(residual.values, 0.0, atol=1e-12)
        np.testing.assert_allclose(kl_part.values[1], sample.values[1], atol=1e-12)

    def test_rigid_field_has_no_residual(self):
        sample = square_sample(rigid_field([1.0, 2.0, 3.0], [0.2, -0.4, 0.1]))
        _, residual = kl_split(sample, epd_fiber(sample, 1))
        np.testing.assert_allclose(residual.values, 0.0, atol=1e-12)

    def test_transverse_residual(self):
        delta = 0.1

        def field(points):
            values = bending_field(points)
            values[:, 2] += points[:, 2] ** 2 - delta ** 2 / 3.0
            return values

        sample = square_sample(field, delta=delta)
        _, residual = kl_split(sample, epd_fiber(sample, 1))
        x3 = sample.grids[1].x3
        expected = np.broadcast_to(x3 ** 2 - delta ** 2 / 3.0, residual.values.shape[:3])
        np.testing.assert_allclose(residual.values[..., 2], expected, atol=1e-12)
        np.testing.assert_allclose(residual.fiber_mean(), 0.0, atol=1e-14)

    def test_grid_mismatch(self):
        sample = square_sample(bending_field)
        other = epd_fiber(square_sample(bending_field, n=6), 1)
        with self.assertRaises(DecompositionError):
            kl_split(sample, other)


class TestUnfolding(unittest.TestCase):
    def setUp(self):
        self.delta = 0.125
        self.sample = square_sample(lambda x: np.column_stack([x[:, 2], x[:, 0], x[:, 2] ** 2]), delta=self.delta)

    def test_thickness_coordinate(self):
        unfolded = unfold(self.sample, 1)
        t3 = np.broadcast_to(unfolded.t3, unfolded.values.shape[:3])
        np.testing.assert_array_equal(unfolded.values[..., 0], self.delta * t3)
        np.testing.assert_array_equal(unfolded.values[..., 1], self.sample.values[1][..., 1])

    def test_fold_is_inverse(self):
        grid = self.sample.grids[1]
        folded = fold(unfold(self.sample, 1), grid)
        np.testing.assert_array_equal(folded.values[1], self.sample.values[1])

    def test_scaled_isometry(self):
        grid = self.sample.grids[1]
        unfolded = unfold(self.sample, 1)
        thin = grid_l2_norm_sq(self.sample.values[1], grid.x1, grid.x2, grid.x3)
        self.assertAlmostEqual(unfolded.l2_norm_sq() * self.delta, thin, delta=1e-15)
        # phi = x3 on the unit square
        self.assertAlmostEqual(grid_l2_norm_sq(unfolded.values[..., 0], grid.x1, grid.x2, unfolded.t3), 2.0 / 3.0 * self.delta ** 2, places=14)

    def test_difference_quotients(self):
        grid = self.sample.grids[1]
        unfolded = unfold(self.sample, 1)
        values = self.sample.values[1]
        thin = np.diff(values, axis=2) / np.diff(grid.x3)[None, None, :, None]
        np.testing.assert_array_equal(unfolded.difference(2), self.delta * thin)
        inplane = np.diff(values, axis=0) / np.diff(grid.x1)[:, None, None, None]
        np.testing.assert_array_equal(unfolded.difference(0), inplane)


class TestBallEPD(unittest.TestCase):
    def test_rigid_field_is_reproduced(self):
        func = rigid_field([0.5, -0.2, 1.0], [0.3, 0.7, -0.4])
        sample = square_sample(func, delta=0.2)
        epd = epd_ball(extend_sample(sample, 1, margin=0.2), 1)
        self.assertEqual(epd.kind, EpdTypes.BALL)
        np.testing.assert_allclose(epd.x1, sample.grids[1].x1, atol=1e-15)
        np.testing.assert_allclose(epd.rotation, np.broadcast_to([0.3, 0.7, -0.4], epd.rotation.shape), atol=1e-12)
        np.testing.assert_allclose(epd.evaluate(sample.grids[1].x3), sample.values[1], atol=1e-12)

    def test_constant_field(self):
        sample = square_sample(lambda x: np.tile([1.0, 2.0, 3.0], (x.shape[0], 1)), delta=0.2)
        epd = epd_ball(extend_sample(sample, 1, margin=0.2), 1, cells_per_radius=2)
        np.testing.assert_allclose(epd.rotation, 0.0, atol=1e-13)

    def test_ball_leaving_the_sample(self):
        sample = square_sample(bending_field, delta=0.2)
        with self.assertRaises(DecompositionError):
            epd_ball(sample, 1)

    def test_extension_keeps_affine_fields(self):
        func = rigid_field([0.1, 0.2, 0.3], [1.0, -1.0, 2.0])
        extended = extend_sample(square_sample(func, delta=0.2), 1, margin=0.15)
        grid = extended.grids[1]
        self.assertLessEqual(grid.x1[0], -0.15)
        self.assertEqual(grid.core_bounds, (0.0, 1.0, 0.0, 1.0))
        expected = func(grid.nodes_global.reshape(-1, 3)).reshape(grid.shape + (3,))
        np.testing.assert_allclose(extended.values[1], expected, atol=1e-13)

    def test_compare_with_fiber(self):
        func = rigid_field([0.5, -0.2, 1.0], [0.3, 0.7, 0.0])
        sample = square_sample(func, delta=0.2)
        ball = epd_ball(extend_sample(sample, 1, margin=0.2), 1)
        translation, rotation = compare_epd(epd_fiber(sample, 1), ball)
        self.assertLess(translation, 1e-12)
        self.assertLess(rotation, 1e-12)


class TestRodDisplacement(unittest.TestCase):
    def setUp(self):
        self.skeleton = build(right_angle_pair())
        self.edge = self.skeleton.junction_edges[0]

    def test_rigid_field_is_recovered(self):
        func = rigid_field([0.1, -0.3, 0.2], [0.5, 1.0, -0.7])
        sample = right_angle_sample(self.skeleton, func)
        erd = erd_fit(sample, self.skeleton, self.edge.index, 0.1)
        points = np.array([[1.0, 0.3, 0.0], [0.95, 0.6, 0.05], [1.02, 0.1, 0.08]])
        translation, rotation = erd.evaluate(points)
        np.testing.assert_allclose(translation, func(points), atol=1e-12)
        np.testing.assert_allclose(rotation, np.broadcast_to([0.5, 1.0, -0.7], rotation.shape), atol=1e-12)

    def test_torsion_rate(self):
        rate = 0.8

        def torsion(points):
            axis = np.column_stack([np.ones(points.shape[0]), points[:, 1], np.zeros(points.shape[0])])
            return rate * points[:, 1:2] * np.cross(self.edge.direction, points - axis)

        sample = right_angle_sample(self.skeleton, torsion)
        erd = erd_fit(sample, self.skeleton, self.edge.index, 0.1)
        zone = self.skeleton.eta0 * 0.1
        inner = (erd.stations >= zone) & (erd.stations <= self.edge.length - zone)
        twist = erd.rotation[inner] @ self.edge.direction
        offset = twist - rate * erd.stations[inner]
        np.testing.assert_allclose(offset, offset[0], atol=1e-10)

    def test_rigid_terminal_zones(self):
        sample = right_angle_sample(self.skeleton, smooth_field(4))
        erd = erd_fit(sample, self.skeleton, self.edge.index, 0.1)
        zone = self.skeleton.eta0 * 0.1
        start = erd.stations < zone
        np.testing.assert_allclose(erd.rotation[start], np.broadcast_to(erd.rotation[np.argmax(~start)], erd.rotation[start].shape))

    def test_zero_field(self):
        sample = right_angle_sample(self.skeleton, lambda x: np.zeros_like(x))
        erd = erd_fit(sample, self.skeleton, self.edge.index, 0.1)
        self.assertTrue(np.all(erd.translation == 0.0))
        self.assertTrue(np.all(erd.rotation == 0.0))


class TestBlendEdge(unittest.TestCase):
    def setUp(self):
        self.skeleton = build(right_angle_pair())
        self.edge = self.skeleton.junction_edges[0].index
        self.func = rigid_field([0.1, -0.3, 0.2], [0.5, 1.0, 0.0])
        self.sample = right_angle_sample(self.skeleton, self.func, n=21)
        self.erd = erd_fit(self.sample, self.skeleton, self.edge, 0.1)

    def test_limits_of_the_cutoff(self):
        plate = epd_fiber(self.sample, 1)
        zero = ElementaryPlateDisplacement(1, plate.x1, plate.x2, 0.0 * plate.translation, 0.0 * plate.rotation)
        blended = blend_edge(zero, self.erd, self.skeleton, self.edge, 0.1)
        self.assertEqual(blended.kind, EpdTypes.BLENDED)
        # x = 0.9 lies within eta0 delta of the edge, x = 0.5 beyond 2 eta0 delta.
        np.testing.assert_allclose(blended.translation[18], plate.translation[18], atol=1e-12)
        np.testing.assert_allclose(blended.translation[10], 0.0, atol=1e-15)

    def test_equal_inputs(self):
        plate = epd_fiber(self.sample, 1)
        blended = blend_edge(plate, self.erd, self.skeleton, self.edge, 0.1)
        np.testing.assert_allclose(blended.translation, plate.translation, atol=1e-12)
        np.testing.assert_allclose(blended.rotation, plate.rotation, atol=1e-12)

    def test_convex_hull(self):
        plate = epd_fiber(right_angle_sample(self.skeleton, smooth_field(5), n=21), 1)
        blended = blend_edge(plate, self.erd, self.skeleton, self.edge, 0.1)
        face = self.skeleton.faces[1]
        nodes = np.stack(np.meshgrid(plate.x1, plate.x2, indexing="ij"), axis=-1).reshape(-1, 2)
        rod = face.vectors_to_local(self.erd.evaluate(face.to_global(nodes))[0])
        rod = rod.reshape(plate.translation.shape)
        lower = np.minimum(rod, plate.translation) - 1e-12
        upper = np.maximum(rod, plate.translation) + 1e-12
        self.assertTrue(np.all((blended.translation >= lower) & (blended.translation <= upper)))


class TestStructureEPD(unittest.TestCase):
    def test_rigid_motion_is_reproduced(self):
        skeleton = unclamped_right_angle_pair()
        func = rigid_field([0.1, -0.3, 0.2], [0.5, 1.0, -0.7])
        sample = right_angle_sample(skeleton, func)
        decomposition = structure_epd(sample, skeleton, 0.1)
        for face_id, plate in decomposition.plates.items():
            face = skeleton.faces[face_id]
            nodes = np.stack(np.meshgrid(plate.x1, plate.x2, indexing="ij"), axis=-1).reshape(-1, 2)
            expected = face.vectors_to_local(func(face.to_global(nodes)))
            np.testing.assert_allclose(plate.translation.reshape(-1, 3), expected, atol=1e-10)
        report = verify_estimates(sample, decomposition)
        self.assertEqual(report.rows[0].inequality_id, "structure")
        self.assertEqual(report.rows[0].status, EstimateStatus.EXACT_KERNEL)

    def test_zero_sample(self):
        skeleton = build(right_angle_pair())
        sample = right_angle_sample(skeleton, lambda x: np.zeros_like(x))
        decomposition = structure_epd(sample, skeleton, 0.1)
        for plate in decomposition.plates.values():
            self.assertTrue(np.all(plate.translation == 0.0))
            self.assertTrue(np.all(plate.rotation == 0.0))

    def test_junction_traces_are_single_valued(self):
        skeleton = build(right_angle_pair())
        sample = right_angle_sample(skeleton, smooth_field(6))
        decomposition = structure_epd(sample, skeleton, 0.1)
        edge = skeleton.junction_edges[0].index
        first = decomposition.edge_trace(edge, 1)
        second = decomposition.edge_trace(edge, 2)
        np.testing.assert_allclose(first[0], second[0], atol=1e-10)
        np.testing.assert_allclose(first[1], second[1], atol=1e-10)

    def test_clamped_edge_trace_vanishes(self):
        skeleton = build(right_angle_pair())
        sample = right_angle_sample(skeleton, smooth_field(7))
        decomposition = structure_epd(sample, skeleton, 0.1)
        translation, rotation = decomposition.edge_trace(skeleton.clamped_edges[0].index, 1)
        np.testing.assert_allclose(translation, 0.0, atol=1e-14)
        np.testing.assert_allclose(rotation, 0.0, atol=1e-14)

    def test_hypotheses_are_checked(self):
        skeleton = build(disjoint_squares())
        grids = {
            face_id: PlateGrid3D.regular(skeleton.faces[face_id], 6, 6, 5, 0.1)
            for face_id in skeleton.face_ids
        }
        sample = sample_from_function(grids, lambda x: np.zeros_like(x))
        with self.assertRaises(HypothesisError):
            structure_epd(sample, skeleton, 0.1)


class TestVerifyEstimates(unittest.TestCase):
    def test_rigid_field_is_exact_kernel(self):
        sample = square_sample(rigid_field([1.0, 0.0, 2.0], [0.1, 0.2, 0.3]))
        report = verify_estimates(sample, epd_fiber(sample, 1))
        self.assertEqual([row.inequality_id for row in report.rows], ["fiber", "kirchhoff_love"])
        for row in report.rows:
            self.assertEqual(row.status, EstimateStatus.EXACT_KERNEL)
            self.assertTrue(np.isnan(row.ratio))
        self.assertTrue(report.success)

    def test_bending_ratio_is_bounded(self):
        reports = list()
        for delta in (0.1, 0.05, 0.025):
            face = build(unit_square()).faces[1]
            grids = {1: PlateGrid3D.regular(face, 11, 3, 5, delta)}
            sample = sample_from_function(grids, bending_field)
            reports.append(verify_estimates(sample, epd_fiber(sample, 1)))
        ratios = [report.ratio("fiber") for report in reports]
        for previous, current in zip(ratios, ratios[1:]):
            self.assertLessEqual(current, 1.1 * previous)
        self.assertTrue(bounded_ratios(reports)["fiber"])

    def test_smooth_field_ratios(self):
        sample = square_sample(smooth_field(8))
        report = verify_estimates(sample, epd_fiber(sample, 1))
        ratio = report.ratio("fiber")
        self.assertTrue(np.isfinite(ratio) and ratio > 0.0)

        ball = epd_ball(extend_sample(sample, 1, margin=0.1), 1)
        report = verify_estimates(sample, ball)
        self.assertEqual(report.rows[0].inequality_id, "ball")
        self.assertTrue(np.isfinite(report.rows[0].ratio) and report.rows[0].ratio > 0.0)

    def test_ratios_across_thicknesses(self):
        fields = {"bending": bending_field}
        fields.update({"smooth {}".format(seed): smooth_field(seed) for seed in range(20, 40)})
        for name, func in fields.items():
            with self.subTest(field=name):
                fiber_reports, ball_reports = list(), list()
                for delta in (0.1, 0.05, 0.025):
                    sample = square_sample(func, delta=delta, n=int(round(1.0 / delta)) + 1)
                    fiber_reports.append(verify_estimates(sample, epd_fiber(sample, 1)))
                    ball = epd_ball(extend_sample(sample, 1, margin=delta), 1, delta=delta)
                    ball_reports.append(verify_estimates(sample, ball))
                fiber = bounded_ratios(fiber_reports)
                self.assertIn("fiber", fiber)
                if name == "bending":
                    # Kirchhoff-Love residual vanishes up to rounding
                    fiber.pop("kirchhoff_love", None)
                else:
                    self.assertIn("kirchhoff_love", fiber)
                self.assertTrue(all(fiber.values()), fiber)
                ball = bounded_ratios(ball_reports)
                self.assertIn("ball", ball)
                self.assertTrue(all(ball.values()), ball)

    def test_csv_export(self):
        sample = square_sample(smooth_field(9))
        report = verify_estimates(sample, epd_fiber(sample, 1))
        with tempfile.TemporaryDirectory() as folder:
            path = Path(folder) / "estimates.csv"
            report.save_csv(path, comments=["# delta: 0.1"])
            with open(path, newline="") as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0][0], "# delta: 0.1")
        self.assertEqual(rows[1][:5], ["inequality_id", "delta", "lhs", "rhs_energy", "ratio"])
        self.assertEqual([row[0] for row in rows[2:]], ["fiber", "kirchhoff_love"])


if __name__ == "__main__":
    unittest.main()
