# -*- coding: utf-8 -*-

"""Numeric checks on the sector C = {0 < r < 1, 0 < theta < theta0}.

The weighted Poincare inequality

    int_C |phi|^2 r^(alpha - 2) <= 4 / alpha |phi|^2 + 2 / alpha^2 |grad phi|^2

and the barycentric lifting of two traces given on the rays theta = 0 and
theta = theta0. Radial integrals with the weight r^(alpha - 1) use
Gauss-Jacobi rules, everything else Gauss-Legendre rules.

"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Type, Union

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from platestruct.core import BaseResultClass, ConfigError, GeometryError
from platestruct.helper import get_logger

# Initialize global logger
logger = get_logger(__name__)

PolarFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
Trace = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]

STEP = 1e-6


# Quadrature
def _legendre(n: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(n)
    return 0.5 * (b - a) * (nodes + 1.0) + a, 0.5 * (b - a) * weights


def _jacobi(n: int, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of int_0^1 f(r) r^(alpha - 1) dr."""
    nodes, weights = roots_jacobi(n, 0.0, alpha - 1.0)
    return 0.5 * (nodes + 1.0), weights * 2.0 ** (-alpha)


def _polar_derivatives(
    phi: PolarFunction, r: np.ndarray, theta: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    dr = (phi(r + STEP, theta) - phi(r - STEP, theta)) / (2.0 * STEP)
    dtheta = (phi(r, theta + STEP) - phi(r, theta - STEP)) / (2.0 * STEP)
    return dr, dtheta


# Weighted Poincare inequality
@dataclass
class PoincareCheck(BaseResultClass):
    success: bool
    status: np.int8
    message: str
    alpha: np.float64
    lhs: np.float64
    rhs: np.float64

    @classmethod
    def from_values(
        cls: Type[PoincareCheck], alpha: float, lhs: float, rhs: float
    ) -> PoincareCheck:
        if lhs <= rhs * (1.0 + 1e-6):
            return cls(
                True, np.int8(0), "Weighted inequality holds.",
                np.float64(alpha), np.float64(lhs), np.float64(rhs),
            )
        return cls(
            False, np.int8(1),
            "Weighted inequality violated: {:.6e} > {:.6e}.".format(lhs, rhs),
            np.float64(alpha), np.float64(lhs), np.float64(rhs),
        )


def _check_alpha(alpha: float, upper: float):
    if not (0.0 < alpha <= upper):
        logger.error("Exponent alpha=%s outside (0, %s].", str(alpha), str(upper))
        raise ConfigError("alpha {} outside (0, {}]".format(alpha, upper))


def weighted_poincare_check(
    phi: PolarFunction,
    alpha: float,
    theta0: float = 0.5 * np.pi,
    grad: Optional[Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]] = None,
    n: int = 32,
) -> PoincareCheck:
    """Both sides of the weighted inequality for phi(r, theta).

    Args:
        grad: Optional (d phi / d r, d phi / d theta); central differences
            are used without it.

    Raises:
        ConfigError: alpha outside (0, 1].

    """
    _check_alpha(alpha, 1.0)
    theta, w_theta = _legendre(n, 0.0, theta0)

    r, w_r = _jacobi(n, alpha)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    lhs = np.einsum("i,j,ij->", w_r, w_theta, np.abs(phi(rr, tt)) ** 2)

    r, w_r = _legendre(n, 0.0, 1.0)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    values = phi(rr, tt)
    dr, dtheta = grad(rr, tt) if grad is not None else _polar_derivatives(phi, rr, tt)
    weights = np.outer(w_r * r, w_theta)
    norm = np.sum(weights * np.abs(values) ** 2)
    gradient = np.sum(weights * (np.abs(dr) ** 2 + np.abs(dtheta / rr) ** 2))
    rhs = 4.0 / alpha * norm + 2.0 / alpha ** 2 * gradient
    logger.debug("Weighted inequality, alpha=%s: %s <= %s.", str(alpha), str(lhs), str(rhs))
    return PoincareCheck.from_values(alpha, lhs, rhs)


class RandomSmoothField:
    """Random sum of plane waves, evaluated in polar coordinates."""

    def __init__(self: RandomSmoothField, seed: int = 0, terms: int = 4, scale: float = 3.0):
        """Initialize RandomSmoothField class.

        Init function of the RandomSmoothField class.

        """
        rng = np.random.default_rng(seed)
        self._amplitudes = rng.normal(size=terms)
        self._waves = rng.uniform(-scale, scale, size=(terms, 2))
        self._phases = rng.uniform(0.0, 2.0 * np.pi, size=terms)

    def _arguments(self: RandomSmoothField, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        x, y = r * np.cos(theta), r * np.sin(theta)
        return (
            np.multiply.outer(x, self._waves[:, 0])
            + np.multiply.outer(y, self._waves[:, 1])
            + self._phases
        )

    def __call__(self: RandomSmoothField, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.cos(self._arguments(r, theta)) @ self._amplitudes

    def gradient(
        self: RandomSmoothField, r: np.ndarray, theta: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(d / d r, d / d theta) of the field."""
        slope = -np.sin(self._arguments(r, theta)) * self._amplitudes
        dx, dy = slope @ self._waves[:, 0], slope @ self._waves[:, 1]
        c, s = np.cos(theta), np.sin(theta)
        return dx * c + dy * s, r * (dy * c - dx * s)


# Cone lifting
def _as_function(trace: Trace) -> Callable[[np.ndarray], np.ndarray]:
    """Callable trace on [0, 1], arrays are samples on uniform nodes."""
    if callable(trace):
        return trace
    samples = np.asarray(trace, dtype=np.float64)
    nodes = np.linspace(0.0, 1.0, samples.shape[0])
    return lambda t: np.interp(t, nodes, samples)


def _reflected(trace: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """Extension by reflection at t = 1."""
    return lambda t: trace(np.where(t > 1.0, 2.0 - t, t))


def barycentric_weight(theta: np.ndarray, theta0: float) -> np.ndarray:
    """Weight of the theta = 0 trace, 1 on theta = 0 and 0 on theta = theta0."""
    return np.sin(theta0 - theta) / (np.sin(theta0) * np.cos(theta) + (1.0 - np.cos(theta0)) * np.sin(theta))


def barycentric_weight_derivative(theta: np.ndarray, theta0: float) -> np.ndarray:
    numerator = np.sin(theta0 - theta)
    denominator = np.sin(theta0) * np.cos(theta) + (1.0 - np.cos(theta0)) * np.sin(theta)
    d_numerator = -np.cos(theta0 - theta)
    d_denominator = -np.sin(theta0) * np.sin(theta) + (1.0 - np.cos(theta0)) * np.cos(theta)
    return (d_numerator * denominator - numerator * d_denominator) / denominator ** 2


@dataclass
class ConeLifting(BaseResultClass):
    success: bool
    status: np.int8
    message: str
    trace_error: np.float64
    l2_norm_sq: np.float64
    gradient_integrals: np.ndarray
    relative_change: np.float64
    radii: np.ndarray
    angles: np.ndarray
    values: np.ndarray

    @property
    def gradient_integral(self: ConeLifting) -> np.float64:
        return np.float64(self.gradient_integrals[-1])


def cone_lifting(
    u: Trace,
    v: Trace,
    alpha: float,
    theta0: float = 0.5 * np.pi,
    levels: Sequence[int] = (8, 16, 32),
    tolerance: float = 0.05,
) -> ConeLifting:
    """Function w on the sector with traces u on theta = 0 and v on theta = theta0.

    w(r, theta) = U(r) a(theta) + V(r) (1 - a(theta)) with the radial
    liftings U, V of the reflected traces and the barycentric weight a.
    The weighted gradient integral int |grad w|^2 r^alpha is evaluated on
    every quadrature level; the check passes if the traces are reproduced
    to 1e-10 and the last two levels differ by less than tolerance.

    Raises:
        GeometryError: theta0 outside (0, pi).
        ConfigError: alpha outside (0, 2].

    """
    if not (0.0 < theta0 < np.pi):
        logger.error("Sector angle %s outside (0, pi).", str(theta0))
        raise GeometryError("theta0 {} outside (0, pi)".format(theta0))
    _check_alpha(alpha, 2.0)
    lift_u = _reflected(_as_function(u))
    lift_v = _reflected(_as_function(v))

    def w(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        a = barycentric_weight(theta, theta0)
        return lift_u(r) * a + lift_v(r) * (1.0 - a)

    def derivative(trace: Callable[[np.ndarray], np.ndarray], r: np.ndarray) -> np.ndarray:
        return (trace(r + STEP) - trace(r - STEP)) / (2.0 * STEP)

    integrals = list()
    for n in levels:
        theta, w_theta = _legendre(n, 0.0, theta0)
        r, w_r = _jacobi(n, alpha)
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        a = barycentric_weight(tt, theta0)
        radial = derivative(lift_u, rr) * a + derivative(lift_v, rr) * (1.0 - a)
        angular = (lift_u(rr) - lift_v(rr)) * barycentric_weight_derivative(tt, theta0)
        # |grad w|^2 r^alpha r dr = (radial^2 r^2 + angular^2) r^(alpha - 1) dr
        density = radial ** 2 * rr ** 2 + angular ** 2
        integrals.append(np.einsum("i,j,ij->", w_r, w_theta, density))
    integrals = np.array(integrals)

    n = levels[-1]
    radii, w_r = _legendre(n, 0.0, 1.0)
    angles, w_theta = _legendre(n, 0.0, theta0)
    rr, tt = np.meshgrid(radii, angles, indexing="ij")
    values = w(rr, tt)
    l2 = np.sum(np.outer(w_r * radii, w_theta) * values ** 2)

    nodes = np.linspace(0.0, 1.0, 4 * n + 1)
    trace_error = max(
        float(np.max(np.abs(w(nodes, np.zeros_like(nodes)) - _as_function(u)(nodes)))),
        float(np.max(np.abs(w(nodes, np.full_like(nodes, theta0)) - _as_function(v)(nodes)))),
    )
    scale = max(abs(float(integrals[-1])), 1e-300)
    change = abs(float(integrals[-1] - integrals[-2])) / scale if len(levels) > 1 else 0.0

    problems = list()
    if trace_error >= 1e-10:
        problems.append("trace error {:.3e}".format(trace_error))
    if not np.all(np.isfinite(integrals)):
        problems.append("weighted gradient integral not finite")
    elif change >= tolerance:
        problems.append("weighted gradient integral changes by {:.1%}".format(change))
    if problems:
        success, status, message = False, np.int8(1), "Cone lifting failed: " + ", ".join(problems) + "."
    else:
        success, status, message = True, np.int8(0), "Cone lifting reproduces the traces."
    logger.info("Cone lifting, theta0=%s, alpha=%s: %s", str(theta0), str(alpha), message)
    return ConeLifting(
        success=success,
        status=status,
        message=message,
        trace_error=np.float64(trace_error),
        l2_norm_sq=np.float64(l2),
        gradient_integrals=integrals,
        relative_change=np.float64(change),
        radii=radii,
        angles=angles,
        values=values,
    )


if __name__ == "__main__":
    logger.info("This is the file for the sector inequality checks.")
