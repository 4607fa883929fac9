# -*- coding: utf-8 -*-

"""Triangle element kernels.

Linear P1 elements carry the in-plane membrane displacement, Morley
elements the deflection. Both work batched over all triangles of a face
mesh and return element arrays that are scattered into sparse matrices.

"""

from __future__ import annotations
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from platestruct.helper import get_logger

# Initialize global logger
logger = get_logger(__name__)

# Edge midpoints, exact for quadratic integrands
MIDPOINT_RULE = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.full(3, 1.0 / 3.0),
)

# Degree four rule with six points
_A, _B = 0.445948490915965, 0.091576213509771
_WA, _WB = 0.223381589678011, 0.109951743655322
SIX_POINT_RULE = (
    np.array(
        [
            [_A, _A, 1.0 - 2.0 * _A],
            [_A, 1.0 - 2.0 * _A, _A],
            [1.0 - 2.0 * _A, _A, _A],
            [_B, _B, 1.0 - 2.0 * _B],
            [_B, 1.0 - 2.0 * _B, _B],
            [1.0 - 2.0 * _B, _B, _B],
        ]
    ),
    np.array([_WA, _WA, _WA, _WB, _WB, _WB]),
)


def plane_stress_matrix(poisson: float) -> np.ndarray:
    """Plane stress coupling on (g11, g22, g12) without the modulus."""
    return np.array(
        [
            [1.0, poisson, 0.0],
            [poisson, 1.0, 0.0],
            [0.0, 0.0, 2.0 * (1.0 - poisson)],
        ]
    )


GRAM_MEMBRANE_MATRIX = np.diag([1.0, 1.0, 2.0])


def scatter(
    element_dofs: np.ndarray, element_matrices: np.ndarray, size: int
) -> sp.csr_matrix:
    """Assemble element matrices (m, k, k) on dof indices (m, k)."""
    k = element_dofs.shape[1]
    rows = np.repeat(element_dofs, k, axis=1).ravel()
    cols = np.tile(element_dofs, (1, k)).ravel()
    return sp.coo_matrix(
        (element_matrices.ravel(), (rows, cols)), shape=(size, size)
    ).tocsr()


def scatter_vector(
    element_dofs: np.ndarray, element_vectors: np.ndarray, size: int
) -> np.ndarray:
    result = np.zeros(size)
    np.add.at(result, element_dofs.ravel(), element_vectors.ravel())
    return result


# Linear elements
class P1Elements:
    def __init__(self: P1Elements, points: np.ndarray, triangles: np.ndarray):
        """Initialize P1Elements class.

        Init function of the P1Elements class.

        """
        self._vertices = points[triangles]
        matrix = np.concatenate(
            [np.ones(triangles.shape + (1,)), self._vertices], axis=2
        )
        det = np.linalg.det(matrix)
        self._areas = 0.5 * np.abs(det)
        inverse = np.linalg.inv(matrix)
        # Barycentric coordinates are a_i + b_i x + c_i y
        self._coefficients = inverse
        self._gradients = np.swapaxes(inverse[:, 1:, :], 1, 2)
        g = self._gradients
        self._curl = np.zeros((g.shape[0], 6))
        self._curl[:, 0::2] = -0.5 * g[:, :, 1]
        self._curl[:, 1::2] = 0.5 * g[:, :, 0]

    @property
    def areas(self: P1Elements) -> np.ndarray:
        return self._areas

    @property
    def vertices(self: P1Elements) -> np.ndarray:
        return self._vertices

    @property
    def gradients(self: P1Elements) -> np.ndarray:
        """Gradients (m, 3, 2) of the barycentric coordinates."""
        return self._gradients

    def points(self: P1Elements, bary: np.ndarray) -> np.ndarray:
        """Physical points (m, npts, 2) of barycentric points (npts, 3)."""
        return np.einsum("qi,mid->mqd", bary, self._vertices)

    def barycentric(self: P1Elements, elements: np.ndarray, points: np.ndarray):
        coefficients = self._coefficients[elements]
        return (
            coefficients[:, 0, :]
            + points[:, 0:1] * coefficients[:, 1, :]
            + points[:, 1:2] * coefficients[:, 2, :]
        )

    def strain_matrices(self: P1Elements) -> np.ndarray:
        """Maps (m, 3, 6) from [u1, u2] per vertex to (g11, g22, g12)."""
        g = self._gradients
        result = np.zeros((g.shape[0], 3, 6))
        result[:, 0, 0::2] = g[:, :, 0]
        result[:, 1, 1::2] = g[:, :, 1]
        result[:, 2, 0::2] = 0.5 * g[:, :, 1]
        result[:, 2, 1::2] = 0.5 * g[:, :, 0]
        return result

    def curl_matrices(self: P1Elements) -> np.ndarray:
        """Maps (m, 6) to the in-plane rotation 0.5 (d1 u2 - d2 u1)."""
        return self._curl

    def stiffness(self: P1Elements, matrix: np.ndarray) -> np.ndarray:
        b = self.strain_matrices()
        return self._areas[:, None, None] * np.einsum(
            "mki,kl,mlj->mij", b, matrix, b
        )


# Morley elements
def _monomials(xi: np.ndarray) -> np.ndarray:
    x, y = xi[..., 0], xi[..., 1]
    one = np.ones_like(x)
    return np.stack([one, x, y, x * x, x * y, y * y], axis=-1)


def _monomial_gradients(xi: np.ndarray) -> np.ndarray:
    x, y = xi[..., 0], xi[..., 1]
    zero, one = np.zeros_like(x), np.ones_like(x)
    dx = np.stack([zero, one, zero, 2.0 * x, y, zero], axis=-1)
    dy = np.stack([zero, zero, one, zero, x, 2.0 * y], axis=-1)
    return np.stack([dx, dy], axis=-2)


class MorleyElements:
    """Morley triangles.

    The local dofs are the vertex values followed by the normal derivatives
    at the midpoints of the edges opposite the vertices. Edge normals come
    from the mesh, so neighbouring elements share the orientation.

    """

    def __init__(
        self: MorleyElements,
        points: np.ndarray,
        triangles: np.ndarray,
        edge_normals: np.ndarray,
    ):
        """Initialize MorleyElements class.

        Init function of the MorleyElements class.

        Args:
            points: Local node coordinates (n, 2).
            triangles: Node indices (m, 3).
            edge_normals: Normals (m, 3, 2) of the edges opposite each vertex.

        """
        vertices = points[triangles]
        self._centers = vertices.mean(axis=1)
        edges = np.roll(vertices, -1, axis=1) - np.roll(vertices, 1, axis=1)
        self._scales = np.linalg.norm(edges, axis=2).max(axis=1)

        midpoints = 0.5 * (np.roll(vertices, -1, axis=1) + np.roll(vertices, 1, axis=1))
        values = _monomials(self._scaled(vertices))
        grads = _monomial_gradients(self._scaled(midpoints)) / self._scales[:, None, None, None]
        normals = np.einsum("mkd,mkdj->mkj", edge_normals, grads)
        functionals = np.concatenate([values, normals], axis=1)
        self._coefficients = np.linalg.inv(functionals)

    def _scaled(
        self: MorleyElements, x: np.ndarray, elements: Optional[np.ndarray] = None
    ) -> np.ndarray:
        if elements is None:
            elements = slice(None)
        return (x - self._centers[elements, None, :]) / self._scales[elements, None, None]

    @property
    def coefficients(self: MorleyElements) -> np.ndarray:
        return self._coefficients

    def values(
        self: MorleyElements, points: np.ndarray, elements: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Basis values (m, npts, 6) at physical points (m, npts, 2)."""
        if elements is None:
            elements = slice(None)
        return _monomials(self._scaled(points, elements)) @ self._coefficients[elements]

    def gradients(
        self: MorleyElements, points: np.ndarray, elements: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Basis gradients (m, npts, 2, 6) at physical points (m, npts, 2)."""
        if elements is None:
            elements = slice(None)
        grads = _monomial_gradients(self._scaled(points, elements))
        grads = grads / self._scales[elements, None, None, None]
        return np.einsum("mqdk,mkj->mqdj", grads, self._coefficients[elements])

    def hessians(self: MorleyElements) -> np.ndarray:
        """Constant second derivatives (m, 3, 6) ordered (w11, w22, w12)."""
        c = self._coefficients
        h2 = (self._scales ** 2)[:, None]
        return np.stack(
            [2.0 * c[:, 3, :] / h2, 2.0 * c[:, 5, :] / h2, c[:, 4, :] / h2], axis=1
        )

    def bending_stiffness(
        self: MorleyElements, areas: np.ndarray, matrix: np.ndarray
    ) -> np.ndarray:
        h = self.hessians()
        return areas[:, None, None] * np.einsum("mki,kl,mlj->mij", h, matrix, h)

    def weighted_gradient_gram(
        self: MorleyElements,
        areas: np.ndarray,
        points: np.ndarray,
        weights: np.ndarray,
        quadrature: Tuple[np.ndarray, np.ndarray],
    ) -> np.ndarray:
        """Element matrices of int weight grad w . grad v.

        Args:
            points: Quadrature points (m, npts, 2).
            weights: Weight function values (m, npts) at the points.

        """
        grads = self.gradients(points)
        factor = areas[:, None] * quadrature[1][None, :] * weights
        return np.einsum("mq,mqdi,mqdj->mij", factor, grads, grads)


if __name__ == "__main__":
    logger.info("This is the file for the triangle element kernels.")
