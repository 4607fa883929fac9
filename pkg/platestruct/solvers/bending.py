# -*- coding: utf-8 -*-

"""Bending problem of the coupled plates.

The inextensional displacement is solved in the coordinates of the limit
space basis. A finite-difference solve of the clamped square plate serves
as reference deflection.

"""

from __future__ import annotations
from typing import Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from platestruct.core import SolverError, SolverResult
from platestruct.fields import Material
from platestruct.helper import get_logger
from platestruct.solvers.core import (
    ITERATIVE_THRESHOLD,
    ForceModel,
    load_vector,
    solve_linear,
)
from platestruct.solvers.membrane import membrane_matrix
from platestruct.spaces.core import LimitInextensionalBasis, MembraneBendingDofs
from platestruct.spaces.elements import scatter

# Initialize global logger
logger = get_logger(__name__)


def bending_matrix(material: Material) -> np.ndarray:
    """Bending matrix on (w11, w22, w12) including D* = E/(3(1 - nu^2))."""
    return membrane_matrix(material) / 3.0


def assemble_bending_full(dofs: MembraneBendingDofs, material: Material) -> sp.csr_matrix:
    """Broken bending stiffness on the full dofs."""
    matrix = bending_matrix(material)
    result = sp.csr_matrix((dofs.size, dofs.size))
    for face_id, face_mesh in dofs.mesh.faces.items():
        result = result + scatter(
            dofs.morley_element_dofs(face_id),
            face_mesh.morley.bending_stiffness(face_mesh.p1.areas, matrix),
            dofs.size,
        )
    return result.tocsr()


def assemble_bending(
    dofs: MembraneBendingDofs, material: Material, basis: LimitInextensionalBasis
) -> sp.csr_matrix:
    """Bending stiffness in the coordinates of the limit space basis."""
    logger.info("Assemble bending stiffness.")
    full = assemble_bending_full(dofs, material)
    return (basis.basis.T @ full @ basis.basis).tocsr()


def solve_bending(
    dofs: MembraneBendingDofs,
    operator: sp.spmatrix,
    forces: ForceModel,
    basis: LimitInextensionalBasis,
    threshold: int = ITERATIVE_THRESHOLD,
) -> Tuple[np.ndarray, np.ndarray, SolverResult]:
    """Inextensional displacement U_I.

    Returns:
        Full dofs of U_I, its basis coordinates and the solver result.

    """
    if basis.dimension == 0:
        logger.warning("Limit inextensional space is empty, bending problem is trivial.")
        result = SolverResult.from_success(0.0)
        result.message = "Trivial bending problem, empty limit inextensional space."
        return np.zeros(dofs.size), np.zeros(0), result

    logger.info("Start bending solver.")
    load = basis.basis.T @ load_vector(dofs, forces.inextensional)
    coordinates, result = solve_linear(operator, load, definite=True, threshold=threshold)
    logger.info("Bending solver finished with relative residual %s.", str(result.residual))
    return basis.basis @ coordinates, coordinates, result


def bending_energy(operator: sp.spmatrix, coordinates: np.ndarray) -> np.float64:
    return np.float64(coordinates @ (operator @ coordinates))


def _laplacian_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n - 1, -2.0)
    off = np.ones(n - 2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h ** 2


def clamped_plate_fd(
    n: int = 128, q: float = 1.0, stiffness: float = 1.0, side: float = 1.0
) -> np.ndarray:
    """Deflection of the clamped square plate stiffness * lap^2 w = q.

    Central differences on an (n + 1) x (n + 1) grid. The zero slope at the
    boundary mirrors the first interior line, which adds 2/h^4 to the
    diagonal per boundary neighbour.

    Returns:
        Nodal deflections (n + 1, n + 1), boundary rows included.

    """
    if n < 4:
        logger.error("Finite-difference plate needs n >= 4, got %d.", n)
        raise SolverError("Finite-difference plate needs n >= 4, got {}.".format(n))
    h = side / n
    lap_1d = _laplacian_1d(n, h)
    eye = sp.identity(n - 1, format="csr")
    lap = sp.kron(eye, lap_1d) + sp.kron(lap_1d, eye)

    count = np.zeros(n - 1)
    count[0] += 1.0
    count[-1] += 1.0
    sides = (count[:, None] + count[None, :]).ravel()
    matrix = (lap @ lap + sp.diags(2.0 * sides / h ** 4)).tocsc()

    rhs = np.full((n - 1) ** 2, q / stiffness)
    interior = spla.spsolve(matrix, rhs)
    result = np.zeros((n + 1, n + 1))
    result[1:-1, 1:-1] = interior.reshape(n - 1, n - 1)
    return result


if __name__ == "__main__":
    logger.info("This is the file for the bending problem.")
