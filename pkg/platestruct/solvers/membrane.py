# -*- coding: utf-8 -*-

"""Membrane problem of the coupled plates.

The extensional displacement minimizes the plane stress energy minus the
work of f_E over the continuous clamped fields that are rho-orthogonal to
the inextensional space. The orthogonality is imposed with multipliers.

"""

from __future__ import annotations
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from platestruct.core import AdmissibilityError, MaterialError, SolverResult
from platestruct.fields import Material
from platestruct.helper import get_logger
from platestruct.solvers.core import (
    ITERATIVE_THRESHOLD,
    AdmissibilityReport,
    ForceModel,
    load_vector,
    solve_linear,
)
from platestruct.spaces.core import InextensionalBasis, MembraneBendingDofs, RhoGram
from platestruct.spaces.elements import MIDPOINT_RULE, plane_stress_matrix, scatter

# Initialize global logger
logger = get_logger(__name__)


def membrane_matrix(material: Material) -> np.ndarray:
    """Plane stress matrix on (g11, g22, g12) including E/(1 - nu^2)."""
    poisson = float(material.poisson)
    modulus = float(material.plane_stress_modulus)
    if not np.isfinite(modulus) or poisson >= 1.0:
        logger.error("Plane stress modulus undefined for nu = %s.", poisson)
        raise MaterialError("Plane stress modulus undefined for nu = {}.".format(poisson))
    return modulus * plane_stress_matrix(poisson)


def assemble_membrane(dofs: MembraneBendingDofs, material: Material) -> sp.csr_matrix:
    """Membrane stiffness on the full dofs.

    Coupling and clamping enter through the bases the matrix is restricted
    to, so the result acts on the unconstrained membrane dofs of each face.

    """
    logger.info("Assemble membrane stiffness.")
    matrix = membrane_matrix(material)
    result = sp.csr_matrix((dofs.size, dofs.size))
    for face_id, face_mesh in dofs.mesh.faces.items():
        result = result + scatter(
            dofs.membrane_element_dofs(face_id), face_mesh.p1.stiffness(matrix), dofs.size
        )
    return result.tocsr()


def check_force_admissibility(
    dofs: MembraneBendingDofs,
    basis: InextensionalBasis,
    forces: ForceModel,
    tolerance: float = 1e-10,
) -> AdmissibilityReport:
    """Check that f_E has no transverse part and does no work on D_I.

    With f_E3 = 0 the work of f_E on a field of D_I only sees the in-plane
    rigid motions of the faces. The functionals are the resultants of f_E
    paired with an orthonormal basis of the rigid motions D_I admits.

    """
    bary, _ = MIDPOINT_RULE
    transverse = dict()
    for face_id, face_mesh in dofs.mesh.faces.items():
        points = face_mesh.p1.points(bary).reshape(-1, 2)
        values = forces.extensional(face_id, points)
        transverse[face_id] = float(np.max(np.abs(values[:, 2]))) if values.size else 0.0

    reduced = basis.reduction.T @ load_vector(dofs, forces.extensional)
    rigid = np.concatenate([basis.rigid_rows(face_id) for face_id in dofs.mesh.face_ids])
    coordinates = basis.coordinates[rigid].toarray()
    if coordinates.size == 0 or not np.any(coordinates):
        functionals = np.zeros(0)
    else:
        functionals = la.orth(coordinates).T @ reduced[rigid]
    scale = max(1.0, float(np.max(np.abs(reduced[rigid]))))
    report = AdmissibilityReport.from_values(transverse, functionals, tolerance * scale)
    if report.success:
        logger.info(report.message)
    else:
        logger.warning(report.message)
    return report


def solve_membrane(
    dofs: MembraneBendingDofs,
    gram: RhoGram,
    operator: sp.spmatrix,
    forces: ForceModel,
    basis: InextensionalBasis,
    check: bool = True,
    threshold: int = ITERATIVE_THRESHOLD,
) -> Tuple[np.ndarray, SolverResult]:
    """Extensional displacement U_E in full dofs.

    Raises:
        AdmissibilityError: f_E has a transverse part or works on D_I.

    """
    if check:
        report = check_force_admissibility(dofs, basis, forces)
        if not report.success:
            logger.error(report.message)
            raise AdmissibilityError(
                "{} Violated functionals: {}, values {}.".format(
                    report.message, report.violated, report.functionals[report.violated]
                )
            )

    logger.info("Start membrane solver.")
    clamped = dofs.clamped_basis.basis
    load = clamped.T @ load_vector(dofs, forces.extensional)
    stiffness = (clamped.T @ operator @ clamped).tocsr()
    if basis.dimension > 0:
        coupling = (basis.basis.T @ gram.full @ clamped).tocsr()
        system = sp.bmat([[stiffness, coupling.T], [coupling, None]], format="csc")
        rhs = np.concatenate([load, np.zeros(basis.dimension)])
    else:
        system, rhs = stiffness, load
    solution, result = solve_linear(system, rhs, definite=basis.dimension == 0, threshold=threshold)
    extensional = clamped @ solution[:clamped.shape[1]]
    logger.info(
        "Membrane solver finished with relative residual %s.", str(result.residual)
    )
    return extensional, result


def membrane_energy(operator: sp.spmatrix, x: np.ndarray) -> np.float64:
    return np.float64(x @ (operator @ x))


def orthogonality_defect(
    gram: RhoGram, basis: InextensionalBasis, x: np.ndarray, norm: Optional[float] = None
) -> np.float64:
    """Largest |<x, T_k>_rho| over the D_I basis, relative to |x|_rho."""
    if basis.dimension == 0:
        return np.float64(0.0)
    products = basis.basis.T @ (gram.full @ x)
    scale = norm if norm is not None else np.sqrt(max(float(gram.norm_sq(x)), 1e-300))
    columns = basis.basis.multiply(gram.full @ basis.basis).sum(axis=0)
    columns = np.sqrt(np.maximum(np.asarray(columns).ravel(), 1e-300))
    return np.float64(np.max(np.abs(products) / columns) / scale)


if __name__ == "__main__":
    logger.info("This is the file for the membrane problem.")
