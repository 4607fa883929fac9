# -*- coding: utf-8 -*-

"""Limit stresses and the complete limit solve.

The in-plane limit stresses are affine in the rescaled thickness variable
t3, with the constant part from the membrane strains of U_E and the slope
from the second derivatives of U_I3. The transverse stresses vanish.

"""

from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from platestruct.core import AdmissibilityError
from platestruct.fields import Material
from platestruct.helper import get_logger, save_rows
from platestruct.skeleton import Skeleton
from platestruct.solvers.bending import assemble_bending, bending_energy, solve_bending
from platestruct.solvers.core import (
    ITERATIVE_THRESHOLD,
    ForceModel,
    LimitSolution,
    nodal_displacements,
)
from platestruct.solvers.membrane import (
    assemble_membrane,
    check_force_admissibility,
    membrane_energy,
    solve_membrane,
)
from platestruct.spaces.core import (
    MembraneBendingDofs,
    build_spaces,
    element_hessians,
    element_strains,
    inextensional_basis,
    limit_inextensional_basis,
)

# Initialize global logger
logger = get_logger(__name__)

STRESS_LEVELS = (-1.0, 0.0, 1.0)


@dataclass
class LimitStress:
    """Element-wise limit fields of one face.

    sigma holds (s11, s22, s12) per level and element, transverse the
    derivative of the third residual component with respect to t3.

    """

    face_id: int
    centers: np.ndarray
    levels: np.ndarray
    sigma: np.ndarray
    transverse: np.ndarray


def limit_stress(
    dofs: MembraneBendingDofs,
    extensional: np.ndarray,
    inextensional: np.ndarray,
    material: Material,
    levels: Sequence[float] = STRESS_LEVELS,
) -> Dict[int, LimitStress]:
    levels = np.asarray(levels, dtype=np.float64)
    modulus = material.plane_stress_modulus
    poisson = material.poisson
    strains = element_strains(dofs, extensional)
    hessians = element_hessians(dofs, inextensional)

    result = dict()
    for face_id, face_mesh in dofs.mesh.faces.items():
        g11, g22, g12 = strains[face_id].T
        w11, w22, w12 = hessians[face_id].T
        t3 = levels[:, None]
        sigma = np.stack(
            [
                modulus * ((g11 + poisson * g22) - t3 * (w11 + poisson * w22)),
                modulus * ((g22 + poisson * g11) - t3 * (w22 + poisson * w11)),
                2.0 * material.mu * (g12 - t3 * w12),
            ],
            axis=2,
        )
        transverse = material.transverse_ratio * (-(g11 + g22) + t3 * (w11 + w22))
        result[face_id] = LimitStress(
            face_id=face_id,
            centers=face_mesh.p1.vertices.mean(axis=1),
            levels=levels,
            sigma=sigma,
            transverse=transverse,
        )
    return result


def solve_limit(
    skeleton: Skeleton,
    material: Material,
    forces: ForceModel,
    mesh_size: float = 0.125,
    grading: bool = True,
    check: bool = True,
    threshold: int = ITERATIVE_THRESHOLD,
) -> LimitSolution:
    """Build the spaces, check f_E and solve both limit problems."""
    _, dofs, gram = build_spaces(skeleton, mesh_size, grading)
    basis = inextensional_basis(dofs, gram)
    admissibility = check_force_admissibility(dofs, basis, forces)
    if check and not admissibility.success:
        logger.error(admissibility.message)
        raise AdmissibilityError(
            "{} Violated functionals: {}.".format(admissibility.message, admissibility.violated)
        )

    operator = assemble_membrane(dofs, material)
    extensional, membrane = solve_membrane(
        dofs, gram, operator, forces, basis, check=False, threshold=threshold
    )

    limit = limit_inextensional_basis(dofs, gram)
    bending_operator = assemble_bending(dofs, material, limit)
    inextensional, coordinates, bending = solve_bending(
        dofs, bending_operator, forces, limit, threshold=threshold
    )
    return LimitSolution(
        dofs=dofs,
        gram=gram,
        material=material,
        forces=forces,
        extensional=extensional,
        inextensional=inextensional,
        coordinates=coordinates,
        basis=limit,
        membrane=membrane,
        bending=bending,
        admissibility=admissibility,
        metadata={
            "mesh_size": mesh_size,
            "dofs": dofs.size,
            "inextensional_dimension": basis.dimension,
            "limit_dimension": limit.dimension,
            "membrane_energy": membrane_energy(operator, extensional),
            "bending_energy": bending_energy(bending_operator, coordinates),
        },
    )


def export_solution(
    solution: LimitSolution,
    directory: Union[str, Path],
    comments: Optional[List[str]] = None,
) -> List[Path]:
    """Write nodes, stresses and a summary as CSV files.

    Per face the nodes file holds global coordinates, U_E in global
    components, U_I3 and the rotation of U_I in global components; the
    stress file holds element centers and the limit fields per level.

    """
    directory = Path(directory)
    dofs = solution.dofs
    comments = list(comments or [])
    displacements = nodal_displacements(dofs, solution.extensional)
    rotations = (
        solution.basis.rotation(solution.coordinates)
        if solution.coordinates.size
        else {face_id: np.zeros((m.n_nodes, 3)) for face_id, m in dofs.mesh.faces.items()}
    )
    stresses = limit_stress(dofs, solution.extensional, solution.inextensional, solution.material)

    files = list()
    for face_id, face_mesh in dofs.mesh.faces.items():
        deflection = solution.inextensional[dofs.deflection(face_id)]
        rows = np.column_stack(
            [
                face_mesh.points_global,
                displacements[face_id],
                deflection,
                rotations[face_id],
            ]
        )
        filename = directory / "face_{}_nodes.csv".format(face_id)
        save_rows(
            filename,
            ["x", "y", "z", "ue_x", "ue_y", "ue_z", "ui_3", "rot_x", "rot_y", "rot_z"],
            rows.tolist(),
            comments=comments,
        )
        files.append(filename)

        stress = stresses[face_id]
        stress_rows: List[List[Any]] = list()
        for k, level in enumerate(stress.levels):
            for center, sigma, transverse in zip(
                stress.centers, stress.sigma[k], stress.transverse[k]
            ):
                stress_rows.append([level, *center.tolist(), *sigma.tolist(), transverse])
        filename = directory / "face_{}_stress.csv".format(face_id)
        save_rows(
            filename,
            ["t3", "x1", "x2", "s11", "s22", "s12", "du3_dt3"],
            stress_rows,
            comments=comments,
        )
        files.append(filename)

    filename = directory / "summary.csv"
    summary = [
        ["dofs", dofs.size],
        ["inextensional_dimension", solution.metadata.get("inextensional_dimension")],
        ["limit_dimension", solution.basis.dimension],
        ["admissible", solution.admissibility.success],
        ["membrane_residual", solution.membrane.residual],
        ["bending_residual", solution.bending.residual],
        ["membrane_work", solution.membrane_work],
        ["bending_work", solution.bending_work],
        ["max_displacement_I", solution.max_deflection],
    ]
    save_rows(filename, ["quantity", "value"], summary, comments=comments)
    files.append(filename)
    logger.info("Limit solution written to %s.", str(directory))
    return files


if __name__ == "__main__":
    logger.info("This is the file for the limit stresses.")
