# -*- coding: utf-8 -*-

"""Core library of the limit solvers.

Force models, load vectors, the sparse linear solve shared by the membrane
and bending problems and the result containers.

"""

from __future__ import annotations
import inspect
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Type, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from platestruct.core import BaseResultClass, ConfigError, SolverError, SolverResult
from platestruct.fields import Material
from platestruct.helper import get_logger
from platestruct.spaces.core import LimitInextensionalBasis, MembraneBendingDofs, RhoGram
from platestruct.spaces.elements import MIDPOINT_RULE, scatter_vector

# Initialize global logger
logger = get_logger(__name__)

ForceField = Callable[[np.ndarray], np.ndarray]

ITERATIVE_THRESHOLD = 200000
RESIDUAL_TOLERANCE = 1e-10
REFINEMENT_STEPS = 2

EXPRESSION_NAMESPACE = {
    "pi": np.pi,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


# Force classes
def constant_force(vector: Sequence[float]) -> ForceField:
    vector = np.asarray(vector, dtype=np.float64)

    def force(points: np.ndarray) -> np.ndarray:
        return np.tile(vector, (np.atleast_2d(points).shape[0], 1))

    return force


def expression_force(expressions: Sequence[str]) -> ForceField:
    """Force from three expressions in the local coordinates x1, x2."""
    try:
        codes = [compile(str(expr), "<force>", "eval") for expr in expressions]
    except SyntaxError as error:
        logger.error("Force expression can't be parsed: %s.", error)
        raise ConfigError("Force expression can't be parsed: {}.".format(error)) from error

    def force(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        namespace = dict(EXPRESSION_NAMESPACE, x1=points[:, 0], x2=points[:, 1])
        columns = [
            np.broadcast_to(eval(code, {"__builtins__": {}}, namespace), points.shape[0])
            for code in codes
        ]
        return np.column_stack(columns).astype(np.float64)

    return force


def _parse_force(value: Any) -> ForceField:
    if callable(value):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 3:
        if all(isinstance(v, (int, float)) for v in value):
            return constant_force(value)
        return expression_force(value)
    logger.error("Force must be three numbers or expressions, got %s.", value)
    raise ConfigError("Force must be three numbers or expressions, got {}.".format(value))


class ForceModel:
    """Forces per face in local components.

    The 3D load is delta f_I + f_E on the thickened plates. f_I drives the
    bending problem, f_E the membrane problem.

    """

    def __init__(
        self: ForceModel,
        f_I: Optional[Mapping[int, ForceField]] = None,
        f_E: Optional[Mapping[int, ForceField]] = None,
    ):
        """Initialize ForceModel class.

        Init function of the ForceModel class.

        """
        self._f_I = dict(f_I or dict())
        self._f_E = dict(f_E or dict())

    @classmethod
    def from_config(cls: Type[ForceModel], config: Mapping[str, Any]) -> ForceModel:
        """Forces from {"f_I": {face: force}, "f_E": {face: force}}.

        A force is three numbers or three expressions in x1, x2. The face key
        "default" applies to faces without their own entry.

        """
        parsed = dict()
        for name in ("f_I", "f_E"):
            entries = config.get(name, dict()) or dict()
            if not isinstance(entries, Mapping):
                logger.error("Forces %s must map faces to forces.", name)
                raise ConfigError("Forces {} must map faces to forces.".format(name))
            parsed[name] = {
                (key if key == "default" else int(key)): _parse_force(value)
                for key, value in entries.items()
            }
        return cls(parsed["f_I"], parsed["f_E"])

    @property
    def f_I(self: ForceModel) -> Dict[Union[int, str], ForceField]:
        return self._f_I

    @property
    def f_E(self: ForceModel) -> Dict[Union[int, str], ForceField]:
        return self._f_E

    def _lookup(self: ForceModel, forces: Mapping, face_id: int) -> Optional[ForceField]:
        if face_id in forces:
            return forces[face_id]
        return forces.get("default")

    def inextensional(self: ForceModel, face_id: int, points: np.ndarray) -> np.ndarray:
        force = self._lookup(self._f_I, face_id)
        return np.zeros((np.atleast_2d(points).shape[0], 3)) if force is None else force(points)

    def extensional(self: ForceModel, face_id: int, points: np.ndarray) -> np.ndarray:
        force = self._lookup(self._f_E, face_id)
        return np.zeros((np.atleast_2d(points).shape[0], 3)) if force is None else force(points)

    def global_force(self: ForceModel, face, points2d: np.ndarray, delta: float) -> np.ndarray:
        """delta f_I + f_E in global components at local points of a face."""
        local = delta * self.inextensional(face.id, points2d) + self.extensional(face.id, points2d)
        return face.vectors_to_global(local)


def load_vector(
    dofs: MembraneBendingDofs, force: Callable[[int, np.ndarray], np.ndarray]
) -> np.ndarray:
    """Full-dof load of int f . V over the skeleton, f in local components."""
    bary, weights = MIDPOINT_RULE
    result = np.zeros(dofs.size)
    for face_id, face_mesh in dofs.mesh.faces.items():
        points = face_mesh.p1.points(bary)
        m, q = points.shape[:2]
        values = np.asarray(force(face_id, points.reshape(-1, 2))).reshape(m, q, 3)
        factor = face_mesh.p1.areas[:, None] * weights[None, :]
        membrane = np.einsum("mq,qi,mqa->mia", factor, bary, values[:, :, :2]).reshape(m, 6)
        bending = np.einsum("mq,mqj,mq->mj", factor, face_mesh.morley.values(points), values[:, :, 2])
        result += scatter_vector(dofs.membrane_element_dofs(face_id), membrane, dofs.size)
        result += scatter_vector(dofs.morley_element_dofs(face_id), bending, dofs.size)
    return result


def nodal_displacements(dofs: MembraneBendingDofs, x: np.ndarray) -> Dict[int, np.ndarray]:
    """Nodal displacements per face in global components."""
    result = dict()
    for face_id, face_mesh in dofs.mesh.faces.items():
        local = np.column_stack([x[dofs.membrane(face_id)], x[dofs.deflection(face_id)]])
        result[face_id] = face_mesh.face.vectors_to_global(local)
    return result


# Linear solves
def _relative_residual(matrix: sp.spmatrix, x: np.ndarray, rhs: np.ndarray) -> np.float64:
    scale = max(float(np.linalg.norm(rhs)), 1e-300)
    return np.float64(np.linalg.norm(matrix @ x - rhs) / scale)


def solve_linear(
    matrix: sp.spmatrix,
    rhs: np.ndarray,
    definite: bool = True,
    threshold: int = ITERATIVE_THRESHOLD,
    tol: float = RESIDUAL_TOLERANCE,
) -> Tuple[np.ndarray, SolverResult]:
    """Solve a sparse symmetric system.

    Systems below the threshold are factorized, followed by up to
    REFINEMENT_STEPS refinement steps. Larger definite systems use
    conjugate gradients with a Jacobi preconditioner, indefinite ones minres.

    """
    matrix = sp.csc_matrix(matrix)
    n = matrix.shape[0]
    if n == 0:
        return np.zeros(0), SolverResult.from_success(0.0)
    if not np.any(rhs):
        return np.zeros(n), SolverResult.from_success(0.0)

    if n < threshold:
        logger.debug("Factorize system with %d unknowns.", n)
        try:
            factor = spla.splu(matrix)
        except RuntimeError as error:
            logger.error("System matrix is singular: %s.", error)
            raise SolverError("System matrix is singular: {}.".format(error)) from error
        x = factor.solve(rhs)
        nit = 0
        # Iterative refinement with the same factorization
        for _ in range(REFINEMENT_STEPS):
            if not np.all(np.isfinite(x)) or _relative_residual(matrix, x, rhs) <= tol:
                break
            x = x + factor.solve(rhs - matrix @ x)
            nit += 1
    else:
        logger.info("Iterative solve with %d unknowns.", n)
        iterations = list()
        diagonal = matrix.diagonal()
        diagonal[np.abs(diagonal) < 1e-300] = 1.0
        preconditioner = spla.LinearOperator(matrix.shape, matvec=lambda v: v / diagonal)
        method = spla.cg if definite else spla.minres
        # Older scipy releases call the relative tolerance tol
        keyword = "rtol" if "rtol" in inspect.signature(method).parameters else "tol"
        x, info = method(
            matrix, rhs, M=preconditioner if definite else None,
            callback=lambda _: iterations.append(1), maxiter=10 * n,
            **{keyword: 0.1 * tol},
        )
        if info < 0:
            logger.error("Iterative solver failed with code %d.", info)
            raise SolverError("Iterative solver failed with code {}.".format(info))
        nit = len(iterations)

    if not np.all(np.isfinite(x)):
        logger.error("System matrix is singular.")
        raise SolverError("System matrix is singular.")
    residual = _relative_residual(matrix, x, rhs)
    if residual > tol:
        logger.warning("Relative residual %s above tolerance %s.", residual, tol)
        return x, SolverResult.from_convergence(residual, nit)
    return x, SolverResult.from_success(residual, nit)


# Admissibility
@dataclass
class AdmissibilityReport(BaseResultClass):
    success: bool
    status: np.int8
    message: str
    transverse: Dict[int, float]
    functionals: np.ndarray
    violated: List[int]

    @classmethod
    def from_values(
        cls: Type[AdmissibilityReport],
        transverse: Dict[int, float],
        functionals: np.ndarray,
        tolerance: float,
    ) -> AdmissibilityReport:
        faces = [face_id for face_id, value in transverse.items() if value > tolerance]
        violated = [int(i) for i in np.flatnonzero(np.abs(functionals) > tolerance)]
        if faces or violated:
            message = "Membrane load isn't admissible:"
            if faces:
                message += " transverse component on faces {}.".format(faces)
            if violated:
                message += " {} of {} compatibility functionals nonzero.".format(
                    len(violated), functionals.size
                )
            return cls(False, np.int8(1), message, transverse, functionals, violated)
        return cls(True, np.int8(0), "Membrane load is admissible.", transverse, functionals, violated)


# Solutions
@dataclass
class LimitSolution:
    """Solution (U_E, U_I) of the limit problems in full dofs."""

    dofs: MembraneBendingDofs
    gram: RhoGram
    material: Material
    forces: ForceModel
    extensional: np.ndarray
    inextensional: np.ndarray
    coordinates: np.ndarray
    basis: LimitInextensionalBasis
    membrane: SolverResult
    bending: SolverResult
    admissibility: AdmissibilityReport
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def membrane_work(self: LimitSolution) -> np.float64:
        return np.float64(load_vector(self.dofs, self.forces.extensional) @ self.extensional)

    @property
    def bending_work(self: LimitSolution) -> np.float64:
        return np.float64(load_vector(self.dofs, self.forces.inextensional) @ self.inextensional)

    @property
    def max_deflection(self: LimitSolution) -> np.float64:
        values = nodal_displacements(self.dofs, self.inextensional)
        return np.float64(max(np.max(np.linalg.norm(v, axis=1)) for v in values.values()))


if __name__ == "__main__":
    logger.info("This is the file for the core library of the limit solvers.")
