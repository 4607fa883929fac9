# -*- coding: utf-8 -*-

"""Discrete function spaces on a skeleton.

The full space carries P1 membrane displacements and Morley deflections per
face, in local components. Continuity across junction edges, clamping and
inextensionality are linear constraints which are eliminated exactly: the
constrained spaces are images of sparse basis matrices T acting on
coordinates.

"""

from __future__ import annotations
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, DefaultDict, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from platestruct.core import HypothesisError, SpaceError
from platestruct.helper import get_logger, save_rows
from platestruct.skeleton import Skeleton, validate_hypotheses
from platestruct.spaces.elements import (
    GRAM_MEMBRANE_MATRIX,
    MIDPOINT_RULE,
    scatter,
)
from platestruct.spaces.mesh import SkeletonMesh, mesh_skeleton

# Initialize global logger
logger = get_logger(__name__)

ZERO_TOLERANCE = 1e-13

Row = DefaultDict[int, float]
VectorRows = List[Row]
Field = Callable[[int, np.ndarray], np.ndarray]


# Dof layout
class MembraneBendingDofs:
    """Dof layout of the full discrete space.

    Per face the dofs are ordered as membrane displacements (u1, u2) per
    node, deflections per node and normal derivatives per mesh edge.

    """

    def __init__(self: MembraneBendingDofs, mesh: SkeletonMesh):
        """Initialize MembraneBendingDofs class.

        Init function of the MembraneBendingDofs class.

        """
        self._mesh = mesh
        self._offsets = dict()
        self._node_offsets = dict()
        offset, node_offset = 0, 0
        for face_id, face_mesh in mesh.faces.items():
            self._offsets[face_id] = offset
            self._node_offsets[face_id] = node_offset
            offset += 3 * face_mesh.n_nodes + face_mesh.n_edges
            node_offset += face_mesh.n_nodes
        self._size = offset
        self._n_nodes = node_offset
        self._clamped_basis = None

    @property
    def mesh(self: MembraneBendingDofs) -> SkeletonMesh:
        return self._mesh

    @property
    def skeleton(self: MembraneBendingDofs) -> Skeleton:
        return self._mesh.skeleton

    @property
    def size(self: MembraneBendingDofs) -> int:
        return self._size

    @property
    def n_nodes(self: MembraneBendingDofs) -> int:
        """Number of face nodes, counted per face."""
        return self._n_nodes

    def node_offset(self: MembraneBendingDofs, face_id: int) -> int:
        return self._node_offsets[face_id]

    def membrane(self: MembraneBendingDofs, face_id: int) -> np.ndarray:
        n = self._mesh.faces[face_id].n_nodes
        return self._offsets[face_id] + np.arange(2 * n).reshape(n, 2)

    def deflection(self: MembraneBendingDofs, face_id: int) -> np.ndarray:
        n = self._mesh.faces[face_id].n_nodes
        return self._offsets[face_id] + 2 * n + np.arange(n)

    def normal(self: MembraneBendingDofs, face_id: int) -> np.ndarray:
        face_mesh = self._mesh.faces[face_id]
        return self._offsets[face_id] + 3 * face_mesh.n_nodes + np.arange(face_mesh.n_edges)

    def face_slice(self: MembraneBendingDofs, face_id: int) -> slice:
        face_mesh = self._mesh.faces[face_id]
        start = self._offsets[face_id]
        return slice(start, start + 3 * face_mesh.n_nodes + face_mesh.n_edges)

    def membrane_element_dofs(self: MembraneBendingDofs, face_id: int) -> np.ndarray:
        triangles = self._mesh.faces[face_id].triangles
        return self.membrane(face_id)[triangles].reshape(-1, 6)

    def morley_element_dofs(self: MembraneBendingDofs, face_id: int) -> np.ndarray:
        face_mesh = self._mesh.faces[face_id]
        return np.hstack(
            [
                self.deflection(face_id)[face_mesh.triangles],
                self.normal(face_id)[face_mesh.triangle_edges],
            ]
        )

    @property
    def clamped_basis(self: MembraneBendingDofs) -> ConstrainedBasis:
        """Basis of the continuous, clamped fields H1_rho,Gamma0."""
        if self._clamped_basis is None:
            rows = ConstraintRows(self._size)
            add_continuity_rows(self, rows)
            add_clamping_rows(self, rows)
            self._clamped_basis = ConstrainedBasis(rows.matrix(), self._size)
            logger.debug(
                "Clamped space has dimension %d of %d.",
                self._clamped_basis.dimension, self._size,
            )
        return self._clamped_basis


# Constraints
class ConstraintRows:
    def __init__(self: ConstraintRows, n_columns: int):
        """Initialize ConstraintRows class.

        Init function of the ConstraintRows class.

        """
        self._n_columns = n_columns
        self._rows: List[Row] = list()

    def __len__(self: ConstraintRows) -> int:
        return len(self._rows)

    def add(self: ConstraintRows, row: Row):
        if row:
            self._rows.append(row)

    def add_vector(self: ConstraintRows, rows: VectorRows):
        for row in rows:
            self.add(row)

    def matrix(self: ConstraintRows) -> sp.csr_matrix:
        indices = [(i, col, val) for i, row in enumerate(self._rows) for col, val in row.items()]
        if not indices:
            return sp.csr_matrix((0, self._n_columns))
        i, j, v = (np.asarray(x) for x in zip(*indices))
        return sp.coo_matrix(
            (v.astype(np.float64), (i, j)), shape=(len(self._rows), self._n_columns)
        ).tocsr()


def _combine(first: VectorRows, second: VectorRows, sign: float = -1.0) -> VectorRows:
    result = list()
    for a, b in zip(first, second):
        row: Row = defaultdict(float)
        for col, val in a.items():
            row[col] += val
        for col, val in b.items():
            row[col] += sign * val
        result.append(row)
    return result


def _to_global(dofs: MembraneBendingDofs, face_id: int, local: VectorRows) -> VectorRows:
    frame = dofs.mesh.faces[face_id].face.frame
    result = list()
    for k in range(3):
        row: Row = defaultdict(float)
        for c in range(3):
            if frame[k, c] != 0.0:
                for col, val in local[c].items():
                    row[col] += frame[k, c] * val
        result.append(row)
    return result


def node_displacement_rows(dofs: MembraneBendingDofs, face_id: int, node: int) -> VectorRows:
    """Global displacement components of a face node as linear forms."""
    membrane = dofs.membrane(face_id)[node]
    local = [
        defaultdict(float, {int(membrane[0]): 1.0}),
        defaultdict(float, {int(membrane[1]): 1.0}),
        defaultdict(float, {int(dofs.deflection(face_id)[node]): 1.0}),
    ]
    return _to_global(dofs, face_id, local)


def segment_rotation_rows(dofs: MembraneBendingDofs, face_id: int, edge: int) -> VectorRows:
    """Global rotation (d2 w, -d1 w, theta) at the midpoint of a mesh edge.

    The gradient of the deflection combines the normal derivative dof with
    the exact tangential derivative of the edge-wise quadratic. The in-plane
    rotation is taken from a triangle containing the edge.

    """
    face_mesh = dofs.mesh.faces[face_id]
    lo, hi = face_mesh.edges[edge]
    t = face_mesh.edge_tangents[edge]
    n = face_mesh.edge_normals[edge]
    length = face_mesh.edge_lengths[edge]
    wn = int(dofs.normal(face_id)[edge])
    w_lo, w_hi = (int(i) for i in dofs.deflection(face_id)[[lo, hi]])

    # d_alpha w = n_alpha wn + t_alpha (w_hi - w_lo) / length
    def derivative(alpha: int, sign: float) -> Row:
        row: Row = defaultdict(float)
        row[wn] += sign * n[alpha]
        row[w_hi] += sign * t[alpha] / length
        row[w_lo] -= sign * t[alpha] / length
        return row

    elements, _ = face_mesh.edge_element
    element = elements[edge]
    curl = face_mesh.p1.curl_matrices()[element]
    membrane = dofs.membrane(face_id)[face_mesh.triangles[element]].ravel()
    theta: Row = defaultdict(float)
    for col, val in zip(membrane, curl):
        theta[int(col)] += val
    return _to_global(dofs, face_id, [derivative(1, 1.0), derivative(0, -1.0), theta])


def add_continuity_rows(dofs: MembraneBendingDofs, rows: ConstraintRows):
    for pair in dofs.mesh.node_pairs:
        rows.add_vector(
            _combine(
                node_displacement_rows(dofs, *pair.first),
                node_displacement_rows(dofs, *pair.second),
            )
        )


def add_clamping_rows(dofs: MembraneBendingDofs, rows: ConstraintRows):
    for face_id, face_mesh in dofs.mesh.faces.items():
        nodes = np.flatnonzero(face_mesh.clamped_nodes)
        for col in np.concatenate(
            [dofs.membrane(face_id)[nodes].ravel(), dofs.deflection(face_id)[nodes]]
        ):
            rows.add(defaultdict(float, {int(col): 1.0}))


def add_rotation_rows(dofs: MembraneBendingDofs, rows: ConstraintRows):
    for pair in dofs.mesh.segment_pairs:
        rows.add_vector(
            _combine(
                segment_rotation_rows(dofs, *pair.first),
                segment_rotation_rows(dofs, *pair.second),
            )
        )
    for face_id, face_mesh in dofs.mesh.faces.items():
        for edge in np.flatnonzero(face_mesh.clamped_edges):
            rows.add_vector(segment_rotation_rows(dofs, face_id, int(edge)))


class ConstrainedBasis:
    """Basis of the null space of sparse constraints.

    Rows that pin a single dof are eliminated iteratively. The remaining
    rows only touch a few dofs near junctions, their null space is computed
    densely on that block.

    """

    def __init__(
        self: ConstrainedBasis,
        constraints: sp.spmatrix,
        size: int,
        rcond: float = 1e-10,
    ):
        """Initialize ConstrainedBasis class.

        Init function of the ConstrainedBasis class.

        Args:
            constraints: Constraint matrix (rows, size).
            size: Number of unconstrained coordinates.
            rcond: Relative singular value cut-off of the dense block.

        """
        c = sp.csr_matrix(constraints, dtype=np.float64)
        if c.shape[1] != size:
            logger.error("Constraints have %d columns, expected %d.", c.shape[1], size)
            raise SpaceError(
                "Constraints have {} columns, expected {}.".format(c.shape[1], size)
            )
        c = c.copy()
        if c.nnz > 0:
            row_max = np.asarray(abs(c).max(axis=1).todense()).ravel()
            scale = np.repeat(row_max, np.diff(c.indptr))
            c.data[np.abs(c.data) <= ZERO_TOLERANCE * scale] = 0.0
            c.eliminate_zeros()
        n_rows = int(np.sum(np.diff(c.indptr) > 0))

        fixed = np.zeros(size, dtype=bool)
        active = np.diff(c.indptr) > 0
        while True:
            current = (c @ sp.diags((~fixed).astype(np.float64))).tocsr()
            current.eliminate_zeros()
            counts = np.diff(current.indptr)
            active &= counts > 0
            single = active & (counts == 1)
            if not np.any(single):
                break
            fixed[current[single].indices] = True
            active[single] = False

        block = current[active]
        involved = np.unique(block.indices)
        self._dependent_rows = np.zeros(0, dtype=np.int64)
        if involved.size > 0:
            dense = block[:, involved].toarray()
            null = la.null_space(dense, rcond=rcond)
            rank = involved.size - null.shape[1]
            _, _, pivots = la.qr(dense.T, pivoting=True, mode="economic")
            self._dependent_rows = np.sort(np.flatnonzero(active)[pivots[rank:]])
        else:
            null = np.zeros((0, 0))
            rank = 0

        is_involved = np.zeros(size, dtype=bool)
        is_involved[involved] = True
        free = np.flatnonzero(~fixed & ~is_involved)
        null[np.abs(null) < ZERO_TOLERANCE] = 0.0
        null_rows, null_cols = np.nonzero(null)
        self._basis = sp.coo_matrix(
            (
                np.concatenate([np.ones(free.size), null[null_rows, null_cols]]),
                (
                    np.concatenate([free, involved[null_rows]]),
                    np.concatenate([np.arange(free.size), free.size + null_cols]),
                ),
            ),
            shape=(size, free.size + null.shape[1]),
        ).tocsr()
        self._fixed = fixed
        self._rank = int(fixed.sum()) + rank
        self._redundant = n_rows - self._rank
        self._block_size = int(involved.size)

    @property
    def basis(self: ConstrainedBasis) -> sp.csr_matrix:
        return self._basis

    @property
    def dimension(self: ConstrainedBasis) -> int:
        return self._basis.shape[1]

    @property
    def fixed(self: ConstrainedBasis) -> np.ndarray:
        return self._fixed

    @property
    def rank(self: ConstrainedBasis) -> int:
        return self._rank

    @property
    def redundant(self: ConstrainedBasis) -> int:
        """Number of constraint rows implied by the others."""
        return self._redundant

    @property
    def dependent_rows(self: ConstrainedBasis) -> np.ndarray:
        """Ids of the constraint rows implied by the others."""
        return self._dependent_rows

    def report_dependent_rows(self: ConstrainedBasis, name: str) -> None:
        """Log a rank deficiency with the offending constraint ids."""
        if self._redundant > 0:
            logger.warning(
                "%s constraints are rank deficient, %d dependent rows: %s.",
                name, self._redundant, self._dependent_rows.tolist(),
            )

    @property
    def block_size(self: ConstrainedBasis) -> int:
        return self._block_size


# Gram matrices
@dataclass
class RhoGram:
    """Matrices of the weighted inner product on the full space.

    full is <U, V>_rho = sum int gamma(U):gamma(V) + rho grad U3 . grad V3,
    membrane holds the strain part alone, the extensional norm.

    """

    full: sp.csr_matrix
    membrane: sp.csr_matrix
    deflection: sp.csr_matrix

    def inner(self: RhoGram, x: np.ndarray, y: np.ndarray) -> np.float64:
        return np.float64(x @ (self.full @ y))

    def norm_sq(self: RhoGram, x: np.ndarray) -> np.float64:
        return self.inner(x, x)


def assemble_gram(dofs: MembraneBendingDofs) -> RhoGram:
    membrane = sp.csr_matrix((dofs.size, dofs.size))
    deflection = sp.csr_matrix((dofs.size, dofs.size))
    for face_id, face_mesh in dofs.mesh.faces.items():
        membrane = membrane + scatter(
            dofs.membrane_element_dofs(face_id),
            face_mesh.p1.stiffness(GRAM_MEMBRANE_MATRIX),
            dofs.size,
        )
        points = face_mesh.p1.points(MIDPOINT_RULE[0])
        weights = dofs.skeleton.rho(face_id, points.reshape(-1, 2)).reshape(points.shape[:2])
        deflection = deflection + scatter(
            dofs.morley_element_dofs(face_id),
            face_mesh.morley.weighted_gradient_gram(
                face_mesh.p1.areas, points, weights, MIDPOINT_RULE
            ),
            dofs.size,
        )
    return RhoGram(full=(membrane + deflection).tocsr(), membrane=membrane, deflection=deflection)


def gram_min_eigenvalue(dofs: MembraneBendingDofs, gram: RhoGram) -> np.float64:
    """Smallest eigenvalue of the Gram matrix on the clamped space."""
    t = dofs.clamped_basis.basis
    reduced = (t.T @ gram.full @ t).tocsc()
    value = spla.eigsh(reduced, k=1, sigma=0.0, which="LM", return_eigenvectors=False)
    return np.float64(value[0])


def build_spaces(
    skeleton: Skeleton, mesh_size: float, grading: bool = True
) -> Tuple[SkeletonMesh, MembraneBendingDofs, RhoGram]:
    """Mesh a validated skeleton and assemble the weighted Gram matrix."""
    report = validate_hypotheses(skeleton)
    if not report.success:
        failed = [name for name, ok in report.hypotheses.items() if not ok]
        logger.error("Skeleton violates hypotheses %s.", failed)
        raise HypothesisError("Skeleton violates hypotheses {}.".format(failed))
    mesh = mesh_skeleton(skeleton, mesh_size, grading)
    dofs = MembraneBendingDofs(mesh)
    gram = assemble_gram(dofs)
    logger.info(
        "Spaces built with %d faces, %d dofs, mesh size %s.",
        len(mesh.faces), dofs.size, mesh_size,
    )
    return mesh, dofs, gram


# Inextensional spaces
def rigid_membrane_map(dofs: MembraneBendingDofs) -> Tuple[sp.csr_matrix, Dict[int, int]]:
    """Map from reduced coordinates to full dofs.

    Per face the reduced coordinates are the in-plane rigid motion
    (a1, a2, theta), the deflections and the normal derivatives. The
    membrane dofs follow u = (a1 - theta x2, a2 + theta x1).

    """
    rows, cols, vals = list(), list(), list()
    offsets = dict()
    offset = 0
    for face_id, face_mesh in dofs.mesh.faces.items():
        offsets[face_id] = offset
        x = face_mesh.points
        membrane = dofs.membrane(face_id)
        n = face_mesh.n_nodes
        rows += [membrane[:, 0], membrane[:, 0], membrane[:, 1], membrane[:, 1]]
        cols += [np.full(n, offset), np.full(n, offset + 2), np.full(n, offset + 1), np.full(n, offset + 2)]
        vals += [np.ones(n), -x[:, 1], np.ones(n), x[:, 0]]
        bending = np.concatenate([dofs.deflection(face_id), dofs.normal(face_id)])
        rows.append(bending)
        cols.append(offset + 3 + np.arange(bending.size))
        vals.append(np.ones(bending.size))
        offset += 3 + bending.size
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dofs.size, offset),
    ).tocsr()
    return matrix, offsets


class InextensionalBasis:
    """Basis T of the discrete inextensional space D_I.

    Fields of D_I have rigid in-plane motions per face, are continuous
    across junction edges and vanish on the clamped edges.

    """

    def __init__(self: InextensionalBasis, dofs: MembraneBendingDofs, gram: RhoGram):
        """Initialize InextensionalBasis class.

        Init function of the InextensionalBasis class.

        """
        self._dofs = dofs
        self._gram = gram
        self._reduction, self._reduced_offsets = rigid_membrane_map(dofs)
        rows = ConstraintRows(dofs.size)
        add_continuity_rows(dofs, rows)
        add_clamping_rows(dofs, rows)
        self._constrained = ConstrainedBasis(rows.matrix() @ self._reduction, self._reduction.shape[1])
        self._basis = (self._reduction @ self._constrained.basis).tocsr()
        self._factor = None
        self._orthonormal = None
        logger.info("Inextensional space has dimension %d.", self.dimension)

    @property
    def dofs(self: InextensionalBasis) -> MembraneBendingDofs:
        return self._dofs

    @property
    def basis(self: InextensionalBasis) -> sp.csr_matrix:
        return self._basis

    @property
    def dimension(self: InextensionalBasis) -> int:
        return self._basis.shape[1]

    @property
    def reduction(self: InextensionalBasis) -> sp.csr_matrix:
        return self._reduction

    @property
    def coordinates(self: InextensionalBasis) -> sp.csr_matrix:
        """Basis in reduced coordinates (rigid parameters, bending dofs)."""
        return self._constrained.basis

    def rigid_rows(self: InextensionalBasis, face_id: int) -> np.ndarray:
        return self._reduced_offsets[face_id] + np.arange(3)

    def _factorized(self: InextensionalBasis):
        if self._factor is None:
            matrix = (self._basis.T @ self._gram.full @ self._basis).tocsc()
            try:
                self._factor = spla.splu(matrix)
            except RuntimeError as error:
                logger.error("Gram matrix on the inextensional basis is singular.")
                raise SpaceError("Gram matrix on the inextensional basis is singular.") from error
            if not np.all(np.isfinite(self._factor.U.diagonal())) or np.min(
                np.abs(self._factor.U.diagonal())
            ) <= 1e-14 * np.max(np.abs(self._factor.U.diagonal())):
                logger.error("Gram matrix on the inextensional basis is singular.")
                raise SpaceError("Gram matrix on the inextensional basis is singular.")
        return self._factor

    def project(self: InextensionalBasis, x: np.ndarray) -> np.ndarray:
        """Coordinates of the rho-orthogonal projection onto D_I."""
        if self.dimension == 0:
            return np.zeros(0)
        return self._factorized().solve(self._basis.T @ (self._gram.full @ x))

    def contains(self: InextensionalBasis, x: np.ndarray, tol: float = 1e-10) -> bool:
        residual = x - self._basis @ self.project(x)
        scale = max(float(self._gram.norm_sq(x)), 1e-300)
        return bool(self._gram.norm_sq(residual) <= tol ** 2 * scale)

    def orthonormal(self: InextensionalBasis) -> np.ndarray:
        """Dense basis orthonormal in <., .>_rho."""
        if self._orthonormal is None:
            matrix = (self._basis.T @ self._gram.full @ self._basis).toarray()
            lower = la.cholesky(matrix, lower=True)
            self._orthonormal = la.solve_triangular(
                lower, self._basis.T.toarray(), lower=True
            ).T
        return self._orthonormal


def inextensional_basis(dofs: MembraneBendingDofs, gram: RhoGram) -> InextensionalBasis:
    return InextensionalBasis(dofs, gram)


class LimitInextensionalBasis:
    """Basis of the limit space.

    Fields of D_I whose rotation (d2 w, -d1 w, theta) is single valued at
    junction edge midpoints and vanishes on the clamped edges. Every
    multi-face vertex A carries six auxiliary coordinates, its displacement
    A(A) and rotation B(A); the displacements of all faces at A and the
    rotations at the edge segments next to A are tied to them.
    A rank deficient constraint set is logged at WARNING, the offending
    row ids are kept in constraints.dependent_rows.

    """

    def __init__(self: LimitInextensionalBasis, dofs: MembraneBendingDofs, gram: RhoGram):
        """Initialize LimitInextensionalBasis class.

        Init function of the LimitInextensionalBasis class.

        """
        self._dofs = dofs
        self._gram = gram
        skeleton = dofs.skeleton
        self._vertices = skeleton.multi_face_points
        n_aux = 6 * self._vertices.shape[0]
        reduction, _ = rigid_membrane_map(dofs)
        n_reduced = reduction.shape[1]

        rows = ConstraintRows(dofs.size + n_aux)
        add_continuity_rows(dofs, rows)
        add_clamping_rows(dofs, rows)
        add_rotation_rows(dofs, rows)
        for k, point in enumerate(self._vertices):
            aux = dofs.size + 6 * k
            for face_id in dofs.mesh.face_ids:
                node = dofs.mesh.node_at(face_id, point)
                if node is None:
                    continue
                rows.add_vector(
                    _combine(node_displacement_rows(dofs, face_id, node), _unit_rows(aux))
                )
            for edge in skeleton.junction_edges:
                if np.linalg.norm(edge.a - point) <= skeleton.tolerance:
                    position = 0
                elif np.linalg.norm(edge.b - point) <= skeleton.tolerance:
                    position = -1
                else:
                    continue
                for face_id in edge.faces:
                    segment = int(dofs.mesh.segments_on(face_id, edge)[position])
                    rows.add_vector(
                        _combine(segment_rotation_rows(dofs, face_id, segment), _unit_rows(aux + 3))
                    )

        matrix = rows.matrix()
        extended = sp.hstack(
            [matrix[:, :dofs.size] @ reduction, matrix[:, dofs.size:]]
        ).tocsr()
        self._constrained = ConstrainedBasis(extended, n_reduced + n_aux)
        coordinates = self._constrained.basis
        self._basis = (reduction @ coordinates[:n_reduced]).tocsr()
        self._auxiliary = coordinates[n_reduced:].tocsr()
        self._constrained.report_dependent_rows("Limit space")
        logger.info("Limit inextensional space has dimension %d.", self.dimension)

    @property
    def dofs(self: LimitInextensionalBasis) -> MembraneBendingDofs:
        return self._dofs

    @property
    def basis(self: LimitInextensionalBasis) -> sp.csr_matrix:
        return self._basis

    @property
    def dimension(self: LimitInextensionalBasis) -> int:
        return self._basis.shape[1]

    @property
    def constraints(self: LimitInextensionalBasis) -> ConstrainedBasis:
        return self._constrained

    @property
    def vertices(self: LimitInextensionalBasis) -> np.ndarray:
        return self._vertices

    def vertex_values(
        self: LimitInextensionalBasis, coordinates: np.ndarray
    ) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Displacement and rotation at each multi-face vertex."""
        values = (self._auxiliary @ coordinates).reshape(-1, 6)
        return [(row[:3], row[3:]) for row in values]

    def rotation(self: LimitInextensionalBasis, coordinates: np.ndarray) -> Dict[int, np.ndarray]:
        """Nodal rotation field per face in global components."""
        return split_nodal(self._dofs, rotation_operator(self._dofs) @ (self._basis @ coordinates))

    def fit(self: LimitInextensionalBasis, x: np.ndarray) -> np.ndarray:
        """Coordinates of the rho-orthogonal projection of full dofs."""
        matrix = (self._basis.T @ self._gram.full @ self._basis).tocsc()
        return spla.spsolve(matrix, self._basis.T @ (self._gram.full @ x))


def _unit_rows(start: int) -> VectorRows:
    return [defaultdict(float, {start + k: 1.0}) for k in range(3)]


def limit_inextensional_basis(
    dofs: MembraneBendingDofs, gram: RhoGram
) -> LimitInextensionalBasis:
    return LimitInextensionalBasis(dofs, gram)


# Operations on fields
def split(
    x: np.ndarray, basis: InextensionalBasis
) -> Tuple[np.ndarray, np.ndarray]:
    """Split full dofs into (U_E, U_I), U_E rho-orthogonal to D_I."""
    inextensional = basis.basis @ basis.project(x)
    return x - inextensional, inextensional


def norm_equivalence_probe(
    dofs: MembraneBendingDofs,
    gram: RhoGram,
    basis: InextensionalBasis,
    contaminate: int = 0,
) -> Tuple[np.float64, np.float64]:
    """Extreme ratios of the extensional norm over the rho norm on D_E.

    D_E is the rho-orthogonal complement of D_I in the clamped space. With
    contaminate > 0 the first inextensional basis fields join the probe.

    """
    clamped = dofs.clamped_basis.basis
    coupling = (basis.basis.T @ gram.full @ clamped).toarray()
    complement = clamped @ la.null_space(coupling) if coupling.shape[0] > 0 else clamped.toarray()
    if contaminate > 0:
        complement = np.hstack([complement, basis.basis[:, :contaminate].toarray()])
    if complement.shape[1] == 0:
        logger.error("Extensional space is empty.")
        raise SpaceError("Extensional space is empty.")
    a = complement.T @ (gram.membrane @ complement)
    b = complement.T @ (gram.full @ complement)
    values = la.eigh(0.5 * (a + a.T), 0.5 * (b + b.T), eigvals_only=True)
    return np.float64(max(values[0], 0.0)), np.float64(values[-1])


def interpolate(
    dofs: MembraneBendingDofs, field: Field, gradient: Optional[Field] = None
) -> np.ndarray:
    """Full dofs interpolating a field given in global components.

    Args:
        field: field(face_id, points) with global points (n, 3), returns (n, 3).
        gradient: Optional Jacobian d u_i / d x_j (n, 3, 3) of the field;
            central differences are used without it.

    """
    x = np.zeros(dofs.size)
    for face_id, face_mesh in dofs.mesh.faces.items():
        face = face_mesh.face
        values = face.vectors_to_local(field(face_id, face_mesh.points_global))
        x[dofs.membrane(face_id)] = values[:, :2]
        x[dofs.deflection(face_id)] = values[:, 2]

        midpoints = face.to_global(face_mesh.edge_midpoints)
        if gradient is not None:
            jacobian = gradient(face_id, midpoints)
            grad_w = np.einsum("i,nij,ja->na", face.e3, jacobian, face.frame[:, :2])
        else:
            step = 1e-6 * dofs.mesh.mesh_size
            grad_w = np.column_stack(
                [
                    (
                        field(face_id, midpoints + step * direction)
                        - field(face_id, midpoints - step * direction)
                    ) @ face.e3 / (2.0 * step)
                    for direction in (face.e1, face.e2)
                ]
            )
        x[dofs.normal(face_id)] = np.sum(grad_w * face_mesh.edge_normals, axis=1)
    return x


@dataclass
class FieldValues:
    """Pointwise values of a discrete field, local components."""

    displacement: np.ndarray
    strain: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray
    rotation: np.ndarray


def evaluate(
    dofs: MembraneBendingDofs, x: np.ndarray, face_id: int, points2d: np.ndarray
) -> FieldValues:
    face_mesh = dofs.mesh.faces[face_id]
    points2d = np.atleast_2d(np.asarray(points2d, dtype=np.float64))
    elements = face_mesh.locate(points2d)
    if np.any(elements < 0):
        logger.error("Points outside face %d.", face_id)
        raise SpaceError("Points outside face {}.".format(face_id))

    bary = face_mesh.p1.barycentric(elements, points2d)
    membrane = x[dofs.membrane_element_dofs(face_id)[elements]]
    u = np.einsum("ni,nid->nd", bary, membrane.reshape(-1, 3, 2))
    strain = np.einsum("nkj,nj->nk", face_mesh.p1.strain_matrices()[elements], membrane)
    theta = np.sum(face_mesh.p1.curl_matrices()[elements] * membrane, axis=1)

    bending = x[dofs.morley_element_dofs(face_id)[elements]]
    w = np.einsum("nj,nj->n", face_mesh.morley.values(points2d[:, None, :], elements)[:, 0], bending)
    grad_w = np.einsum(
        "ndj,nj->nd", face_mesh.morley.gradients(points2d[:, None, :], elements)[:, 0], bending
    )
    hessian = np.einsum("nkj,nj->nk", face_mesh.morley.hessians()[elements], bending)
    return FieldValues(
        displacement=np.column_stack([u, w]),
        strain=strain,
        gradient=grad_w,
        hessian=hessian,
        rotation=np.column_stack([grad_w[:, 1], -grad_w[:, 0], theta]),
    )


def element_strains(dofs: MembraneBendingDofs, x: np.ndarray) -> Dict[int, np.ndarray]:
    """Membrane strains (m, 3) per face, ordered (g11, g22, g12)."""
    return {
        face_id: np.einsum(
            "mkj,mj->mk",
            face_mesh.p1.strain_matrices(),
            x[dofs.membrane_element_dofs(face_id)],
        )
        for face_id, face_mesh in dofs.mesh.faces.items()
    }


def element_hessians(dofs: MembraneBendingDofs, x: np.ndarray) -> Dict[int, np.ndarray]:
    """Deflection second derivatives (m, 3) per face, ordered (w11, w22, w12)."""
    return {
        face_id: np.einsum(
            "mkj,mj->mk",
            face_mesh.morley.hessians(),
            x[dofs.morley_element_dofs(face_id)],
        )
        for face_id, face_mesh in dofs.mesh.faces.items()
    }


def rotation_operator(dofs: MembraneBendingDofs) -> sp.csr_matrix:
    """Map from full dofs to nodal rotations in global components.

    The element rotations (d2 w, -d1 w, theta) at each vertex are averaged
    over the triangles of the face sharing the node. Rows are ordered by
    face, node and component.

    """
    rows, cols, vals = list(), list(), list()
    corners = np.eye(3)
    for face_id, face_mesh in dofs.mesh.faces.items():
        triangles = face_mesh.triangles
        count = np.bincount(triangles.ravel(), minlength=face_mesh.n_nodes).astype(np.float64)
        vertices = face_mesh.p1.points(corners)
        grads = face_mesh.morley.gradients(vertices)
        curl = face_mesh.p1.curl_matrices()
        bending = dofs.morley_element_dofs(face_id)
        membrane = dofs.membrane_element_dofs(face_id)
        frame = face_mesh.face.frame
        base = 3 * dofs.node_offset(face_id)
        m = triangles.shape[0]
        for k in range(3):
            node = triangles[:, k]
            weight = 1.0 / count[node]
            # Local rotation components as maps on the element dofs
            local_bending = np.stack([grads[:, k, 1, :], -grads[:, k, 0, :], np.zeros((m, 6))], axis=1)
            local_membrane = np.stack([np.zeros((m, 6)), np.zeros((m, 6)), curl], axis=1)
            for c in range(3):
                row = base + 3 * node + c
                global_bending = np.einsum("l,mlj->mj", frame[c], local_bending)
                global_membrane = np.einsum("l,mlj->mj", frame[c], local_membrane)
                rows += [np.repeat(row, 6), np.repeat(row, 6)]
                cols += [bending.ravel(), membrane.ravel()]
                vals += [(global_bending * weight[:, None]).ravel(), (global_membrane * weight[:, None]).ravel()]
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(3 * dofs.n_nodes, dofs.size),
    ).tocsr()


def split_nodal(dofs: MembraneBendingDofs, values: np.ndarray) -> Dict[int, np.ndarray]:
    """Cut a nodal vector (3 per face node) into per-face arrays (n, 3)."""
    return {
        face_id: values[
            3 * dofs.node_offset(face_id):3 * (dofs.node_offset(face_id) + face_mesh.n_nodes)
        ].reshape(-1, 3)
        for face_id, face_mesh in dofs.mesh.faces.items()
    }


def export_coo(matrix: sp.spmatrix, filename: Union[str, Path], comments: Optional[List[str]] = None):
    """Write a sparse matrix as (row, col, value) triplets."""
    coo = sp.coo_matrix(matrix)
    save_rows(
        filename,
        ["row", "col", "value"],
        zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()),
        comments=list(comments or []) + ["# shape: {} {}".format(*coo.shape)],
    )


if __name__ == "__main__":
    logger.info("This is the file for the discrete function spaces.")
