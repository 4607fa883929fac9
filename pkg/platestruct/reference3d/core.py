# -*- coding: utf-8 -*-

"""Reference 3D elasticity solve on the thickened structure.

Every plate is meshed with box cells in its own frame. In each junction
slab the incident plate with the smallest id owns the volume: its grid is
extended by delta beyond the junction edge, the cells of the other plates
inside its slab are switched off and their nodes there are tied to the
owner by trilinear interpolation.

The cells are trilinear hexahedra enriched with three condensed
incompatible modes per direction, which removes the shear locking of the
thin slabs.

"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from platestruct.core import GeometryError, SolverError
from platestruct.fields import (
    GAUSS_POINTS,
    DisplacementSample3D,
    Material,
    PlateGrid3D,
    TieGroup,
    TieTable,
)
from platestruct.helper import get_logger
from platestruct.skeleton import Edge, Skeleton
from platestruct.solvers.core import ITERATIVE_THRESHOLD, ForceModel, solve_linear
from platestruct.spaces.elements import scatter, scatter_vector

# Initialize global logger
logger = get_logger(__name__)

CORNERS = np.array([[a, b, c] for a in (0, 1) for b in (0, 1) for c in (0, 1)])
RESIDUAL_TOLERANCE_3D = 1e-9

# (voigt row, displacement component, derivative direction)
VOIGT = (
    (0, 0, 0),
    (1, 1, 1),
    (2, 2, 2),
    (3, 1, 2),
    (3, 2, 1),
    (4, 0, 2),
    (4, 2, 0),
    (5, 0, 1),
    (5, 1, 0),
)

Dirichlet = Callable[[np.ndarray], np.ndarray]


# Element kernels
def _reference_functions(points01: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Trilinear values (q, 8) and derivatives (q, 8, 3) on the unit cube."""
    factors = np.where(CORNERS[None, :, :] == 1, points01[:, None, :], 1.0 - points01[:, None, :])
    signs = np.where(CORNERS == 1, 1.0, -1.0)
    values = np.prod(factors, axis=2)
    derivatives = np.empty(values.shape + (3,))
    for d in range(3):
        others = [e for e in range(3) if e != d]
        derivatives[..., d] = signs[None, :, d] * factors[..., others[0]] * factors[..., others[1]]
    return values, derivatives


def elasticity_matrix(material: Material) -> np.ndarray:
    """Isotropic law in Voigt form with engineering shear strains."""
    lam, mu = float(material.lam), float(material.mu)
    matrix = np.zeros((6, 6))
    matrix[:3, :3] = lam
    matrix[np.arange(3), np.arange(3)] = lam + 2.0 * mu
    matrix[np.arange(3, 6), np.arange(3, 6)] = mu
    return matrix


def _strain_operator(gradients: np.ndarray) -> np.ndarray:
    """B matrices (..., 6, 3 n) of functions with gradients (..., n, 3)."""
    n = gradients.shape[-2]
    result = np.zeros(gradients.shape[:-2] + (6, 3 * n))
    for row, component, direction in VOIGT:
        result[..., row, component::3] = gradients[..., direction]
    return result


def hex_stiffness(sizes: np.ndarray, material: Material) -> np.ndarray:
    """Condensed stiffness matrices (m, 24, 24) of box cells with edge
    lengths sizes (m, 3)."""
    _, derivatives = _reference_functions(GAUSS_POINTS)
    bubbles = np.zeros((GAUSS_POINTS.shape[0], 3, 3))
    for d in range(3):
        bubbles[:, d, d] = 4.0 * (1.0 - 2.0 * GAUSS_POINTS[:, d])
    reference = np.concatenate([derivatives, bubbles], axis=1)
    gradients = reference[None, :, :, :] / sizes[:, None, None, :]

    operator = _strain_operator(gradients)
    weights = np.prod(sizes, axis=1) / GAUSS_POINTS.shape[0]
    full = np.einsum("mqia,ij,mqjb,m->mab", operator, elasticity_matrix(material), operator, weights)
    kuu, kua = full[:, :24, :24], full[:, :24, 24:]
    kau, kaa = full[:, 24:, :24], full[:, 24:, 24:]
    return kuu - kua @ np.linalg.solve(kaa, kau)


def _trilinear_weights(grid: PlateGrid3D, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Flat node indices (n, 8) and weights (n, 8) of local points."""
    indices, fractions = list(), list()
    for d, coords in enumerate((grid.x1, grid.x2, grid.x3)):
        i = np.clip(np.searchsorted(coords, points[:, d], side="right") - 1, 0, coords.shape[0] - 2)
        t = (points[:, d] - coords[i]) / (coords[i + 1] - coords[i])
        indices.append(i)
        fractions.append(np.clip(t, 0.0, 1.0))
    nodes = np.empty((points.shape[0], 8), dtype=np.int64)
    weights = np.empty((points.shape[0], 8))
    for k, (a, b, c) in enumerate(CORNERS):
        nodes[:, k] = np.ravel_multi_index(
            (indices[0] + a, indices[1] + b, indices[2] + c), grid.shape
        )
        weights[:, k] = (
            (fractions[0] if a else 1.0 - fractions[0])
            * (fractions[1] if b else 1.0 - fractions[1])
            * (fractions[2] if c else 1.0 - fractions[2])
        )
    return nodes, weights


# Grid construction
def _side(bounds: Tuple[float, float, float, float], local: np.ndarray, tol: float) -> Optional[int]:
    """Rectangle side (0: x1 min, 1: x1 max, 2: x2 min, 3: x2 max) holding a segment."""
    for side, (axis, value) in enumerate(((0, bounds[0]), (0, bounds[1]), (1, bounds[2]), (1, bounds[3]))):
        if np.all(np.abs(local[:, axis] - value) <= tol):
            return side
    return None


def _axis(low: float, high: float, spacing: float, breakpoints: List[float]) -> np.ndarray:
    count = max(1, int(np.ceil((high - low) / spacing - 1e-9)))
    coords = np.linspace(low, high, count + 1)
    inner = [b for b in breakpoints if low + 1e-12 < b < high - 1e-12]
    if inner:
        distance = np.min(np.abs(coords[:, None] - np.array(inner)[None, :]), axis=1)
        keep = distance > 0.3 * spacing
        keep[0] = keep[-1] = True
        coords = np.concatenate([coords[keep], inner])
    return np.unique(coords)


class Structure3DProblem:
    """Structure3DProblem class.

    The thickened structure of half thickness delta with the load
    F = delta f_I + f_E in the local components of each plate and the
    lateral faces along clamped edges fixed.

    """

    def __init__(
        self: Structure3DProblem,
        skeleton: Skeleton,
        delta: float,
        material: Material,
        forces: ForceModel,
        nz: int = 5,
        inplane_factor: float = 1.0,
        spacing: Optional[float] = None,
    ):
        """Initialize Structure3DProblem class.

        Init function of the Structure3DProblem class. The in-plane cell size
        is spacing, by default inplane_factor * delta.

        """
        if not (0.0 < delta <= skeleton.delta0 * (1.0 + 1e-12)):
            logger.error("Thickness %s outside (0, delta0].", str(delta))
            raise GeometryError("delta {} outside (0, {}]".format(delta, skeleton.delta0))
        if spacing is None:
            spacing = inplane_factor * delta
        if spacing <= 0.0:
            logger.error("In-plane spacing must be positive.")
            raise GeometryError("in-plane spacing must be positive")

        self._skeleton = skeleton
        self._delta = np.float64(delta)
        self._material = material
        self._forces = forces
        self._nz = int(nz)
        self._spacing = np.float64(spacing)
        self._tol = 1e-9 * (1.0 + float(skeleton.diameter))

        self._owners = {
            edge.index: min(edge.faces) for edge in skeleton.junction_edges
        }
        self._grids = self._build_grids()
        self._ties = self._build_ties()
        self._offsets = dict()
        offset = 0
        for face_id in sorted(self._grids):
            self._offsets[face_id] = offset
            offset += int(np.prod(self._grids[face_id].shape))
        self._n_nodes = offset
        self._system: Optional[Tuple[sp.csr_matrix, np.ndarray]] = None
        logger.info(
            "Structure mesh with %d nodes, %d active cells, %d tie groups.",
            self._n_nodes,
            sum(int(g.active.sum()) for g in self._grids.values()),
            len(self._ties.groups),
        )

    @property
    def skeleton(self: Structure3DProblem) -> Skeleton:
        return self._skeleton

    @property
    def delta(self: Structure3DProblem) -> np.float64:
        return self._delta

    @property
    def material(self: Structure3DProblem) -> Material:
        return self._material

    @property
    def forces(self: Structure3DProblem) -> ForceModel:
        return self._forces

    @property
    def nz(self: Structure3DProblem) -> int:
        return self._nz

    @property
    def spacing(self: Structure3DProblem) -> np.float64:
        return self._spacing

    @property
    def grids(self: Structure3DProblem) -> Dict[int, PlateGrid3D]:
        return self._grids

    @property
    def ties(self: Structure3DProblem) -> TieTable:
        return self._ties

    @property
    def owners(self: Structure3DProblem) -> Dict[int, int]:
        """Owning face per junction edge."""
        return self._owners

    @property
    def size(self: Structure3DProblem) -> int:
        return 3 * self._n_nodes

    def node_slice(self: Structure3DProblem, face_id: int) -> slice:
        start = self._offsets[face_id]
        return slice(start, start + int(np.prod(self._grids[face_id].shape)))

    def _junction_sides(self: Structure3DProblem, face_id: int) -> List[Tuple[Edge, int]]:
        face = self._skeleton.faces[face_id]
        bounds = face.rectangle_bounds
        if bounds is None:
            logger.error("Face %d is not a rectangle in its local frame.", face_id)
            raise GeometryError(f"face {face_id}: plate grids need an axis-aligned rectangle")
        result = list()
        for edge in self._skeleton.face_edges(face_id):
            if not edge.is_junction:
                continue
            side = _side(bounds, face.to_local(np.vstack([edge.a, edge.b])), self._tol)
            if side is None:
                logger.warning("Junction edge %d isn't a side of face %d.", edge.index, face_id)
                continue
            result.append((edge, side))
        return result

    def _build_grids(self: Structure3DProblem) -> Dict[int, PlateGrid3D]:
        grids = dict()
        for face_id in self._skeleton.face_ids:
            face = self._skeleton.faces[face_id]
            core = face.rectangle_bounds
            bounds = list(core)
            breaks: Tuple[List[float], List[float]] = (list(), list())
            for edge, side in self._junction_sides(face_id):
                axis, outward = side // 2, (1.0 if side % 2 else -1.0)
                value = core[side]
                if self._owners[edge.index] == face_id:
                    bounds[side] = value + outward * self._delta
                    breaks[axis].append(value)
                else:
                    breaks[axis].append(value - outward * self._delta)
            grid = PlateGrid3D(
                face,
                _axis(bounds[0], bounds[1], self._spacing, breaks[0]),
                _axis(bounds[2], bounds[3], self._spacing, breaks[1]),
                np.linspace(-self._delta, self._delta, self._nz),
                self._delta,
                core_bounds=core,
            )
            grids[face_id] = grid

        for edge_index, owner in self._owners.items():
            master = grids[owner]
            edge = self._skeleton.edges[edge_index]
            for face_id in edge.faces:
                if face_id == owner:
                    continue
                grid = grids[face_id]
                centers = grid.cell_points_global(np.array([[0.5, 0.5, 0.5]]))[:, :, :, 0].reshape(-1, 3)
                inside = self._inside(master, centers) & (edge.distance(centers) < 2.0 * self._delta)
                grid.active = grid.active & ~inside.reshape(grid.cell_shape)
                logger.debug(
                    "Face %d: %d cells owned by face %d.", face_id, int(inside.sum()), owner
                )
        return grids

    def _inside(self: Structure3DProblem, grid: PlateGrid3D, points: np.ndarray) -> np.ndarray:
        local = grid.face.to_local3(points)
        tol = self._tol
        return (
            (local[:, 0] >= grid.x1[0] - tol)
            & (local[:, 0] <= grid.x1[-1] + tol)
            & (local[:, 1] >= grid.x2[0] - tol)
            & (local[:, 1] <= grid.x2[-1] + tol)
            & (np.abs(local[:, 2]) <= self._delta + tol)
        )

    def _build_ties(self: Structure3DProblem) -> TieTable:
        groups = list()
        for edge_index, owner in self._owners.items():
            master = self._grids[owner]
            edge = self._skeleton.edges[edge_index]
            for face_id in edge.faces:
                if face_id == owner:
                    continue
                slave = self._grids[face_id]
                nodes = slave.nodes_global.reshape(-1, 3)
                inside = self._inside(master, nodes) & (
                    edge.distance(nodes) <= 2.0 * self._delta + self._tol
                )
                selected = np.flatnonzero(inside)
                master_nodes, weights = _trilinear_weights(
                    master, master.face.to_local3(nodes[selected])
                )
                groups.append(
                    TieGroup(
                        slave_face=face_id,
                        master_face=owner,
                        slave_nodes=selected,
                        master_nodes=master_nodes,
                        weights=weights,
                        rotation=slave.face.frame.T @ master.face.frame,
                    )
                )
        return TieTable(groups)

    def _cell_nodes(self: Structure3DProblem, face_id: int) -> Tuple[np.ndarray, np.ndarray]:
        """Global node indices (m, 8) and edge lengths (m, 3) of active cells."""
        grid = self._grids[face_id]
        i, j, k = np.nonzero(grid.active)
        nodes = np.column_stack(
            [
                np.ravel_multi_index((i + a, j + b, k + c), grid.shape)
                for a, b, c in CORNERS
            ]
        ) + self._offsets[face_id]
        sizes = np.column_stack(
            [np.diff(grid.x1)[i], np.diff(grid.x2)[j], np.diff(grid.x3)[k]]
        )
        return nodes, sizes

    @staticmethod
    def _element_dofs(nodes: np.ndarray) -> np.ndarray:
        return (3 * nodes[:, :, None] + np.arange(3)[None, None, :]).reshape(nodes.shape[0], -1)

    def assemble(self: Structure3DProblem) -> Tuple[sp.csr_matrix, np.ndarray]:
        """Stiffness on all node dofs and the load vector."""
        if self._system is not None:
            return self._system
        logger.info("Assemble 3D stiffness, delta=%s.", str(self._delta))
        values, _ = _reference_functions(GAUSS_POINTS)
        stiffness = sp.csr_matrix((self.size, self.size))
        load = np.zeros(self.size)
        for face_id, grid in self._grids.items():
            nodes, sizes = self._cell_nodes(face_id)
            if nodes.shape[0] == 0:
                continue
            dofs = self._element_dofs(nodes)
            stiffness = stiffness + scatter(dofs, hex_stiffness(sizes, self._material), self.size)

            points = grid.cell_points_local(GAUSS_POINTS)[grid.active]
            m, q = points.shape[:2]
            in_plane = points.reshape(-1, 3)[:, :2]
            force = (
                self._delta * self._forces.inextensional(face_id, in_plane)
                + self._forces.extensional(face_id, in_plane)
            ).reshape(m, q, 3)
            weights = np.prod(sizes, axis=1) / q
            element_loads = np.einsum("m,qn,mqc->mnc", weights, values, force).reshape(m, -1)
            load += scatter_vector(dofs, element_loads, self.size)
        self._system = (stiffness.tocsr(), load)
        return self._system

    def clamped_nodes(self: Structure3DProblem) -> np.ndarray:
        """Node mask of the lateral faces along clamped edges."""
        mask = np.zeros(self._n_nodes, dtype=bool)
        for face_id, grid in self._grids.items():
            edges = [e for e in self._skeleton.face_edges(face_id) if e.clamped]
            if not edges:
                continue
            midsurface = grid.face.to_global(grid.midsurface_local.reshape(-1, 2))
            on_edge = np.zeros(midsurface.shape[0], dtype=bool)
            for edge in edges:
                on_edge |= edge.distance(midsurface) <= self._tol
            block = np.repeat(on_edge.reshape(grid.nx, grid.ny, 1), grid.nz, axis=2)
            start = self._offsets[face_id]
            mask[start : start + block.size] = block.ravel()
        return mask

    def boundary_nodes(self: Structure3DProblem) -> np.ndarray:
        """Node mask of the outer faces of every plate grid."""
        mask = np.zeros(self._n_nodes, dtype=bool)
        for face_id, grid in self._grids.items():
            block = np.zeros(grid.shape, dtype=bool)
            block[[0, -1], :, :] = True
            block[:, [0, -1], :] = True
            block[:, :, [0, -1]] = True
            start = self._offsets[face_id]
            mask[start : start + block.size] = block.ravel()
        return mask

    def used_nodes(self: Structure3DProblem) -> np.ndarray:
        mask = np.zeros(self._n_nodes, dtype=bool)
        for face_id in self._grids:
            nodes, _ = self._cell_nodes(face_id)
            mask[nodes.ravel()] = True
        return mask

    def global_nodes(self: Structure3DProblem) -> np.ndarray:
        return np.concatenate(
            [self._grids[f].nodes_global.reshape(-1, 3) for f in sorted(self._grids)]
        )

    def local_frames(self: Structure3DProblem) -> np.ndarray:
        """Frame (3, 3) of the owning plate per node."""
        return np.concatenate(
            [
                np.broadcast_to(self._grids[f].face.frame, (int(np.prod(self._grids[f].shape)), 3, 3))
                for f in sorted(self._grids)
            ]
        )

    def constraints(self: Structure3DProblem, dirichlet: Optional[Dirichlet] = None) -> Constraints3D:
        """Map from independent dofs to all dofs with the known values.

        Raises:
            SolverError: a connected part of the structure is not clamped.

        """
        self._check_clamping(dirichlet is not None)
        slave = np.zeros(self._n_nodes, dtype=bool)
        for group in self._ties.groups:
            slave[self._offsets[group.slave_face] + group.slave_nodes] = True
        independent = self.used_nodes() & ~slave
        clamped = self.clamped_nodes()

        dof_independent = np.repeat(independent, 3)
        columns = np.flatnonzero(dof_independent)
        basis = sp.csr_matrix(
            (np.ones(columns.shape[0]), (columns, np.arange(columns.shape[0]))),
            shape=(self.size, columns.shape[0]),
        )
        for group in self._ties.groups:
            basis = self._apply_group(basis, group)
        clamped_slave = np.repeat(clamped & slave, 3)
        basis = (sp.diags((~clamped_slave).astype(np.float64)) @ basis).tocsc()

        known_values = np.zeros(columns.shape[0])
        known = np.repeat(clamped, 3)[columns]
        if dirichlet is not None:
            prescribed = self.boundary_nodes() & independent & ~clamped
            nodes = np.flatnonzero(prescribed)
            points = self.global_nodes()[nodes]
            vectors = np.asarray(dirichlet(points), dtype=np.float64)
            local = np.einsum("nij,ni->nj", self.local_frames()[nodes], vectors)
            dofs = (3 * nodes[:, None] + np.arange(3)[None, :]).ravel()
            positions = np.searchsorted(columns, dofs)
            known_values[positions] = local.ravel()
            known[positions] = True
        return Constraints3D(
            basis=basis,
            unknown=np.flatnonzero(~known),
            known=np.flatnonzero(known),
            known_values=known_values[known],
        )

    def _apply_group(self: Structure3DProblem, basis: sp.csr_matrix, group: TieGroup) -> sp.csr_matrix:
        n_slave = group.slave_nodes.shape[0]
        if n_slave == 0:
            return basis
        master_offset = self._offsets[group.master_face]
        rows = np.arange(3 * n_slave).reshape(n_slave, 1, 3, 1)
        cols = 3 * (master_offset + group.master_nodes)[:, :, None, None] + np.arange(3)[None, None, None, :]
        values = group.weights[:, :, None, None] * group.rotation[None, None, :, :]
        shape = (n_slave, 8, 3, 3)
        interpolation = sp.csr_matrix(
            (
                values.ravel(),
                (np.broadcast_to(rows, shape).ravel(), np.broadcast_to(cols, shape).ravel()),
            ),
            shape=(3 * n_slave, self.size),
        )
        slave_dofs = (3 * (self._offsets[group.slave_face] + group.slave_nodes)[:, None] + np.arange(3)).ravel()
        keep = np.ones(self.size)
        keep[slave_dofs] = 0.0
        selection = sp.csr_matrix(
            (np.ones(slave_dofs.shape[0]), (np.arange(slave_dofs.shape[0]), slave_dofs)),
            shape=(slave_dofs.shape[0], self.size),
        )
        return (sp.diags(keep) @ basis + selection.T @ (interpolation @ basis)).tocsr()

    def _check_clamping(self: Structure3DProblem, prescribed: bool):
        if prescribed:
            return
        graph = nx.Graph()
        graph.add_nodes_from(self._skeleton.face_ids)
        for edge in self._skeleton.junction_edges:
            faces = list(edge.faces)
            graph.add_edges_from((faces[0], f) for f in faces[1:])
        clamped = {f for e in self._skeleton.clamped_edges for f in e.faces}
        for component in nx.connected_components(graph):
            if not clamped & set(component):
                logger.error("Insufficient clamping: faces %s are free.", sorted(component))
                raise SolverError(
                    "Insufficient clamping: faces {} have no clamped edge.".format(sorted(component))
                )

    def sample(self: Structure3DProblem, x: np.ndarray) -> DisplacementSample3D:
        values = dict()
        for face_id, grid in self._grids.items():
            start = 3 * self._offsets[face_id]
            values[face_id] = x[start : start + 3 * int(np.prod(grid.shape))].reshape(grid.shape + (3,))
        return DisplacementSample3D(self._grids, values, self._ties)

    def vector(self: Structure3DProblem, sample: DisplacementSample3D) -> np.ndarray:
        return np.concatenate([sample.values[f].ravel() for f in sorted(self._grids)])

    def energy(self: Structure3DProblem, sample: DisplacementSample3D) -> np.float64:
        """Elastic energy a(u, u) of the discrete stiffness."""
        stiffness, _ = self.assemble()
        x = self.vector(sample)
        return np.float64(x @ (stiffness @ x))

    def work(self: Structure3DProblem, sample: DisplacementSample3D) -> np.float64:
        _, load = self.assemble()
        return np.float64(load @ self.vector(sample))

    def residual(
        self: Structure3DProblem,
        sample: DisplacementSample3D,
        constraints: Optional[Constraints3D] = None,
    ) -> np.float64:
        """Relative residual of the reduced equations."""
        constraints = self.constraints() if constraints is None else constraints
        stiffness, load = self.assemble()
        free = constraints.basis[:, constraints.unknown]
        x = self.vector(sample)
        lifted = stiffness @ (constraints.basis[:, constraints.known] @ constraints.known_values)
        rhs = free.T @ (load - lifted)
        scale = max(float(np.linalg.norm(rhs)), float(np.linalg.norm(free.T @ lifted)), 1e-300)
        return np.float64(np.linalg.norm(free.T @ (stiffness @ x - load)) / scale)


@dataclass
class Constraints3D:
    """Independent dof map: all dofs = basis @ independent dofs."""

    basis: sp.csc_matrix
    unknown: np.ndarray
    known: np.ndarray
    known_values: np.ndarray

    @property
    def lifting(self: Constraints3D) -> np.ndarray:
        return self.basis[:, self.known] @ self.known_values


def solve_3d(
    problem: Structure3DProblem,
    dirichlet: Optional[Dirichlet] = None,
    threshold: int = ITERATIVE_THRESHOLD,
) -> DisplacementSample3D:
    """Galerkin solution u_delta of the thick structure.

    With dirichlet (global points -> global vectors) the outer grid faces
    take the prescribed displacement.

    Raises:
        SolverError: insufficient clamping or singular system.

    """
    stiffness, load = problem.assemble()
    constraints = problem.constraints(dirichlet)
    free = constraints.basis[:, constraints.unknown]
    lifting = constraints.lifting
    matrix = (free.T @ stiffness @ free).tocsr()
    rhs = free.T @ (load - stiffness @ lifting)
    logger.info("Start 3D solver with %d unknowns.", matrix.shape[0])
    y, result = solve_linear(matrix, rhs, definite=True, threshold=threshold, tol=RESIDUAL_TOLERANCE_3D)
    if not result.success:
        logger.error("3D solve missed the residual tolerance: %s.", result.message)
        raise SolverError("3D solve missed the residual tolerance: {}".format(result.message))
    x = free @ y + lifting
    logger.info("3D solver finished with relative residual %s.", str(result.residual))
    return problem.sample(x)


if __name__ == "__main__":
    logger.info("This is the file for the reference 3D solve.")
