# -*- coding: utf-8 -*-

"""Displacement decompositions of thin plates and plate structures.

Elementary plate displacements U_e = U(x^) + R(x^) ^ x3 e3 built from fiber
averages or from ball averages, the Kirchhoff-Love split, the unfolding
x3 = delta t3, elementary rod displacements along junction edges with the
blending near edges, and the numerical check of the associated estimates.

"""

from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Type, Union

import numpy as np
from scipy.integrate import simpson, trapezoid
from scipy.interpolate import RegularGridInterpolator

from platestruct.core import (
    BaseResultClass,
    DecompositionError,
    EpdTypes,
    EstimateStatus,
    HypothesisError,
)
from platestruct.fields import (
    DisplacementSample3D,
    PlateGrid3D,
    energy_D,
    energy_E,
    gradient,
    l2_norm_sq,
)
from platestruct.helper import cutoff, get_logger, save_rows
from platestruct.skeleton import Skeleton, validate_hypotheses

# Initialize global logger
logger = get_logger(__name__)

KERNEL_TOLERANCE = 1e-20


def _wedge_e3(vectors: np.ndarray) -> np.ndarray:
    """v ^ e3 = (v2, -v1, 0)."""
    result = np.zeros_like(vectors)
    result[..., 0] = vectors[..., 1]
    result[..., 1] = -vectors[..., 0]
    return result


def grid_l2_norm_sq(
    values: np.ndarray, x1: np.ndarray, x2: np.ndarray, x3: Optional[np.ndarray] = None
) -> np.float64:
    """Node-based L2 quadrature: trapezoid in-plane, Simpson across the
    thickness."""
    density = values ** 2
    if values.ndim > (2 if x3 is None else 3):
        density = np.sum(density, axis=-1)
    if x3 is not None:
        density = simpson(density, x=x3, axis=2)
    return np.float64(trapezoid(trapezoid(density, x=x2, axis=1), x=x1, axis=0))


# Decomposition classes
class ElementaryPlateDisplacement:
    """ElementaryPlateDisplacement class.

    Midsurface fields U and R of a plate on a tensor grid, in local frame
    components, representing U(x^) + R(x^) ^ x3 e3.

    """

    def __init__(
        self: ElementaryPlateDisplacement,
        face_id: int,
        x1: np.ndarray,
        x2: np.ndarray,
        translation: np.ndarray,
        rotation: np.ndarray,
        kind: EpdTypes = EpdTypes.FIBER,
    ):
        """Initialize ElementaryPlateDisplacement class.

        Init function of the ElementaryPlateDisplacement class.

        """
        self._face_id = int(face_id)
        self._x1 = np.asarray(x1, dtype=np.float64)
        self._x2 = np.asarray(x2, dtype=np.float64)
        self._translation = np.asarray(translation, dtype=np.float64)
        self._rotation = np.asarray(rotation, dtype=np.float64)
        self._kind = kind

        shape = (self._x1.shape[0], self._x2.shape[0], 3)
        if self._translation.shape != shape or self._rotation.shape != shape:
            logger.error("Midsurface fields don't match the grid.")
            raise DecompositionError("midsurface fields don't match the grid")
        if not (np.all(np.isfinite(self._translation)) and np.all(np.isfinite(self._rotation))):
            logger.error("Non-finite midsurface fields on face %d.", self._face_id)
            raise DecompositionError("non-finite midsurface fields")

    @property
    def face_id(self: ElementaryPlateDisplacement) -> int:
        return self._face_id

    @property
    def x1(self: ElementaryPlateDisplacement) -> np.ndarray:
        return self._x1

    @property
    def x2(self: ElementaryPlateDisplacement) -> np.ndarray:
        return self._x2

    @property
    def translation(self: ElementaryPlateDisplacement) -> np.ndarray:
        return self._translation

    @property
    def rotation(self: ElementaryPlateDisplacement) -> np.ndarray:
        return self._rotation

    @property
    def kind(self: ElementaryPlateDisplacement) -> EpdTypes:
        return self._kind

    def evaluate(self: ElementaryPlateDisplacement, x3: np.ndarray) -> np.ndarray:
        """Values on the grid x1 x x2 x x3, shape (nx, ny, nz, 3)."""
        x3 = np.asarray(x3, dtype=np.float64)
        return (
            self._translation[:, :, None, :]
            + x3[None, None, :, None] * _wedge_e3(self._rotation)[:, :, None, :]
        )

    def matches(self: ElementaryPlateDisplacement, grid: PlateGrid3D) -> bool:
        """True if the midsurface nodes of grid are the e.p.d. nodes."""
        return (
            grid.x1.shape == self._x1.shape
            and grid.x2.shape == self._x2.shape
            and np.allclose(grid.x1, self._x1, rtol=0.0, atol=1e-12)
            and np.allclose(grid.x2, self._x2, rtol=0.0, atol=1e-12)
        )

    def to_sample(
        self: ElementaryPlateDisplacement, grid: PlateGrid3D
    ) -> DisplacementSample3D:
        if not self.matches(grid):
            logger.error("Grid of face %d doesn't match the e.p.d. grid.", self._face_id)
            raise DecompositionError("grid doesn't match the e.p.d. grid")
        return DisplacementSample3D({self._face_id: grid}, {self._face_id: self.evaluate(grid.x3)})

    def midsurface_gradients(
        self: ElementaryPlateDisplacement,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(dU/dx1, dU/dx2, dR/dx1, dR/dx2) by central differences."""
        order = 2 if min(self._x1.shape[0], self._x2.shape[0]) >= 3 else 1
        du1, du2 = np.gradient(self._translation, self._x1, self._x2, axis=(0, 1), edge_order=order)
        dr1, dr2 = np.gradient(self._rotation, self._x1, self._x2, axis=(0, 1), edge_order=order)
        return du1, du2, dr1, dr2

    def interpolate(
        self: ElementaryPlateDisplacement, points2d: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        grid = (self._x1, self._x2)
        points2d = np.clip(
            np.atleast_2d(points2d),
            [self._x1[0], self._x2[0]],
            [self._x1[-1], self._x2[-1]],
        )
        translation = RegularGridInterpolator(grid, self._translation)(points2d)
        rotation = RegularGridInterpolator(grid, self._rotation)(points2d)
        return translation, rotation


class ResidualDisplacement:
    """Residual u - KL(u) of a plate, on the grid of the source sample."""

    def __init__(
        self: ResidualDisplacement, face_id: int, grid: PlateGrid3D, values: np.ndarray
    ):
        self._face_id = int(face_id)
        self._grid = grid
        self._values = np.asarray(values, dtype=np.float64)

    @property
    def face_id(self: ResidualDisplacement) -> int:
        return self._face_id

    @property
    def grid(self: ResidualDisplacement) -> PlateGrid3D:
        return self._grid

    @property
    def values(self: ResidualDisplacement) -> np.ndarray:
        return self._values

    def fiber_mean(self: ResidualDisplacement) -> np.ndarray:
        return simpson(self._values, x=self._grid.x3, axis=2) / (2.0 * self._grid.delta)

    def to_sample(self: ResidualDisplacement) -> DisplacementSample3D:
        return DisplacementSample3D({self._face_id: self._grid}, {self._face_id: self._values})


class UnfoldedField:
    """Field on the reference plate omega x (-1, 1), t3 = x3/delta."""

    def __init__(
        self: UnfoldedField,
        face_id: int,
        x1: np.ndarray,
        x2: np.ndarray,
        t3: np.ndarray,
        values: np.ndarray,
        delta: float,
    ):
        self._face_id = int(face_id)
        self._x1 = np.asarray(x1)
        self._x2 = np.asarray(x2)
        self._t3 = np.asarray(t3)
        self._values = np.asarray(values)
        self._delta = np.float64(delta)
        if np.min(self._t3) < -1.0 - 1e-12 or np.max(self._t3) > 1.0 + 1e-12:
            logger.error("Unfolded coordinate t3 outside [-1, 1].")
            raise DecompositionError("t3 outside [-1, 1]")

    @property
    def face_id(self: UnfoldedField) -> int:
        return self._face_id

    @property
    def x1(self: UnfoldedField) -> np.ndarray:
        return self._x1

    @property
    def x2(self: UnfoldedField) -> np.ndarray:
        return self._x2

    @property
    def t3(self: UnfoldedField) -> np.ndarray:
        return self._t3

    @property
    def values(self: UnfoldedField) -> np.ndarray:
        return self._values

    @property
    def delta(self: UnfoldedField) -> np.float64:
        return self._delta

    def difference(self: UnfoldedField, axis: int) -> np.ndarray:
        """Forward difference quotients along x1 (0), x2 (1) or t3 (2)."""
        coords = (self._x1, self._x2, self._t3)[axis]
        shape = [1] * self._values.ndim
        shape[axis] = -1
        return np.diff(self._values, axis=axis) / np.diff(coords).reshape(shape)

    def l2_norm_sq(self: UnfoldedField) -> np.float64:
        return grid_l2_norm_sq(self._values, self._x1, self._x2, self._t3)


class ElementaryRodDisplacement:
    """ElementaryRodDisplacement class.

    Rigid motion per cross-section of a junction edge, in global components:
    U_R(s) + R_R(s) ^ (x - p(s)) with p(s) = A + s e_J.

    """

    def __init__(
        self: ElementaryRodDisplacement,
        edge_index: int,
        origin: np.ndarray,
        direction: np.ndarray,
        length: float,
        stations: np.ndarray,
        translation: np.ndarray,
        rotation: np.ndarray,
    ):
        """Initialize ElementaryRodDisplacement class.

        Init function of the ElementaryRodDisplacement class.

        """
        self._edge_index = int(edge_index)
        self._origin = np.asarray(origin, dtype=np.float64)
        self._direction = np.asarray(direction, dtype=np.float64)
        self._length = np.float64(length)
        self._stations = np.asarray(stations, dtype=np.float64)
        self._translation = np.asarray(translation, dtype=np.float64)
        self._rotation = np.asarray(rotation, dtype=np.float64)

    @classmethod
    def zeros(
        cls: Type[ElementaryRodDisplacement], skeleton: Skeleton, edge_index: int
    ) -> ElementaryRodDisplacement:
        edge = skeleton.edges[edge_index]
        stations = np.array([0.0, edge.length])
        return cls(
            edge_index, edge.a, edge.direction, edge.length, stations, np.zeros((2, 3)), np.zeros((2, 3))
        )

    @property
    def edge_index(self: ElementaryRodDisplacement) -> int:
        return self._edge_index

    @property
    def stations(self: ElementaryRodDisplacement) -> np.ndarray:
        return self._stations

    @property
    def translation(self: ElementaryRodDisplacement) -> np.ndarray:
        return self._translation

    @property
    def rotation(self: ElementaryRodDisplacement) -> np.ndarray:
        return self._rotation

    def components(
        self: ElementaryRodDisplacement, s: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """U_R(s), R_R(s), piecewise linear between stations."""
        s = np.clip(np.atleast_1d(s), self._stations[0], self._stations[-1])
        translation = np.column_stack(
            [np.interp(s, self._stations, self._translation[:, c]) for c in range(3)]
        )
        rotation = np.column_stack(
            [np.interp(s, self._stations, self._rotation[:, c]) for c in range(3)]
        )
        return translation, rotation

    def evaluate(
        self: ElementaryRodDisplacement, points: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Displacement U_{e,R}(x) and rotation R_R at global points."""
        points = np.atleast_2d(points)
        s = np.clip((points - self._origin) @ self._direction, self._stations[0], self._stations[-1])
        translation, rotation = self.components(s)
        axis_points = self._origin + s[:, None] * self._direction
        return translation + np.cross(rotation, points - axis_points), rotation


class StructureEPD:
    """StructureEPD class.

    Elementary displacement of a plate structure: ball-average e.p.d. per
    plate, blended near junction and clamped edges toward one e.r.d. per
    edge. Junction edges are blended last so that all faces incident to a
    junction edge share its trace.

    """

    def __init__(
        self: StructureEPD,
        skeleton: Skeleton,
        delta: float,
        plates: Dict[int, ElementaryPlateDisplacement],
        rods: Dict[int, ElementaryRodDisplacement],
    ):
        """Initialize StructureEPD class.

        Init function of the StructureEPD class.

        """
        self._skeleton = skeleton
        self._delta = np.float64(delta)
        self._plates = plates
        self._rods = rods
        self._blended: Dict[int, ElementaryPlateDisplacement] = dict()

    @property
    def skeleton(self: StructureEPD) -> Skeleton:
        return self._skeleton

    @property
    def delta(self: StructureEPD) -> np.float64:
        return self._delta

    @property
    def rods(self: StructureEPD) -> Dict[int, ElementaryRodDisplacement]:
        return self._rods

    @property
    def unblended(self: StructureEPD) -> Dict[int, ElementaryPlateDisplacement]:
        return self._plates

    def _edge_order(self: StructureEPD, face_id: int) -> List[int]:
        indices = [
            e.index for e in self._skeleton.face_edges(face_id) if e.index in self._rods
        ]
        return sorted(indices, key=lambda i: (self._skeleton.edges[i].is_junction, i))

    def evaluate_midsurface(
        self: StructureEPD, face_id: int, points2d: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Blended (U, R) in local components at local midsurface points."""
        face = self._skeleton.faces[face_id]
        translation, rotation = self._plates[face_id].interpolate(points2d)
        points = face.to_global(points2d)
        for edge_index in self._edge_order(face_id):
            translation, rotation = _blend(
                translation,
                rotation,
                self._rods[edge_index],
                self._skeleton.edges[edge_index],
                face,
                points,
                self._skeleton.eta0 * self._delta,
            )
        return translation, rotation

    def plate(self: StructureEPD, face_id: int) -> ElementaryPlateDisplacement:
        if face_id not in self._blended:
            base = self._plates[face_id]
            nodes = np.stack(np.meshgrid(base.x1, base.x2, indexing="ij"), axis=-1)
            translation, rotation = self.evaluate_midsurface(face_id, nodes.reshape(-1, 2))
            shape = nodes.shape[:2] + (3,)
            self._blended[face_id] = ElementaryPlateDisplacement(
                face_id,
                base.x1,
                base.x2,
                translation.reshape(shape),
                rotation.reshape(shape),
                EpdTypes.BLENDED,
            )
        return self._blended[face_id]

    @property
    def plates(self: StructureEPD) -> Dict[int, ElementaryPlateDisplacement]:
        return {face_id: self.plate(face_id) for face_id in self._plates}

    def edge_trace(
        self: StructureEPD, edge_index: int, face_id: int, count: int = 21
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Global (U, R) of a face along an edge at equidistant points."""
        edge = self._skeleton.edges[edge_index]
        face = self._skeleton.faces[face_id]
        points = edge.point_at(np.linspace(0.0, edge.length, count))
        translation, rotation = self.evaluate_midsurface(face_id, face.to_local(points))
        return face.vectors_to_global(translation), face.vectors_to_global(rotation)


# Result classes
@dataclass
class EstimateRow:
    inequality_id: str
    delta: np.float64
    lhs: np.float64
    rhs_energy: np.float64
    ratio: np.float64
    status: EstimateStatus


@dataclass
class EstimateReport(BaseResultClass):
    success: bool
    status: np.int8
    message: str
    rows: List[EstimateRow]

    @classmethod
    def from_rows(cls: Type[EstimateReport], rows: List[EstimateRow]) -> EstimateReport:
        violations = [r.inequality_id for r in rows if r.status == EstimateStatus.VIOLATION]
        if violations:
            return cls(
                success=False,
                status=np.int8(1),
                message="Estimate violations: " + ", ".join(violations) + ".",
                rows=rows,
            )
        return cls(success=True, status=np.int8(0), message="Estimates evaluated.", rows=rows)

    def ratio(self: EstimateReport, inequality_id: str) -> np.float64:
        for row in self.rows:
            if row.inequality_id == inequality_id:
                return row.ratio
        raise KeyError(inequality_id)

    def save_csv(self: EstimateReport, filename: Union[str, Path], comments: Optional[Sequence[str]] = None):
        save_rows(
            filename,
            ["inequality_id", "delta", "lhs", "rhs_energy", "ratio"],
            [[r.inequality_id, r.delta, r.lhs, r.rhs_energy, r.ratio] for r in self.rows],
            comments,
        )


def bounded_ratios(
    reports: Sequence[EstimateReport], factor: float = 2.0
) -> Dict[str, bool]:
    """Per inequality: max/min of the ratios along a delta sequence < factor.

    Exact-kernel rows are skipped.

    """
    ratios: Dict[str, List[float]] = dict()
    for report in reports:
        for row in report.rows:
            if row.status == EstimateStatus.OK:
                ratios.setdefault(row.inequality_id, list()).append(float(row.ratio))
    return {
        key: bool(max(values) == 0.0 or max(values) < factor * min(values))
        for key, values in ratios.items()
    }


# Decomposition operations
def epd_fiber(
    sample: DisplacementSample3D, face: int, delta: Optional[float] = None
) -> ElementaryPlateDisplacement:
    """Fiber averages U = (1/2d) int u dx3 and R = (3/2d^3) int x3 e3 ^ u dx3."""
    grid = sample.grids[face]
    if grid.nz < 3:
        logger.error("Fiber quadrature needs nz >= 3.")
        raise DecompositionError("nz < 3")
    delta = grid.delta if delta is None else np.float64(delta)
    u = sample.values[face]
    x3 = grid.x3

    translation = simpson(u, x=x3, axis=2) / (2.0 * delta)
    moment = np.zeros_like(u)
    moment[..., 0] = -x3[None, None, :] * u[..., 1]
    moment[..., 1] = x3[None, None, :] * u[..., 0]
    rotation = 1.5 / delta ** 3 * simpson(moment, x=x3, axis=2)
    return ElementaryPlateDisplacement(face, grid.x1, grid.x2, translation, rotation, EpdTypes.FIBER)


def extend_sample(
    sample: DisplacementSample3D, face: int, margin: float
) -> DisplacementSample3D:
    """Extend a plate sample beyond its in-plane rectangle by at least margin.

    Values are linearly extrapolated from the two outermost grid lines,
    which keeps affine fields affine.

    """
    grid = sample.grids[face]
    values = sample.values[face]

    def extend(coords: np.ndarray, array: np.ndarray, axis: int) -> Tuple[np.ndarray, np.ndarray]:
        low_step = coords[1] - coords[0]
        high_step = coords[-1] - coords[-2]
        n_low = int(np.ceil(margin / low_step - 1e-9))
        n_high = int(np.ceil(margin / high_step - 1e-9))
        low = coords[0] - low_step * np.arange(n_low, 0, -1)
        high = coords[-1] + high_step * np.arange(1, n_high + 1)

        first = np.take(array, [0], axis=axis)
        second = np.take(array, [1], axis=axis)
        last = np.take(array, [-1], axis=axis)
        before = np.take(array, [-2], axis=axis)
        shape = [1] * array.ndim
        shape[axis] = -1
        low_values = first + ((low - coords[0]) / low_step).reshape(shape) * (second - first)
        high_values = last + ((high - coords[-1]) / high_step).reshape(shape) * (last - before)
        return (
            np.concatenate([low, coords, high]),
            np.concatenate([low_values, array, high_values], axis=axis),
        )

    x1, values = extend(grid.x1, values, 0)
    x2, values = extend(grid.x2, values, 1)
    extended = PlateGrid3D(
        grid.face,
        x1,
        x2,
        grid.x3,
        grid.delta,
        core_bounds=(grid.x1[0], grid.x1[-1], grid.x2[0], grid.x2[-1]),
    )
    return DisplacementSample3D({face: extended}, {face: values})


def _ball_lattice(radius: float, cells_per_radius: int) -> np.ndarray:
    offsets = (np.arange(2 * cells_per_radius) + 0.5) * (radius / cells_per_radius) - radius
    lattice = np.stack(np.meshgrid(offsets, offsets, offsets, indexing="ij"), axis=-1).reshape(-1, 3)
    return lattice[np.linalg.norm(lattice, axis=1) <= radius]


def epd_ball(
    sample: DisplacementSample3D,
    face: int,
    delta: Optional[float] = None,
    cells_per_radius: int = 4,
    points: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    chunk: int = 512,
) -> ElementaryPlateDisplacement:
    """Ball averages over B(x^, delta/2) at midsurface points.

    By default the points are the grid nodes inside the core (unextended)
    rectangle. The moments are normalized by their discrete counterparts so
    rigid fields are reproduced exactly.

    """
    grid = sample.grids[face]
    delta = grid.delta if delta is None else np.float64(delta)
    radius = 0.5 * delta

    if points is None:
        bounds = grid.core_bounds
        tol = 1e-12 * max(1.0, abs(grid.x1[-1] - grid.x1[0]))
        x1 = grid.x1[(grid.x1 >= bounds[0] - tol) & (grid.x1 <= bounds[1] + tol)]
        x2 = grid.x2[(grid.x2 >= bounds[2] - tol) & (grid.x2 <= bounds[3] + tol)]
    else:
        x1, x2 = (np.asarray(p, dtype=np.float64) for p in points)

    tol = 1e-12 * (1.0 + np.max(np.abs(grid.x1)) + np.max(np.abs(grid.x2)))
    if (
        x1.min() - radius < grid.x1[0] - tol
        or x1.max() + radius > grid.x1[-1] + tol
        or x2.min() - radius < grid.x2[0] - tol
        or x2.max() + radius > grid.x2[-1] + tol
    ):
        logger.error("Ball of radius %s leaves the sample of face %d.", str(radius), face)
        raise DecompositionError("ball leaves the sample domain; extend the sample first")

    lattice = _ball_lattice(radius, int(cells_per_radius))
    moment_norm = (2.0 / 3.0) * np.sum(lattice ** 2)
    interpolator = RegularGridInterpolator(
        (grid.x1, grid.x2, grid.x3), sample.values[face], method="linear", bounds_error=False, fill_value=None
    )

    centers = np.stack(np.meshgrid(x1, x2, indexing="ij"), axis=-1).reshape(-1, 2)
    centers = np.column_stack([centers, np.zeros(centers.shape[0])])
    translation = np.empty((centers.shape[0], 3))
    rotation = np.empty((centers.shape[0], 3))
    for start in range(0, centers.shape[0], chunk):
        block = centers[start : start + chunk]
        query = (block[:, None, :] + lattice[None, :, :]).reshape(-1, 3)
        query[:, 0] = np.clip(query[:, 0], grid.x1[0], grid.x1[-1])
        query[:, 1] = np.clip(query[:, 1], grid.x2[0], grid.x2[-1])
        u = interpolator(query).reshape(block.shape[0], lattice.shape[0], 3)
        translation[start : start + chunk] = u.mean(axis=1)
        rotation[start : start + chunk] = np.cross(lattice[None, :, :], u).sum(axis=1) / moment_norm

    shape = (x1.shape[0], x2.shape[0], 3)
    return ElementaryPlateDisplacement(
        face, x1, x2, translation.reshape(shape), rotation.reshape(shape), EpdTypes.BALL
    )


def kl_split(
    sample: DisplacementSample3D, epd: ElementaryPlateDisplacement
) -> Tuple[DisplacementSample3D, ResidualDisplacement]:
    """Kirchhoff-Love part (U1 - x3 d1U3, U2 - x3 d2U3, U3) and residual."""
    face = epd.face_id
    grid = sample.grids[face]
    if not epd.matches(grid):
        logger.error("E.p.d. of face %d was built on another grid.", face)
        raise DecompositionError("e.p.d. grid doesn't match the sample grid")

    u3 = epd.translation[..., 2]
    order = 2 if min(grid.nx, grid.ny) >= 3 else 1
    d1, d2 = np.gradient(u3, grid.x1, grid.x2, edge_order=order)
    x3 = grid.x3[None, None, :]

    kl = np.empty(grid.shape + (3,))
    kl[..., 0] = epd.translation[:, :, None, 0] - x3 * d1[:, :, None]
    kl[..., 1] = epd.translation[:, :, None, 1] - x3 * d2[:, :, None]
    kl[..., 2] = u3[:, :, None]
    kl_part = DisplacementSample3D({face: grid}, {face: kl})
    residual = ResidualDisplacement(face, grid, sample.values[face] - kl)
    return kl_part, residual


def unfold(
    sample: DisplacementSample3D, face: int, delta: Optional[float] = None
) -> UnfoldedField:
    grid = sample.grids[face]
    delta = grid.delta if delta is None else np.float64(delta)
    return UnfoldedField(face, grid.x1, grid.x2, grid.x3 / delta, sample.values[face], delta)


def fold(
    unfolded: UnfoldedField, grid: PlateGrid3D, delta: Optional[float] = None
) -> DisplacementSample3D:
    """Inverse of unfold onto a plate grid with x3 = delta t3."""
    delta = unfolded.delta if delta is None else np.float64(delta)
    if not np.allclose(grid.x3, delta * unfolded.t3, rtol=0.0, atol=1e-14 * (1.0 + delta)):
        logger.error("Grid thickness coordinates don't match delta * t3.")
        raise DecompositionError("grid doesn't match the unfolded field")
    return DisplacementSample3D({unfolded.face_id: grid}, {unfolded.face_id: unfolded.values})


def _rigid_fit(points: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Least-squares rigid motion t + R ^ (x - c) about the centroid c."""
    center = points.mean(axis=0)
    r = points - center
    matrix = np.zeros((3 * points.shape[0], 6))
    # R ^ r = -[r]x R
    for i in range(3):
        matrix[i::3, i] = 1.0
    matrix[0::3, 4] = r[:, 2]
    matrix[0::3, 5] = -r[:, 1]
    matrix[1::3, 3] = -r[:, 2]
    matrix[1::3, 5] = r[:, 0]
    matrix[2::3, 3] = r[:, 1]
    matrix[2::3, 4] = -r[:, 0]
    solution = np.linalg.lstsq(matrix, values.reshape(-1), rcond=None)[0]
    return solution[:3], solution[3:], center


def erd_fit(
    sample: DisplacementSample3D,
    skeleton: Skeleton,
    edge: int,
    delta: float,
    faces: Optional[Sequence[int]] = None,
    stations: Optional[int] = None,
) -> ElementaryRodDisplacement:
    """Rigid fit per cross-section of the rod {dist(x, J) < delta}.

    Terminal zones of length eta0 delta are replaced by the rigid motion of
    the nearest interior station.

    """
    skeleton_edge = skeleton.edges[edge]
    faces = [f for f in (skeleton_edge.faces if faces is None else faces) if f in sample.grids]
    length = skeleton_edge.length

    points_list, values_list = list(), list()
    spacing = np.inf
    for face_id in faces:
        grid = sample.grids[face_id]
        nodes = grid.nodes_global.reshape(-1, 3)
        s = (nodes - skeleton_edge.a) @ skeleton_edge.direction
        radial = np.linalg.norm(nodes - skeleton_edge.a - s[:, None] * skeleton_edge.direction, axis=1)
        mask = (radial <= delta * (1.0 + 1e-9)) & (s >= -1e-9 * length) & (s <= length * (1.0 + 1e-9))
        points_list.append(nodes[mask])
        values_list.append(sample.global_values(face_id).reshape(-1, 3)[mask])
        spacing = min(spacing, np.min(np.diff(grid.x1)), np.min(np.diff(grid.x2)))
    if not faces:
        logger.error("No plate sample around edge %d.", edge)
        raise DecompositionError(f"no plate sample around edge {edge}")
    points = np.vstack(points_list)
    values = np.vstack(values_list)
    abscissa = (points - skeleton_edge.a) @ skeleton_edge.direction

    count = int(stations) if stations is not None else max(2, int(np.ceil(length / spacing - 1e-6)))
    width = length / count
    centers = (np.arange(count) + 0.5) * width
    translation = np.empty((count, 3))
    rotation = np.empty((count, 3))
    for k, s_k in enumerate(centers):
        section = np.abs(abscissa - s_k) <= 0.5 * width * (1.0 + 1e-9)
        if not np.any(section):
            logger.error("Empty rod section at s=%s on edge %d.", str(s_k), edge)
            raise DecompositionError(f"empty rod section at s={s_k} on edge {edge}")
        t, r, c = _rigid_fit(points[section], values[section])
        axis_point = skeleton_edge.a + s_k * skeleton_edge.direction
        translation[k] = t + np.cross(r, axis_point - c)
        rotation[k] = r

    # Rigid terminal zones
    zone = skeleton.eta0 * delta
    inner = np.flatnonzero((centers >= zone) & (centers <= length - zone))
    if inner.size == 0:
        inner = np.array([count // 2])
    for k_ref, selection in ((inner[0], centers < centers[inner[0]]), (inner[-1], centers > centers[inner[-1]])):
        for k in np.flatnonzero(selection):
            rotation[k] = rotation[k_ref]
            translation[k] = translation[k_ref] + np.cross(
                rotation[k_ref], (centers[k] - centers[k_ref]) * skeleton_edge.direction
            )

    return ElementaryRodDisplacement(
        edge, skeleton_edge.a, skeleton_edge.direction, length, centers, translation, rotation
    )


def _blend(
    translation: np.ndarray,
    rotation: np.ndarray,
    rod: ElementaryRodDisplacement,
    edge,
    face,
    points: np.ndarray,
    scale: float,
) -> Tuple[np.ndarray, np.ndarray]:
    rod_translation, rod_rotation = rod.evaluate(points)
    weight = cutoff(edge.distance(points) / scale)[:, None]
    return (
        face.vectors_to_local(rod_translation) * (1.0 - weight) + translation * weight,
        face.vectors_to_local(rod_rotation) * (1.0 - weight) + rotation * weight,
    )


def blend_edge(
    epd: ElementaryPlateDisplacement,
    erd: ElementaryRodDisplacement,
    skeleton: Skeleton,
    edge: int,
    delta: float,
) -> ElementaryPlateDisplacement:
    """e.r.d. for d < eta0 delta, plate e.p.d. for d > 2 eta0 delta."""
    face = skeleton.faces[epd.face_id]
    nodes = np.stack(np.meshgrid(epd.x1, epd.x2, indexing="ij"), axis=-1).reshape(-1, 2)
    translation, rotation = _blend(
        epd.translation.reshape(-1, 3),
        epd.rotation.reshape(-1, 3),
        erd,
        skeleton.edges[edge],
        face,
        face.to_global(nodes),
        skeleton.eta0 * delta,
    )
    shape = epd.translation.shape
    return ElementaryPlateDisplacement(
        epd.face_id, epd.x1, epd.x2, translation.reshape(shape), rotation.reshape(shape), EpdTypes.BLENDED
    )


def structure_epd(
    sample: DisplacementSample3D,
    skeleton: Skeleton,
    delta: float,
    cells_per_radius: int = 4,
) -> StructureEPD:
    logger.info("Decompose structure sample, delta=%s.", str(delta))
    report = validate_hypotheses(skeleton)
    if not (report.hypotheses["H1"] and report.hypotheses["H2"]):
        logger.error("Decomposition needs H1 and H2: %s", report.message)
        raise HypothesisError(report.message)

    plates = dict()
    for face_id in sample.face_ids:
        extended = extend_sample(sample, face_id, margin=delta)
        plates[face_id] = epd_ball(extended, face_id, delta, cells_per_radius)

    rods = dict()
    for edge in skeleton.edges:
        if edge.is_junction:
            rods[edge.index] = erd_fit(sample, skeleton, edge.index, delta)
        elif edge.clamped:
            rods[edge.index] = ElementaryRodDisplacement.zeros(skeleton, edge.index)
    return StructureEPD(skeleton, delta, plates, rods)


def compare_epd(
    first: ElementaryPlateDisplacement, second: ElementaryPlateDisplacement
) -> Tuple[np.float64, np.float64]:
    """L2(omega) distances of the translations and of the rotations."""
    translation, rotation = second.interpolate(
        np.stack(np.meshgrid(first.x1, first.x2, indexing="ij"), axis=-1).reshape(-1, 2)
    )
    shape = first.translation.shape
    return (
        np.sqrt(grid_l2_norm_sq(first.translation - translation.reshape(shape), first.x1, first.x2)),
        np.sqrt(grid_l2_norm_sq(first.rotation - rotation.reshape(shape), first.x1, first.x2)),
    )


# Estimates
def _row(inequality_id: str, delta: float, lhs: float, rhs: float) -> EstimateRow:
    scale = max(abs(lhs), abs(rhs), 1.0)
    if rhs <= KERNEL_TOLERANCE * scale:
        if lhs <= KERNEL_TOLERANCE * scale:
            status, ratio = EstimateStatus.EXACT_KERNEL, np.nan
        else:
            status, ratio = EstimateStatus.VIOLATION, np.inf
    else:
        status, ratio = EstimateStatus.OK, lhs / rhs
    return EstimateRow(inequality_id, np.float64(delta), np.float64(lhs), np.float64(rhs), np.float64(ratio), status)


def _midsurface_terms(epd: ElementaryPlateDisplacement) -> Tuple[np.float64, np.float64]:
    """(||grad R||^2, sum_a ||dU/dx_a - R ^ e_a||^2) on the midsurface."""
    du1, du2, dr1, dr2 = epd.midsurface_gradients()
    rotation = epd.rotation
    # R ^ e1 = (0, R3, -R2), R ^ e2 = (-R3, 0, R1)
    r_e1 = np.stack([np.zeros_like(rotation[..., 0]), rotation[..., 2], -rotation[..., 1]], axis=-1)
    r_e2 = np.stack([-rotation[..., 2], np.zeros_like(rotation[..., 0]), rotation[..., 0]], axis=-1)
    grad_r = grid_l2_norm_sq(dr1, epd.x1, epd.x2) + grid_l2_norm_sq(dr2, epd.x1, epd.x2)
    shear = grid_l2_norm_sq(du1 - r_e1, epd.x1, epd.x2) + grid_l2_norm_sq(du2 - r_e2, epd.x1, epd.x2)
    return grad_r, shear


def verify_estimates(
    sample: DisplacementSample3D,
    epd: Union[ElementaryPlateDisplacement, StructureEPD],
    delta: Optional[float] = None,
) -> EstimateReport:
    """Left- and right-hand sides of the plate and structure estimates.

    Rows: "fiber" and "kirchhoff_love" for a fiber e.p.d., "ball" for a ball e.p.d.,
    "structure" and "korn" for a structure decomposition. The ratio of "korn" is
    lhs * delta^2 / E(u).

    """
    rows: List[EstimateRow] = list()
    if isinstance(epd, StructureEPD):
        delta = epd.delta if delta is None else np.float64(delta)
        energy = energy_E(sample)
        plates = epd.plates
        values = dict()
        midsurface = np.float64(0.0)
        norms = np.float64(0.0)
        for face_id, plate in plates.items():
            values[face_id] = plate.evaluate(sample.grids[face_id].x3)
            grad_r, shear = _midsurface_terms(plate)
            midsurface += delta ** 3 * grad_r + delta * shear
            norms += delta * grid_l2_norm_sq(plate.rotation, plate.x1, plate.x2)
            norms += delta * grid_l2_norm_sq(plate.translation, plate.x1, plate.x2)
        elementary = sample.with_values(values)
        difference = sample - elementary
        lhs = (
            midsurface
            + energy_E(elementary)
            + energy_D(difference)
            + l2_norm_sq(difference) / delta ** 2
        )
        rows.append(_row("structure", delta, lhs, energy))
        korn = norms + energy_D(sample) + l2_norm_sq(sample)
        row = _row("korn", delta, korn, energy)
        if row.status == EstimateStatus.OK:
            row.ratio = np.float64(korn * delta ** 2 / energy)
        rows.append(row)
        return EstimateReport.from_rows(rows)

    face = epd.face_id
    grid = sample.grids[face]
    delta = grid.delta if delta is None else np.float64(delta)
    single = DisplacementSample3D({face: grid}, {face: sample.values[face]})
    energy = energy_E(single)
    elementary = epd.to_sample(grid)
    difference = single - elementary
    base = energy_E(elementary) + energy_D(difference) + l2_norm_sq(difference) / delta ** 2

    if epd.kind == EpdTypes.FIBER:
        rows.append(_row("fiber", delta, base, energy))
        _, residual = kl_split(single, epd)
        residual_sample = residual.to_sample()
        dx3 = gradient(residual_sample, face)[..., :, 2]
        weights = grid.cell_volumes / dx3.shape[3]
        lhs = l2_norm_sq(residual_sample) / delta ** 2 + np.sum(
            np.where(grid.active, weights * np.sum(dx3 ** 2, axis=(3, 4)), 0.0)
        )
        rows.append(_row("kirchhoff_love", delta, lhs, energy))
    else:
        grad_r, shear = _midsurface_terms(epd)
        lhs = delta ** 3 * grad_r + delta * shear + base
        rows.append(_row("ball", delta, lhs, energy))
    return EstimateReport.from_rows(rows)


if __name__ == "__main__":
    logger.info("This is the file for the displacement decompositions.")
