# -*- coding: utf-8 -*-

"""Sampled 3D displacement fields.

Displacements of the thickened plates are sampled on per-plate tensor grids
covering omega_l x (-delta, delta) and interpolated trilinearly. Strains,
the energies E(u) = int gamma:gamma and D(u) = int grad u:grad u and the
isotropic material law live here as well.

"""

from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type, Union
import warnings

import numpy as np

from platestruct.core import EmptyRegionWarning, GeometryError, MaterialError
from platestruct.helper import get_logger, save_rows
from platestruct.skeleton import Face

# Initialize global logger
logger = get_logger(__name__)

GAUSS_POINTS = np.array(
    [
        [a, b, c]
        for a in (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
        for b in (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
        for c in (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
    ]
)
CENTER_POINT = np.array([[0.5, 0.5, 0.5]])

Region = Callable[[np.ndarray], np.ndarray]


# Material classes
class Material:
    """Material class.

    Isotropic linear elastic material given by its Lame constants.

    """

    def __init__(self: Material, lam: float, mu: float):
        """Initialize Material class.

        Init function of the Material class.

        """
        self._lam = np.float64(lam)
        self._mu = np.float64(mu)
        if not (np.isfinite(self._lam) and np.isfinite(self._mu)):
            logger.error("Lame constants must be finite.")
            raise MaterialError("Lame constants must be finite")
        if self._mu <= 0.0 or self._lam < 0.0:
            logger.error(
                "Inadmissible Lame constants: lambda=%s, mu=%s.",
                str(self._lam),
                str(self._mu),
            )
            raise MaterialError("need mu > 0 and lambda >= 0")

    @classmethod
    def from_young(cls: Type[Material], young: float, poisson: float) -> Material:
        if not (0.0 <= poisson < 0.5):
            logger.error("Poisson ratio outside [0, 0.5): %s.", str(poisson))
            raise MaterialError("Poisson ratio must lie in [0, 0.5)")
        lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
        mu = young / (2.0 * (1.0 + poisson))
        return cls(lam, mu)

    @property
    def lam(self: Material) -> np.float64:
        return self._lam

    @property
    def mu(self: Material) -> np.float64:
        return self._mu

    @property
    def young(self: Material) -> np.float64:
        return self._mu * (3.0 * self._lam + 2.0 * self._mu) / (self._lam + self._mu)

    @property
    def poisson(self: Material) -> np.float64:
        return self._lam / (2.0 * (self._lam + self._mu))

    @property
    def plane_stress_modulus(self: Material) -> np.float64:
        """E/(1 - nu^2)."""
        return self.young / (1.0 - self.poisson ** 2)

    @property
    def bending_modulus(self: Material) -> np.float64:
        """D* = E/(3(1 - nu^2))."""
        return self.plane_stress_modulus / 3.0

    @property
    def transverse_ratio(self: Material) -> np.float64:
        """lambda/(lambda + 2 mu)."""
        return self._lam / (self._lam + 2.0 * self._mu)

    @property
    def tensor(self: Material) -> np.ndarray:
        eye = np.eye(3)
        return self._lam * np.einsum("ij,kl->ijkl", eye, eye) + self._mu * (
            np.einsum("ik,jl->ijkl", eye, eye) + np.einsum("il,jk->ijkl", eye, eye)
        )

    def stress(self: Material, strain: np.ndarray) -> np.ndarray:
        strain = np.asarray(strain, dtype=np.float64)
        trace = np.trace(strain, axis1=-2, axis2=-1)
        return self._lam * trace[..., None, None] * np.eye(3) + 2.0 * self._mu * strain


# Grid classes
class PlateGrid3D:
    """PlateGrid3D class.

    Tensor grid over omega_l x (-delta, delta) in the local frame of a face.
    The in-plane part covers an axis-aligned rectangle of the local frame
    (possibly enlarged beyond the face, see `core_bounds`). Cells can be
    switched off where another plate owns the volume.

    """

    def __init__(
        self: PlateGrid3D,
        face: Face,
        x1: np.ndarray,
        x2: np.ndarray,
        x3: np.ndarray,
        delta: float,
        core_bounds: Optional[Tuple[float, float, float, float]] = None,
    ):
        """Initialize PlateGrid3D class.

        Init function of the PlateGrid3D class.

        """
        self._face = face
        self._x1 = np.asarray(x1, dtype=np.float64)
        self._x2 = np.asarray(x2, dtype=np.float64)
        self._x3 = np.asarray(x3, dtype=np.float64)
        self._delta = np.float64(delta)

        for name, coords in (("x1", self._x1), ("x2", self._x2), ("x3", self._x3)):
            if coords.ndim != 1 or coords.shape[0] < 2:
                logger.error("Grid direction %s needs at least 2 nodes.", name)
                raise GeometryError(f"grid direction {name} needs >= 2 nodes")
            if np.any(np.diff(coords) <= 0.0):
                logger.error("Degenerate cells in grid direction %s.", name)
                raise GeometryError(f"degenerate cell in grid direction {name}")
        if self._x3.shape[0] < 3 or self._x3.shape[0] % 2 == 0:
            logger.error("Through-thickness node count must be odd and >= 3.")
            raise GeometryError("nz must be odd and >= 3")
        if self._delta <= 0.0:
            logger.error("Half thickness must be positive.")
            raise GeometryError("delta must be positive")

        if core_bounds is None:
            core_bounds = (self._x1[0], self._x1[-1], self._x2[0], self._x2[-1])
        self._core_bounds = tuple(float(b) for b in core_bounds)
        self._active = np.ones(self.cell_shape, dtype=bool)

    @classmethod
    def regular(
        cls: Type[PlateGrid3D],
        face: Face,
        nx: int,
        ny: int,
        nz: int,
        delta: float,
        bounds: Optional[Tuple[float, float, float, float]] = None,
    ) -> PlateGrid3D:
        if bounds is None:
            bounds = face.rectangle_bounds
        if bounds is None:
            logger.error("Face %d is not a rectangle in its local frame.", face.id)
            raise GeometryError(
                f"face {face.id}: plate grids need an axis-aligned rectangle"
            )
        return cls(
            face=face,
            x1=np.linspace(bounds[0], bounds[1], int(nx)),
            x2=np.linspace(bounds[2], bounds[3], int(ny)),
            x3=np.linspace(-delta, delta, int(nz)),
            delta=delta,
        )

    @classmethod
    def from_spacing(
        cls: Type[PlateGrid3D],
        face: Face,
        spacing: float,
        nz: int,
        delta: float,
        bounds: Optional[Tuple[float, float, float, float]] = None,
    ) -> PlateGrid3D:
        if bounds is None:
            bounds = face.rectangle_bounds
        if bounds is None:
            logger.error("Face %d is not a rectangle in its local frame.", face.id)
            raise GeometryError(
                f"face {face.id}: plate grids need an axis-aligned rectangle"
            )
        nx = max(2, int(np.ceil((bounds[1] - bounds[0]) / spacing - 1e-9)) + 1)
        ny = max(2, int(np.ceil((bounds[3] - bounds[2]) / spacing - 1e-9)) + 1)
        return cls.regular(face, nx, ny, nz, delta, bounds)

    @property
    def face(self: PlateGrid3D) -> Face:
        return self._face

    @property
    def face_id(self: PlateGrid3D) -> int:
        return self._face.id

    @property
    def x1(self: PlateGrid3D) -> np.ndarray:
        return self._x1

    @property
    def x2(self: PlateGrid3D) -> np.ndarray:
        return self._x2

    @property
    def x3(self: PlateGrid3D) -> np.ndarray:
        return self._x3

    @property
    def t3(self: PlateGrid3D) -> np.ndarray:
        return self._x3 / self._delta

    @property
    def delta(self: PlateGrid3D) -> np.float64:
        return self._delta

    @property
    def nx(self: PlateGrid3D) -> int:
        return self._x1.shape[0]

    @property
    def ny(self: PlateGrid3D) -> int:
        return self._x2.shape[0]

    @property
    def nz(self: PlateGrid3D) -> int:
        return self._x3.shape[0]

    @property
    def shape(self: PlateGrid3D) -> Tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def cell_shape(self: PlateGrid3D) -> Tuple[int, int, int]:
        return (self.nx - 1, self.ny - 1, self.nz - 1)

    @property
    def core_bounds(self: PlateGrid3D) -> Tuple[float, float, float, float]:
        return self._core_bounds

    @property
    def active(self: PlateGrid3D) -> np.ndarray:
        return self._active

    @active.setter
    def active(self: PlateGrid3D, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.cell_shape:
            logger.error("Active mask has the wrong shape.")
            raise ValueError("active mask shape mismatch")
        self._active = mask

    @property
    def midplane_index(self: PlateGrid3D) -> int:
        return self.nz // 2

    @property
    def nodes_local(self: PlateGrid3D) -> np.ndarray:
        return np.stack(np.meshgrid(self._x1, self._x2, self._x3, indexing="ij"), axis=-1)

    @property
    def nodes_global(self: PlateGrid3D) -> np.ndarray:
        nodes = self.nodes_local.reshape(-1, 3)
        return self._face.to_global(nodes[:, :2], nodes[:, 2]).reshape(self.shape + (3,))

    @property
    def midsurface_local(self: PlateGrid3D) -> np.ndarray:
        return np.stack(np.meshgrid(self._x1, self._x2, indexing="ij"), axis=-1)

    @property
    def cell_volumes(self: PlateGrid3D) -> np.ndarray:
        return (
            np.diff(self._x1)[:, None, None]
            * np.diff(self._x2)[None, :, None]
            * np.diff(self._x3)[None, None, :]
        )

    def cell_points_local(self: PlateGrid3D, points01: np.ndarray) -> np.ndarray:
        """Local coordinates of reference points in every cell, shape
        (ncx, ncy, ncz, npts, 3)."""
        lower = [c[:-1] for c in (self._x1, self._x2, self._x3)]
        sizes = [np.diff(c) for c in (self._x1, self._x2, self._x3)]
        result = np.empty(self.cell_shape + (points01.shape[0], 3))
        result[..., 0] = lower[0][:, None, None, None] + sizes[0][:, None, None, None] * points01[:, 0]
        result[..., 1] = lower[1][None, :, None, None] + sizes[1][None, :, None, None] * points01[:, 1]
        result[..., 2] = lower[2][None, None, :, None] + sizes[2][None, None, :, None] * points01[:, 2]
        return result

    def cell_points_global(self: PlateGrid3D, points01: np.ndarray) -> np.ndarray:
        local = self.cell_points_local(points01)
        flat = local.reshape(-1, 3)
        return self._face.to_global(flat[:, :2], flat[:, 2]).reshape(local.shape)

    def copy(self: PlateGrid3D) -> PlateGrid3D:
        grid = PlateGrid3D(
            self._face, self._x1, self._x2, self._x3, self._delta, self._core_bounds
        )
        grid.active = self._active.copy()
        return grid


# Tie classes
@dataclass
class TieGroup:
    slave_face: int
    master_face: int
    slave_nodes: np.ndarray
    master_nodes: np.ndarray
    weights: np.ndarray
    rotation: np.ndarray


class TieTable:
    """TieTable class.

    Slave nodes lying in a master plate's slab take the trilinear
    interpolation of the master field, rotated to the slave frame. Groups are
    applied in increasing slave face order so masters are final before use.

    """

    def __init__(self: TieTable, groups: Optional[List[TieGroup]] = None):
        self._groups: List[TieGroup] = list() if groups is None else list(groups)
        self._groups.sort(key=lambda g: (g.slave_face, g.master_face))

    @property
    def groups(self: TieTable) -> List[TieGroup]:
        return self._groups

    def apply(self: TieTable, values: Dict[int, np.ndarray]) -> Dict[int, np.ndarray]:
        for group in self._groups:
            master = values[group.master_face].reshape(-1, 3)
            interpolated = np.einsum("nk,nkc->nc", group.weights, master[group.master_nodes])
            slave = values[group.slave_face].reshape(-1, 3)
            slave[group.slave_nodes] = interpolated @ group.rotation.T
        return values

    def mismatch(self: TieTable, values: Dict[int, np.ndarray]) -> np.float64:
        error = np.float64(0.0)
        for group in self._groups:
            master = values[group.master_face].reshape(-1, 3)
            interpolated = np.einsum("nk,nkc->nc", group.weights, master[group.master_nodes])
            slave = values[group.slave_face].reshape(-1, 3)[group.slave_nodes]
            if slave.size:
                error = max(error, np.max(np.abs(slave - interpolated @ group.rotation.T)))
        return error


# Sample classes
class DisplacementSample3D:
    """DisplacementSample3D class.

    One 3-vector per grid node and plate, stored in the local frame
    components of the plate.

    """

    def __init__(
        self: DisplacementSample3D,
        grids: Dict[int, PlateGrid3D],
        values: Dict[int, np.ndarray],
        ties: Optional[TieTable] = None,
    ):
        """Initialize DisplacementSample3D class.

        Init function of the DisplacementSample3D class.

        """
        self._grids = dict(grids)
        self._values: Dict[int, np.ndarray] = dict()
        for face_id, grid in self._grids.items():
            array = np.asarray(values[face_id], dtype=np.float64)
            if array.shape != grid.shape + (3,):
                logger.error("Sample of face %d has the wrong shape.", face_id)
                raise ValueError(f"sample of face {face_id} has wrong shape")
            self._values[face_id] = array.copy()
        self._ties = ties if ties is not None else TieTable()

    @classmethod
    def zeros(
        cls: Type[DisplacementSample3D],
        grids: Dict[int, PlateGrid3D],
        ties: Optional[TieTable] = None,
    ) -> DisplacementSample3D:
        return cls(
            grids, {f: np.zeros(g.shape + (3,)) for f, g in grids.items()}, ties
        )

    @property
    def grids(self: DisplacementSample3D) -> Dict[int, PlateGrid3D]:
        return self._grids

    @property
    def values(self: DisplacementSample3D) -> Dict[int, np.ndarray]:
        return self._values

    @property
    def ties(self: DisplacementSample3D) -> TieTable:
        return self._ties

    @property
    def face_ids(self: DisplacementSample3D) -> List[int]:
        return sorted(self._grids.keys())

    def global_values(self: DisplacementSample3D, face_id: int) -> np.ndarray:
        return self._grids[face_id].face.vectors_to_global(self._values[face_id])

    def with_values(
        self: DisplacementSample3D, values: Dict[int, np.ndarray]
    ) -> DisplacementSample3D:
        return DisplacementSample3D(self._grids, values, self._ties)

    def copy(self: DisplacementSample3D) -> DisplacementSample3D:
        return self.with_values(self._values)

    def stitch(self: DisplacementSample3D) -> DisplacementSample3D:
        values = {f: v.copy() for f, v in self._values.items()}
        return self.with_values(self._ties.apply(values))

    def stitching_error(self: DisplacementSample3D) -> np.float64:
        return self._ties.mismatch(self._values)

    def __add__(
        self: DisplacementSample3D, other: DisplacementSample3D
    ) -> DisplacementSample3D:
        return self.with_values({f: v + other.values[f] for f, v in self._values.items()})

    def __sub__(
        self: DisplacementSample3D, other: DisplacementSample3D
    ) -> DisplacementSample3D:
        return self.with_values({f: v - other.values[f] for f, v in self._values.items()})

    def __mul__(self: DisplacementSample3D, factor: float) -> DisplacementSample3D:
        return self.with_values({f: v * factor for f, v in self._values.items()})

    __rmul__ = __mul__


# Trilinear kernels
def _corners(values: np.ndarray) -> Dict[Tuple[int, int, int], np.ndarray]:
    nx, ny, nz = values.shape[:3]
    return {
        (a, b, c): values[a : nx - 1 + a, b : ny - 1 + b, c : nz - 1 + c]
        for a in (0, 1)
        for b in (0, 1)
        for c in (0, 1)
    }


def cell_values(values: np.ndarray, points01: np.ndarray) -> np.ndarray:
    """Trilinear interpolation at reference points of every cell.

    Returns shape (ncx, ncy, ncz, npts) + trailing value shape.

    """
    corners = _corners(values)
    result = 0.0
    for (a, b, c), corner in corners.items():
        weight = (
            (points01[:, 0] if a else 1.0 - points01[:, 0])
            * (points01[:, 1] if b else 1.0 - points01[:, 1])
            * (points01[:, 2] if c else 1.0 - points01[:, 2])
        )
        result = result + corner[:, :, :, None] * weight.reshape((1, 1, 1, -1) + (1,) * (values.ndim - 3))
    return result


def cell_gradients(grid: PlateGrid3D, values: np.ndarray, points01: np.ndarray) -> np.ndarray:
    """Gradients du_i/dx_j of the trilinear interpolant, shape
    (ncx, ncy, ncz, npts, 3, 3)."""
    corners = _corners(values)
    sizes = [np.diff(grid.x1), np.diff(grid.x2), np.diff(grid.x3)]
    shape = grid.cell_shape + (points01.shape[0], 3)
    gradient = np.empty(grid.cell_shape + (points01.shape[0], 3, 3))
    for direction in range(3):
        others = [d for d in range(3) if d != direction]
        result = np.zeros(shape)
        for b in (0, 1):
            for c in (0, 1):
                upper = [0, 0, 0]
                lower = [0, 0, 0]
                upper[direction], lower[direction] = 1, 0
                upper[others[0]] = lower[others[0]] = b
                upper[others[1]] = lower[others[1]] = c
                weight = (points01[:, others[0]] if b else 1.0 - points01[:, others[0]]) * (
                    points01[:, others[1]] if c else 1.0 - points01[:, others[1]]
                )
                result += (corners[tuple(upper)] - corners[tuple(lower)])[:, :, :, None, :] * weight[None, None, None, :, None]
        step = sizes[direction].reshape([-1 if d == direction else 1 for d in range(3)])
        gradient[..., direction] = result / step[..., None, None]
    return gradient


def _symmetric(gradient: np.ndarray) -> np.ndarray:
    return 0.5 * (gradient + np.swapaxes(gradient, -1, -2))


# Operations
def strain(
    sample: DisplacementSample3D, points: str = "gauss"
) -> Dict[int, np.ndarray]:
    """Per-cell strains gamma_ij in local components.

    `points` is "gauss" (2x2x2 points per cell) or "center".

    """
    points01 = GAUSS_POINTS if points == "gauss" else CENTER_POINT
    result = dict()
    for face_id in sample.face_ids:
        gradient = cell_gradients(sample.grids[face_id], sample.values[face_id], points01)
        result[face_id] = _symmetric(gradient) if points == "gauss" else _symmetric(gradient)[:, :, :, 0]
    return result


def gradient(sample: DisplacementSample3D, face_id: int) -> np.ndarray:
    return cell_gradients(sample.grids[face_id], sample.values[face_id], GAUSS_POINTS)


def stress(strain_field: np.ndarray, material: Material) -> np.ndarray:
    return material.stress(strain_field)


def cell_mask(
    grid: PlateGrid3D, region: Optional[Region] = None
) -> np.ndarray:
    mask = grid.active.copy()
    if region is not None:
        centers = grid.cell_points_global(CENTER_POINT)[:, :, :, 0]
        mask &= np.asarray(region(centers.reshape(-1, 3))).reshape(grid.cell_shape)
    return mask


def _integrate(
    sample: DisplacementSample3D,
    density: Callable[[int], np.ndarray],
    region: Optional[Region],
    faces: Optional[Sequence[int]],
) -> np.float64:
    total = np.float64(0.0)
    selected = 0
    for face_id in sample.face_ids if faces is None else faces:
        grid = sample.grids[face_id]
        mask = cell_mask(grid, region)
        selected += int(mask.sum())
        values = density(face_id)
        weights = grid.cell_volumes / GAUSS_POINTS.shape[0]
        total += np.sum(np.where(mask, weights * values.sum(axis=3), 0.0))
    if selected == 0:
        warnings.warn("Integration region contains no cells.", EmptyRegionWarning)
        return np.float64(0.0)
    return total


def energy_E(
    sample: DisplacementSample3D,
    region: Optional[Region] = None,
    faces: Optional[Sequence[int]] = None,
) -> np.float64:
    """int gamma_ij(u) gamma_ij(u) over the active cells in region."""

    def density(face_id: int) -> np.ndarray:
        gamma = _symmetric(gradient(sample, face_id))
        return np.sum(gamma ** 2, axis=(-2, -1))

    return _integrate(sample, density, region, faces)


def energy_D(
    sample: DisplacementSample3D,
    region: Optional[Region] = None,
    faces: Optional[Sequence[int]] = None,
) -> np.float64:
    """int du_i/dx_j du_i/dx_j over the active cells in region."""

    def density(face_id: int) -> np.ndarray:
        return np.sum(gradient(sample, face_id) ** 2, axis=(-2, -1))

    return _integrate(sample, density, region, faces)


def l2_norm_sq(
    sample: DisplacementSample3D,
    region: Optional[Region] = None,
    faces: Optional[Sequence[int]] = None,
) -> np.float64:
    def density(face_id: int) -> np.ndarray:
        values = cell_values(sample.values[face_id], GAUSS_POINTS)
        return np.sum(values ** 2, axis=-1)

    return _integrate(sample, density, region, faces)


def sample_from_function(
    grids: Dict[int, PlateGrid3D],
    func: Callable,
    components: str = "global",
    ties: Optional[TieTable] = None,
) -> DisplacementSample3D:
    """Sample an analytic field on plate grids.

    With components="global", func maps global points (n, 3) to global
    vectors (n, 3). With components="local", func(face_id, local points)
    returns local vectors.

    """
    values = dict()
    for face_id, grid in grids.items():
        if components == "global":
            points = grid.nodes_global.reshape(-1, 3)
            vectors = grid.face.vectors_to_local(np.asarray(func(points)))
        else:
            vectors = np.asarray(func(face_id, grid.nodes_local.reshape(-1, 3)))
        values[face_id] = vectors.reshape(grid.shape + (3,))
    sample = DisplacementSample3D(grids, values, ties)
    return sample.stitch() if ties is not None else sample


def save_sample_csv(sample: DisplacementSample3D, filename: Union[str, Path]):
    logger.info("Export displacement sample: %s", str(filename))
    rows = list()
    for face_id in sample.face_ids:
        grid = sample.grids[face_id]
        nodes = grid.nodes_global
        values = sample.values[face_id]
        for i in range(grid.nx):
            for j in range(grid.ny):
                for k in range(grid.nz):
                    rows.append(
                        [face_id, i, j, k, *nodes[i, j, k].tolist(), *values[i, j, k].tolist()]
                    )
    save_rows(
        filename,
        ["face_id", "i", "j", "k", "x", "y", "z", "u1", "u2", "u3"],
        rows,
    )


if __name__ == "__main__":
    logger.info("This is the file for the sampled displacement fields.")
