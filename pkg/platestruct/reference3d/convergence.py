# -*- coding: utf-8 -*-

"""Convergence of the thick structure towards the limit models.

For every thickness of a strictly decreasing list the 3D problem is solved
and its unfolded strains are compared with the limit strains
gamma_ab(U_E) - t3 d_ab U_I3, the transverse limit of gamma_33 and zero for
gamma_a3 and sigma_i3. The study passes when every junction-excluded
distance and the Korn ratio are non-increasing along the list within 10
percent and the energy ratio stays bounded.

"""

from __future__ import annotations
from dataclasses import asdict, dataclass, field, fields
from multiprocessing.pool import ThreadPool
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Type, Union

import numpy as np

from platestruct.core import (
    BaseResultClass,
    ConfigError,
    DecompositionError,
    HypothesisError,
)
from platestruct.decompose import structure_epd, verify_estimates
from platestruct.fields import (
    CENTER_POINT,
    DisplacementSample3D,
    Material,
    energy_E,
    strain,
)
from platestruct.helper import get_logger, save_rows
from platestruct.reference3d.core import Structure3DProblem, solve_3d
from platestruct.skeleton import JunctionRegion, Skeleton, junction_region
from platestruct.solvers.core import ForceModel, LimitSolution
from platestruct.solvers.stress import solve_limit
from platestruct.spaces.core import MembraneBendingDofs, evaluate

# Initialize global logger
logger = get_logger(__name__)

SLACK = 0.1
FLOOR = 1e-10
BOUNDED = 2.0
DISTANCES = ("strain_distance_ab", "strain_distance_a3", "strain_distance_33", "sigma_i3_norm")
RATIOS = ("energy_over_delta",)
DECREASING_RATIOS = ("korn_ratio",)


# Record classes
@dataclass
class ConvergenceRow:
    delta: np.float64
    energy: np.float64
    energy_over_delta: np.float64
    strain_distance_ab: np.float64
    strain_distance_a3: np.float64
    strain_distance_33: np.float64
    sigma_i3_norm: np.float64
    korn_ratio: np.float64
    junction_excluded: bool
    strain_tslope_ab: np.float64
    work_over_2delta: np.float64
    limit_work: np.float64


def non_increasing(values: Sequence[float], slack: float = SLACK, floor: float = FLOOR) -> bool:
    values = [float(v) for v in values]
    return all(b <= (1.0 + slack) * a + floor for a, b in zip(values[:-1], values[1:]))


def bounded(values: Sequence[float], limit: float = BOUNDED) -> bool:
    """max/min below limit; undefined (nan) entries are skipped."""
    values = np.asarray([v for v in values if np.isfinite(v)], dtype=np.float64)
    if values.size < 2:
        return True
    if np.min(np.abs(values)) == 0.0:
        return bool(np.max(np.abs(values)) == 0.0)
    return bool(np.max(np.abs(values)) / np.min(np.abs(values)) < limit)


@dataclass
class ConvergenceRecord(BaseResultClass):
    success: bool
    status: np.int8
    message: str
    rows: List[ConvergenceRow] = field(default_factory=list)
    flags: Dict[str, bool] = field(default_factory=dict)

    @classmethod
    def from_rows(cls: Type[ConvergenceRecord], rows: List[ConvergenceRow]) -> ConvergenceRecord:
        """Trend flags per variant.

        With junction-excluded rows present only their flags decide the
        outcome; the full rows are reported for comparison.

        """
        flags = dict()
        for excluded in sorted({row.junction_excluded for row in rows}):
            variant = [row for row in rows if row.junction_excluded == excluded]
            suffix = "excluded" if excluded else "full"
            for name in DISTANCES:
                flags["{}[{}]".format(name, suffix)] = non_increasing([getattr(r, name) for r in variant])
            for name in RATIOS:
                flags["{}[{}]".format(name, suffix)] = bounded([getattr(r, name) for r in variant])
            for name in DECREASING_RATIOS:
                values = [getattr(r, name) for r in variant]
                flags["{}[{}]".format(name, suffix)] = non_increasing([v for v in values if np.isfinite(v)])
        deciding = "[excluded]" if any(row.junction_excluded for row in rows) else "[full]"
        failed = [name for name, value in flags.items() if not value and name.endswith(deciding)]
        if failed:
            message = "Trend check failed: {}.".format(", ".join(failed))
            logger.warning(message)
            return cls(False, np.int8(1), message, rows, flags)
        return cls(True, np.int8(0), "All trend checks passed.", rows, flags)

    @classmethod
    def from_failure(cls: Type[ConvergenceRecord], message: str) -> ConvergenceRecord:
        return cls(False, np.int8(1), message)

    @property
    def deltas(self: ConvergenceRecord) -> List[np.float64]:
        return sorted({row.delta for row in self.rows}, reverse=True)

    def column(self: ConvergenceRecord, name: str, junction_excluded: bool = True) -> np.ndarray:
        return np.array(
            [getattr(r, name) for r in self.rows if r.junction_excluded == junction_excluded]
        )

    def save_csv(self: ConvergenceRecord, filename: Union[str, Path], comments: Optional[Sequence[str]] = None):
        header = [f.name for f in fields(ConvergenceRow)]
        rows = [list(asdict(row).values()) for row in self.rows]
        comments = list(comments or list()) + ["# {}".format(self.message)]
        save_rows(filename, header, rows, comments)


# Distances
def _selected_cells(
    problem: Structure3DProblem, face_id: int, region: Optional[JunctionRegion]
) -> np.ndarray:
    """Active cells with the center over the face and outside the region."""
    grid = problem.grids[face_id]
    centers = grid.cell_points_local(CENTER_POINT)[:, :, :, 0]
    bounds = grid.core_bounds
    tol = 1e-12 * (1.0 + float(problem.skeleton.diameter))
    mask = grid.active.copy()
    mask &= (centers[..., 0] >= bounds[0] - tol) & (centers[..., 0] <= bounds[1] + tol)
    mask &= (centers[..., 1] >= bounds[2] - tol) & (centers[..., 1] <= bounds[3] + tol)
    if region is not None:
        points = grid.face.to_global(centers[..., :2].reshape(-1, 2))
        mask &= ~np.asarray(region(points)).reshape(mask.shape)
    return mask


@dataclass
class StrainDistances:
    strain_distance_ab: np.float64
    strain_distance_a3: np.float64
    strain_distance_33: np.float64
    sigma_i3_norm: np.float64
    strain_tslope_ab: np.float64


def strain_distances(
    sample: DisplacementSample3D,
    problem: Structure3DProblem,
    dofs: MembraneBendingDofs,
    extensional: np.ndarray,
    inextensional: np.ndarray,
    material: Material,
    region: Optional[JunctionRegion] = None,
) -> StrainDistances:
    """Unfolded L2 distances between the cell-center strains of the sample
    and the limit strains, over the cells outside region."""
    delta = problem.delta
    centers_strain = strain(sample, points="center")
    totals = dict(ab=0.0, a3=0.0, s33=0.0, sigma=0.0, slope=0.0)
    ratio = material.transverse_ratio

    for face_id, grid in problem.grids.items():
        mask = _selected_cells(problem, face_id, region)
        if not np.any(mask):
            continue
        gamma = centers_strain[face_id]
        centers = grid.cell_points_local(CENTER_POINT)[:, :, :, 0]
        t3 = centers[..., 2] / delta
        volumes = grid.cell_volumes / delta

        bounds = grid.core_bounds
        columns = centers[:, :, 0, :2].reshape(-1, 2)
        columns = np.column_stack(
            [np.clip(columns[:, 0], bounds[0], bounds[1]), np.clip(columns[:, 1], bounds[2], bounds[3])]
        )
        g = evaluate(dofs, extensional, face_id, columns).strain.reshape(grid.nx - 1, grid.ny - 1, 1, 3)
        h = evaluate(dofs, inextensional, face_id, columns).hessian.reshape(grid.nx - 1, grid.ny - 1, 1, 3)

        limit = np.empty(gamma.shape[:3] + (2, 2))
        limit[..., 0, 0] = g[..., 0] - t3 * h[..., 0]
        limit[..., 1, 1] = g[..., 1] - t3 * h[..., 1]
        limit[..., 0, 1] = limit[..., 1, 0] = g[..., 2] - t3 * h[..., 2]
        limit_33 = ratio * (-(g[..., 0] + g[..., 1]) + t3 * (h[..., 0] + h[..., 1]))

        weights = np.where(mask, volumes, 0.0)
        totals["ab"] += np.sum(weights * np.sum((gamma[..., :2, :2] - limit) ** 2, axis=(-2, -1)))
        totals["a3"] += np.sum(weights * 2.0 * (gamma[..., 0, 2] ** 2 + gamma[..., 1, 2] ** 2))
        totals["s33"] += np.sum(weights * (gamma[..., 2, 2] - limit_33) ** 2)
        sigma = material.stress(gamma)
        totals["sigma"] += np.sum(
            weights * (2.0 * sigma[..., 0, 2] ** 2 + 2.0 * sigma[..., 1, 2] ** 2 + sigma[..., 2, 2] ** 2)
        )

        # least-squares slope in t3 of every in-plane column
        full = np.all(mask, axis=2)
        if np.any(full):
            t = t3 - t3.mean(axis=2, keepdims=True)
            values = gamma[..., :2, :2]
            slope = np.sum(t[..., None, None] * (values - values.mean(axis=2, keepdims=True)), axis=2)
            slope /= np.sum(t ** 2, axis=2)[..., None, None]
            target = np.empty_like(slope)
            target[..., 0, 0] = -h[:, :, 0, 0]
            target[..., 1, 1] = -h[:, :, 0, 1]
            target[..., 0, 1] = target[..., 1, 0] = -h[:, :, 0, 2]
            areas = np.outer(np.diff(grid.x1), np.diff(grid.x2))
            totals["slope"] += np.sum(
                np.where(full, areas, 0.0) * np.sum((slope - target) ** 2, axis=(-2, -1))
            )

    return StrainDistances(
        strain_distance_ab=np.float64(np.sqrt(totals["ab"])),
        strain_distance_a3=np.float64(np.sqrt(totals["a3"])),
        strain_distance_33=np.float64(np.sqrt(totals["s33"])),
        sigma_i3_norm=np.float64(np.sqrt(totals["sigma"])),
        strain_tslope_ab=np.float64(np.sqrt(totals["slope"])),
    )


def _korn_ratio(sample: DisplacementSample3D, skeleton: Skeleton, delta: float) -> np.float64:
    try:
        decomposition = structure_epd(sample, skeleton, delta, cells_per_radius=2)
        return verify_estimates(sample, decomposition, delta).ratio("korn")
    except (DecompositionError, HypothesisError) as error:
        logger.warning("No Korn ratio at delta=%s: %s", str(delta), str(error))
        return np.float64(np.nan)


def check_delta_list(delta_list: Sequence[float], delta0: float) -> List[float]:
    """Validated thickness list.

    Raises:
        ConfigError: the list is not strictly decreasing or leaves (0, delta0].

    """
    deltas = [float(d) for d in delta_list]
    if any(not np.isfinite(d) or d <= 0.0 or d > delta0 * (1.0 + 1e-12) for d in deltas):
        logger.error("Thicknesses %s outside (0, %s].", deltas, str(delta0))
        raise ConfigError("delta_list {} outside (0, {}]".format(deltas, delta0))
    if any(b >= a for a, b in zip(deltas[:-1], deltas[1:])):
        logger.error("Thicknesses %s aren't strictly decreasing.", deltas)
        raise ConfigError("delta_list {} isn't strictly decreasing".format(deltas))
    return deltas


def _delta_rows(
    delta: float,
    skeleton: Skeleton,
    material: Material,
    forces: ForceModel,
    limit: LimitSolution,
    region: Optional[JunctionRegion],
    nz: int,
    inplane_factor: float,
    variants: Sequence[bool],
    estimates: bool,
) -> List[ConvergenceRow]:
    """Rows of one thickness, one per variant."""
    logger.info("Convergence study, delta=%s.", str(delta))
    problem = Structure3DProblem(
        skeleton, delta, material, forces, nz=nz, inplane_factor=inplane_factor
    )
    sample = solve_3d(problem)
    energy = energy_E(sample)
    work = problem.work(sample) / (2.0 * delta)
    korn = _korn_ratio(sample, skeleton, delta) if estimates else np.float64(np.nan)
    limit_work = limit.membrane_work + limit.bending_work

    rows = list()
    for excluded in variants:
        distances = strain_distances(
            sample,
            problem,
            limit.dofs,
            limit.extensional,
            limit.inextensional,
            material,
            region if excluded else None,
        )
        rows.append(
            ConvergenceRow(
                delta=np.float64(delta),
                energy=np.float64(energy),
                energy_over_delta=np.float64(energy / delta),
                junction_excluded=bool(excluded),
                korn_ratio=np.float64(korn),
                work_over_2delta=np.float64(work),
                limit_work=np.float64(limit_work),
                **asdict(distances),
            )
        )
    return rows


def convergence_study(
    skeleton: Skeleton,
    material: Material,
    forces: ForceModel,
    delta_list: Sequence[float] = (0.2, 0.1, 0.05),
    limit: Optional[LimitSolution] = None,
    mesh_size: float = 0.125,
    grading: bool = True,
    nz: int = 5,
    inplane_factor: float = 1.0,
    junction_factor: float = 2.0,
    variants: Sequence[bool] = (True,),
    estimates: bool = True,
    workers: int = 1,
) -> ConvergenceRecord:
    """Solve the 3D problem for every thickness and compare with the limit.

    Every junction-excluded distance is measured outside the junction
    region of the largest thickness, so all rows share one domain.

    Args:
        limit: Limit solution; solved with mesh_size if missing.
        variants: junction_excluded values, one row per variant and thickness.
        estimates: Compute the Korn ratio of a structure decomposition.
        workers: Number of thicknesses solved at the same time. Rows are
            merged in the order of delta_list.

    Raises:
        ConfigError: invalid delta list.

    """
    deltas = check_delta_list(delta_list, skeleton.delta0)
    if len(deltas) < 2:
        logger.warning("Trend needs at least two thicknesses.")
        return ConvergenceRecord.from_failure("trend needs ≥ 2 deltas")
    if limit is None:
        limit = solve_limit(skeleton, material, forces, mesh_size=mesh_size, grading=grading)

    region = None
    if skeleton.junction_edges:
        region = junction_region(skeleton, None, deltas[0], junction_factor)

    arguments = [
        (delta, skeleton, material, forces, limit, region, nz, inplane_factor, variants, estimates)
        for delta in deltas
    ]
    if workers > 1:
        with ThreadPool(processes=min(int(workers), len(deltas))) as pool:
            results = [pool.apply_async(_delta_rows, args) for args in arguments]
            groups = [result.get() for result in results]
    else:
        groups = [_delta_rows(*args) for args in arguments]
    return ConvergenceRecord.from_rows([row for group in groups for row in group])


if __name__ == "__main__":
    logger.info("This is the file for the convergence studies.")
