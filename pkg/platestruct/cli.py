# -*- coding: utf-8 -*-

"""Command line interface of platestruct.

Every subcommand reads one JSON run configuration, writes CSV reports to
the output directory and returns 0 if all checks pass, 1 on a check
failure and 2 on an input error. The effective configuration is echoed
as "# key: value" lines at the top of every report.

"""

from __future__ import annotations
import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Type, Union

import numpy as np

from platestruct.core import (
    AdmissibilityError,
    ConfigError,
    DecompositionError,
    GeometryError,
    HypothesisError,
    MaterialError,
    PlateStructError,
    SolverError,
)
from platestruct.decompose import structure_epd, verify_estimates
from platestruct.fields import Material
from platestruct.helper import get_logger, save_rows
from platestruct.reference3d.convergence import convergence_study
from platestruct.reference3d.core import Structure3DProblem, solve_3d
from platestruct.reference3d.lemmas import RandomSmoothField, cone_lifting, weighted_poincare_check
from platestruct.skeleton import Skeleton, validate_file
from platestruct.solvers.bending import assemble_bending, bending_energy, solve_bending
from platestruct.solvers.core import (
    ITERATIVE_THRESHOLD,
    ForceModel,
    load_vector,
    nodal_displacements,
)
from platestruct.solvers.membrane import (
    assemble_membrane,
    check_force_admissibility,
    membrane_energy,
    solve_membrane,
)
from platestruct.solvers.stress import export_solution, solve_limit
from platestruct.spaces.core import (
    build_spaces,
    inextensional_basis,
    limit_inextensional_basis,
)

# Initialize global logger
logger = get_logger(__name__)

EXIT_PASS = 0
EXIT_CHECK = 1
EXIT_INPUT = 2

LEMMA_ALPHAS = (0.25, 0.5, 1.0)
LEMMA_FIELDS = 50


# Configuration
@dataclass
class RunConfig:
    """Run configuration.

    Relative skeleton paths are resolved against the directory of the
    configuration file.

    """

    skeleton: Optional[Path] = None
    material: Dict[str, float] = field(default_factory=lambda: {"lambda": 1.0, "mu": 1.0})
    forces: Dict[str, Any] = field(default_factory=dict)
    mesh_size: float = 0.125
    grading: bool = True
    delta_list: List[float] = field(default_factory=lambda: [0.2, 0.1, 0.05])
    eta0: Optional[float] = None
    nz: int = 5
    inplane_factor: float = 1.0
    junction_factor: float = 2.0
    output: str = "results"
    verify: bool = False
    seed: int = 0

    def __post_init__(self: RunConfig):
        for name in ("mesh_size", "inplane_factor", "junction_factor"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0.0):
                logger.error("Config value %s must be a positive number, got %s.", name, value)
                raise ConfigError("{} must be a positive number, got {!r}".format(name, value))
        if self.eta0 is not None and not (np.isfinite(self.eta0) and self.eta0 > 0.0):
            logger.error("Config value eta0 must be positive, got %s.", self.eta0)
            raise ConfigError("eta0 must be positive, got {!r}".format(self.eta0))
        if not isinstance(self.nz, int) or self.nz < 3 or self.nz % 2 == 0:
            logger.error("Config value nz must be an odd integer >= 3, got %s.", self.nz)
            raise ConfigError("nz must be an odd integer >= 3, got {!r}".format(self.nz))
        deltas = list(self.delta_list)
        if not deltas or not all(
            isinstance(d, (int, float)) and np.isfinite(d) and d > 0.0 for d in deltas
        ):
            logger.error("Config delta_list must hold positive numbers: %s.", deltas)
            raise ConfigError("delta_list must hold positive numbers, got {!r}".format(deltas))
        if any(b >= a for a, b in zip(deltas, deltas[1:])):
            logger.error("Config delta_list isn't strictly decreasing: %s.", deltas)
            raise ConfigError("delta_list must be strictly decreasing, got {!r}".format(deltas))
        if not isinstance(self.material, dict):
            logger.error("Config material must be an object.")
            raise ConfigError("material must be an object with lambda and mu")
        if not isinstance(self.forces, dict):
            logger.error("Config forces must be an object.")
            raise ConfigError("forces must be an object with f_I and f_E")

    @classmethod
    def from_dict(
        cls: Type[RunConfig], data: Dict[str, Any], base: Optional[Path] = None
    ) -> RunConfig:
        if not isinstance(data, dict):
            logger.error("Run config must be a JSON object.")
            raise ConfigError("run config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            logger.error("Unknown config keys: %s.", unknown)
            raise ConfigError("unknown config keys: {}".format(", ".join(unknown)))
        values = dict(data)
        if values.get("skeleton") is not None:
            path = Path(values["skeleton"])
            if base is not None and not path.is_absolute():
                path = base / path
            values["skeleton"] = path
        try:
            return cls(**values)
        except TypeError as e:
            logger.error("Malformed run config: %s", repr(e))
            raise ConfigError("malformed run config: {}".format(e)) from e

    @classmethod
    def from_json(cls: Type[RunConfig], filename: Union[str, Path]) -> RunConfig:
        logger.info("Load run config: %s", str(filename))
        filename = Path(filename)
        try:
            with open(filename, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as e:
            logger.error("Run config is not valid JSON: %s", str(e))
            raise ConfigError(
                "{}: line {} column {}: {}".format(filename, e.lineno, e.colno, e.msg)
            ) from e
        except OSError as e:
            logger.error("Run config can't be read: %s", str(e))
            raise ConfigError("{}: {}".format(filename, e.strerror)) from e
        return cls.from_dict(data, base=filename.parent)

    @property
    def threshold(self: RunConfig) -> int:
        """Iterative solver threshold; verification runs always solve directly."""
        if self.verify:
            return int(np.iinfo(np.int64).max)
        return ITERATIVE_THRESHOLD

    def to_dict(self: RunConfig) -> Dict[str, Any]:
        data = asdict(self)
        data["skeleton"] = None if self.skeleton is None else str(self.skeleton)
        return data

    def comments(self: RunConfig) -> List[str]:
        return [
            "# {}: {}".format(key, json.dumps(value, sort_keys=True))
            for key, value in self.to_dict().items()
        ]

    def load_skeleton(self: RunConfig) -> Skeleton:
        if self.skeleton is None:
            logger.error("Run config has no skeleton path.")
            raise ConfigError("run config needs a skeleton path")
        skeleton = Skeleton.from_json(self.skeleton)
        if self.eta0 is not None:
            skeleton = Skeleton.from_dict(dict(skeleton.to_dict(), eta0=self.eta0))
        return skeleton

    def build_material(self: RunConfig) -> Material:
        try:
            if "young" in self.material:
                return Material.from_young(self.material["young"], self.material["poisson"])
            return Material(self.material["lambda"], self.material["mu"])
        except KeyError as e:
            logger.error("Material needs lambda and mu: %s", repr(e))
            raise ConfigError("material needs {}".format(e)) from e

    def build_forces(self: RunConfig) -> ForceModel:
        try:
            return ForceModel.from_config(self.forces)
        except (TypeError, ValueError) as e:
            logger.error("Malformed forces: %s", repr(e))
            raise ConfigError("malformed forces: {}".format(e)) from e


def parse_delta_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError("delta list must be numbers separated by commas") from e


# Commands
def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return EXIT_CHECK


def cmd_validate(config: RunConfig, out: Path) -> int:
    if config.skeleton is None:
        logger.error("Run config has no skeleton path.")
        raise ConfigError("run config needs a skeleton path")
    _, report = validate_file(config.skeleton)
    save_rows(
        out / "validation.csv",
        ["check", "passed", "details"],
        report.rows(),
        config.comments() + ["# {}".format(report.message)],
    )
    print(report.message)
    for error in report.structural_errors:
        print(error, file=sys.stderr)
    return int(report.status)


def cmd_solve_membrane(config: RunConfig, out: Path) -> int:
    skeleton = config.load_skeleton()
    material = config.build_material()
    forces = config.build_forces()
    _, dofs, gram = build_spaces(skeleton, config.mesh_size, config.grading)
    basis = inextensional_basis(dofs, gram)
    admissibility = check_force_admissibility(dofs, basis, forces)
    if not admissibility.success:
        return _fail(
            "{} Violated functionals: {}.".format(admissibility.message, admissibility.violated)
        )
    operator = assemble_membrane(dofs, material)
    extensional, result = solve_membrane(
        dofs, gram, operator, forces, basis, check=False, threshold=config.threshold
    )

    comments = config.comments()
    displacements = nodal_displacements(dofs, extensional)
    for face_id, face_mesh in dofs.mesh.faces.items():
        save_rows(
            out / "face_{}_membrane.csv".format(face_id),
            ["x", "y", "z", "ue_x", "ue_y", "ue_z"],
            np.column_stack([face_mesh.points_global, displacements[face_id]]).tolist(),
            comments,
        )
    summary = [
        ["dofs", dofs.size],
        ["inextensional_dimension", basis.dimension],
        ["admissible", admissibility.success],
        ["membrane_residual", result.residual],
        ["membrane_work", load_vector(dofs, forces.extensional) @ extensional],
        ["membrane_energy", membrane_energy(operator, extensional)],
    ]
    save_rows(out / "summary_membrane.csv", ["quantity", "value"], summary, comments)
    return EXIT_PASS


def cmd_solve_bending(config: RunConfig, out: Path) -> int:
    skeleton = config.load_skeleton()
    material = config.build_material()
    forces = config.build_forces()
    _, dofs, gram = build_spaces(skeleton, config.mesh_size, config.grading)
    limit = limit_inextensional_basis(dofs, gram)
    operator = assemble_bending(dofs, material, limit)
    inextensional, coordinates, result = solve_bending(
        dofs, operator, forces, limit, threshold=config.threshold
    )

    comments = config.comments()
    displacements = nodal_displacements(dofs, inextensional)
    if coordinates.size:
        rotations = limit.rotation(coordinates)
    else:
        rotations = {f: np.zeros((m.n_nodes, 3)) for f, m in dofs.mesh.faces.items()}
    for face_id, face_mesh in dofs.mesh.faces.items():
        rows = np.column_stack(
            [
                face_mesh.points_global,
                inextensional[dofs.deflection(face_id)],
                rotations[face_id],
            ]
        )
        save_rows(
            out / "face_{}_bending.csv".format(face_id),
            ["x", "y", "z", "ui_3", "rot_x", "rot_y", "rot_z"],
            rows.tolist(),
            comments,
        )
    deflection = max(
        float(np.max(np.linalg.norm(values, axis=1))) for values in displacements.values()
    )
    summary = [
        ["dofs", dofs.size],
        ["limit_dimension", limit.dimension],
        ["bending_residual", result.residual],
        ["bending_work", load_vector(dofs, forces.inextensional) @ inextensional],
        ["bending_energy", bending_energy(operator, coordinates)],
        ["max_displacement_I", deflection],
    ]
    save_rows(out / "summary_bending.csv", ["quantity", "value"], summary, comments)
    return EXIT_PASS


def cmd_solve(config: RunConfig, out: Path) -> int:
    skeleton = config.load_skeleton()
    try:
        solution = solve_limit(
            skeleton,
            config.build_material(),
            config.build_forces(),
            mesh_size=config.mesh_size,
            grading=config.grading,
            threshold=config.threshold,
        )
    except AdmissibilityError as e:
        return _fail(str(e))
    export_solution(solution, out, config.comments())
    return EXIT_PASS


def cmd_decompose(config: RunConfig, out: Path) -> int:
    """Decompose the 3D solution at the largest thickness of the run."""
    skeleton = config.load_skeleton()
    delta = config.delta_list[0]
    problem = Structure3DProblem(
        skeleton,
        delta,
        config.build_material(),
        config.build_forces(),
        nz=config.nz,
        inplane_factor=config.inplane_factor,
    )
    sample = solve_3d(problem, threshold=config.threshold)
    epd = structure_epd(sample, skeleton, delta)
    report = verify_estimates(sample, epd, delta)
    report.save_csv(out / "estimates.csv", config.comments() + ["# {}".format(report.message)])
    if not report.success:
        return _fail(report.message)
    return EXIT_PASS


def cmd_converge(config: RunConfig, out: Path) -> int:
    record = convergence_study(
        config.load_skeleton(),
        config.build_material(),
        config.build_forces(),
        delta_list=config.delta_list,
        mesh_size=config.mesh_size,
        grading=config.grading,
        nz=config.nz,
        inplane_factor=config.inplane_factor,
        junction_factor=config.junction_factor,
        variants=(False, True),
        workers=1 if config.verify else len(config.delta_list),
    )
    record.save_csv(out / "convergence.csv", config.comments())
    if not record.success:
        return _fail(record.message)
    return EXIT_PASS


def cmd_check_lemmas(config: RunConfig, out: Path) -> int:
    comments = config.comments()
    failures = list()

    rows = list()
    for alpha in LEMMA_ALPHAS:
        for k in range(LEMMA_FIELDS):
            phi = RandomSmoothField(config.seed + k)
            check = weighted_poincare_check(phi, alpha, grad=phi.gradient)
            rows.append([alpha, config.seed + k, check.lhs, check.rhs, check.success])
            if not check.success:
                failures.append("weighted inequality alpha={} seed={}".format(alpha, config.seed + k))
    save_rows(out / "poincare.csv", ["alpha", "seed", "lhs", "rhs", "passed"], rows, comments)

    rows = list()
    for alpha in LEMMA_ALPHAS:
        lifting = cone_lifting(lambda t: t, lambda t: np.zeros_like(t), alpha)
        rows.append(
            [
                alpha,
                lifting.trace_error,
                lifting.gradient_integral,
                lifting.relative_change,
                lifting.success,
            ]
        )
        if not lifting.success:
            failures.append("cone lifting alpha={}: {}".format(alpha, lifting.message))
    save_rows(
        out / "cone.csv",
        ["alpha", "trace_error", "gradient_integral", "relative_change", "passed"],
        rows,
        comments,
    )

    if failures:
        return _fail("Lemma checks failed: {}.".format("; ".join(failures)))
    print("All lemma checks passed.")
    return EXIT_PASS


COMMANDS: Dict[str, Callable[[RunConfig, Path], int]] = {
    "validate": cmd_validate,
    "decompose": cmd_decompose,
    "solve-membrane": cmd_solve_membrane,
    "solve-bending": cmd_solve_bending,
    "solve": cmd_solve,
    "converge": cmd_converge,
    "check-lemmas": cmd_check_lemmas,
}


# Entry point
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platestruct",
        description="Limit models and reference computations for thin plate structures.",
    )
    parser.add_argument("command", choices=list(COMMANDS), help="Subcommand to run")
    parser.add_argument("--config", type=Path, default=None, help="Run config JSON file")
    parser.add_argument("--out", type=Path, default=None, help="Output directory")
    parser.add_argument(
        "--verify", action="store_true", help="Deterministic mode with direct solvers"
    )
    parser.add_argument(
        "--delta-list", type=parse_delta_list, default=None, help="Thicknesses, e.g. 0.2,0.1,0.05"
    )
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    if args.config is None:
        if args.command != "check-lemmas":
            logger.error("Subcommand %s needs --config.", args.command)
            raise ConfigError("{} needs --config".format(args.command))
        config = RunConfig()
    else:
        config = RunConfig.from_json(args.config)
    overrides: Dict[str, Any] = dict()
    if args.out is not None:
        overrides["output"] = str(args.out)
    if args.verify:
        overrides["verify"] = True
    if args.delta_list is not None:
        overrides["delta_list"] = args.delta_list
    if overrides:
        config = replace(config, **overrides)
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        logger.info("Run %s.", args.command)
        return COMMANDS[args.command](config, Path(config.output))
    except (ConfigError, GeometryError, MaterialError, OSError) as e:
        logger.error("Input error: %s", str(e))
        print("Input error: {}".format(e), file=sys.stderr)
        return EXIT_INPUT
    except (AdmissibilityError, HypothesisError, DecompositionError, SolverError) as e:
        logger.error("Check failed: %s", str(e))
        return _fail("Check failed: {}".format(e))
    except PlateStructError as e:
        logger.error("Run failed: %s", str(e))
        return _fail("Run failed: {}".format(e))


if __name__ == "__main__":
    sys.exit(main())
