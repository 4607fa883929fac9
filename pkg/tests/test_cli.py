# -*- coding: utf-8 -*-

"""Tests of the command line interface."""

import csv
import json
import tempfile
import unittest
from pathlib import Path

from platestruct.cli import RunConfig, main, parse_delta_list
from platestruct.core import ConfigError
from tests.structures import t_junction, unit_square

ALL_SIDES = ("bottom", "right", "top", "left")


def read_rows(filename):
    with open(filename, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._folder = tempfile.TemporaryDirectory()
        self.folder = Path(self._folder.name)
        self.out = self.folder / "results"

    def tearDown(self):
        self._folder.cleanup()

    def write_run(self, skeleton, **options):
        with open(self.folder / "skeleton.json", "w", encoding="utf-8") as handle:
            json.dump(skeleton, handle)
        config = {"skeleton": "skeleton.json", "material": {"lambda": 1.0, "mu": 1.0}}
        config.update(options)
        filename = self.folder / "run.json"
        with open(filename, "w", encoding="utf-8") as handle:
            json.dump(config, handle)
        return filename

    def run_cli(self, command, config, *extra):
        return main([command, "--config", str(config), "--out", str(self.out), *extra])


class TestRunConfig(CliTestCase):
    def test_defaults(self):
        config = RunConfig()
        self.assertEqual(config.mesh_size, 0.125)
        self.assertTrue(config.grading)
        self.assertEqual(config.delta_list, [0.2, 0.1, 0.05])
        self.assertIsNone(config.eta0)
        self.assertEqual(config.nz, 5)
        self.assertEqual(config.output, "results")
        self.assertFalse(config.verify)
        self.assertEqual(config.seed, 0)

    def test_relative_skeleton_path(self):
        filename = self.write_run(unit_square())
        config = RunConfig.from_json(filename)
        self.assertEqual(config.skeleton, self.folder / "skeleton.json")
        self.assertEqual(config.load_skeleton().face_ids, [1])

    def test_eta0_override(self):
        filename = self.write_run(unit_square(), eta0=3.0)
        skeleton = RunConfig.from_json(filename).load_skeleton()
        self.assertEqual(skeleton.eta0, 3.0)

    def test_comments(self):
        comments = RunConfig(mesh_size=0.25).comments()
        self.assertIn("# mesh_size: 0.25", comments)
        self.assertIn("# delta_list: [0.2, 0.1, 0.05]", comments)
        self.assertTrue(all(line.startswith("# ") for line in comments))

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            RunConfig(delta_list=[0.1, 0.2])
        with self.assertRaises(ConfigError):
            RunConfig(mesh_size=-1.0)
        with self.assertRaises(ConfigError):
            RunConfig(mesh_size=float("nan"))
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({"mesh": 0.1})

    def test_even_nz(self):
        self.assertEqual(RunConfig(nz=3).nz, 3)
        for nz in (1, 2, 4):
            with self.assertRaises(ConfigError) as context:
                RunConfig(nz=nz)
            self.assertIn("nz", str(context.exception))
        config = self.write_run(unit_square(), nz=4)
        self.assertEqual(main(["converge", "--config", str(config), "--out", str(self.out)]), 2)

    def test_invalid_json(self):
        filename = self.folder / "run.json"
        filename.write_text('{"skeleton": "a.json",\n "nz": }', encoding="utf-8")
        with self.assertRaises(ConfigError) as context:
            RunConfig.from_json(filename)
        self.assertIn("line 2", str(context.exception))

    def test_delta_list_argument(self):
        self.assertEqual(parse_delta_list("0.2,0.1,0.05"), [0.2, 0.1, 0.05])


class TestValidate(CliTestCase):
    def test_valid_t_junction(self):
        config = self.write_run(t_junction())
        self.assertEqual(self.run_cli("validate", config), 0)
        rows = read_rows(self.out / "validation.csv")
        self.assertIn(["check", "passed", "details"], rows)
        self.assertIn("# All hypotheses passed.", [row[0] for row in rows])

    def test_no_clamped_edge(self):
        config = self.write_run(unit_square(clamped=()))
        self.assertEqual(self.run_cli("validate", config), 1)
        rows = read_rows(self.out / "validation.csv")
        h3 = [row for row in rows if row[0] == "H3"][0]
        self.assertEqual(h3[1], "False")

    def test_non_planar_face(self):
        skeleton = unit_square()
        skeleton["faces"][0]["vertices"][2] = [1.0, 1.0, 0.1]
        config = self.write_run(skeleton)
        self.assertEqual(self.run_cli("validate", config), 2)
        rows = read_rows(self.out / "validation.csv")
        structural = [row for row in rows if row[0] == "structural"][0]
        self.assertEqual(structural[1], "False")

    def test_missing_config(self):
        self.assertEqual(main(["validate"]), 2)
        self.assertEqual(main(["validate", "--config", str(self.folder / "none.json")]), 2)

    def test_bad_delta_list(self):
        config = self.write_run(unit_square())
        self.assertEqual(self.run_cli("validate", config, "--delta-list", "0.1,0.2"), 2)


class TestSolve(CliTestCase):
    def test_zero_forces(self):
        config = self.write_run(unit_square(clamped=ALL_SIDES), mesh_size=0.25, grading=False)
        self.assertEqual(self.run_cli("solve", config), 0)
        for name in ("face_1_nodes.csv", "face_1_stress.csv", "summary.csv"):
            self.assertTrue((self.out / name).exists())
        rows = read_rows(self.out / "face_1_nodes.csv")
        header = rows.index(["x", "y", "z", "ue_x", "ue_y", "ue_z", "ui_3", "rot_x", "rot_y", "rot_z"])
        for row in rows[header + 1:]:
            self.assertTrue(all(float(value) == 0.0 for value in row[3:]))
        summary = {row[0]: row[1] for row in read_rows(self.out / "summary.csv") if len(row) == 2}
        self.assertEqual(float(summary["max_displacement_I"]), 0.0)

    def test_bending_benchmark(self):
        config = self.write_run(
            unit_square(clamped=ALL_SIDES),
            mesh_size=0.25,
            grading=False,
            forces={"f_I": {"1": [0.0, 0.0, 1.0]}},
        )
        self.assertEqual(self.run_cli("solve", config), 0)
        summary = {row[0]: row[1] for row in read_rows(self.out / "summary.csv") if len(row) == 2}
        self.assertGreater(float(summary["max_displacement_I"]), 0.0)
        self.assertGreater(float(summary["bending_work"]), 0.0)

    def test_inadmissible_membrane_load(self):
        config = self.write_run(
            unit_square(clamped=ALL_SIDES),
            mesh_size=0.25,
            grading=False,
            forces={"f_E": {"1": [0.0, 0.0, 1.0]}},
        )
        self.assertEqual(self.run_cli("solve", config), 1)
        self.assertEqual(self.run_cli("solve-membrane", config), 1)

    def test_verify_mode_is_deterministic(self):
        config = self.write_run(
            unit_square(clamped=ALL_SIDES),
            mesh_size=0.25,
            grading=False,
            forces={"f_I": {"1": [0.0, 0.0, 1.0]}, "f_E": {"1": [1.0, 0.0, 0.0]}},
        )
        self.assertEqual(self.run_cli("solve", config, "--verify"), 0)
        first = {
            path.name: path.read_bytes() for path in sorted(self.out.iterdir())
        }
        self.assertEqual(self.run_cli("solve", config, "--verify"), 0)
        second = {
            path.name: path.read_bytes() for path in sorted(self.out.iterdir())
        }
        self.assertEqual(first, second)
        self.assertIn(b"# verify: true", first["summary.csv"])

    def test_membrane_and_bending_parts(self):
        config = self.write_run(
            unit_square(clamped=ALL_SIDES),
            mesh_size=0.25,
            grading=False,
            forces={"f_I": {"1": [0.0, 0.0, 1.0]}, "f_E": {"1": [1.0, 0.0, 0.0]}},
        )
        self.assertEqual(self.run_cli("solve-membrane", config), 0)
        self.assertEqual(self.run_cli("solve-bending", config), 0)
        membrane = {r[0]: r[1] for r in read_rows(self.out / "summary_membrane.csv") if len(r) == 2}
        bending = {r[0]: r[1] for r in read_rows(self.out / "summary_bending.csv") if len(r) == 2}
        self.assertGreater(float(membrane["membrane_work"]), 0.0)
        self.assertGreater(float(bending["bending_work"]), 0.0)
        self.assertTrue((self.out / "face_1_membrane.csv").exists())
        self.assertTrue((self.out / "face_1_bending.csv").exists())


class TestDecompose(CliTestCase):
    def test_bending_solution(self):
        config = self.write_run(
            unit_square(clamped=ALL_SIDES),
            delta_list=[0.2, 0.1],
            forces={"f_I": {"1": [0.0, 0.0, 1.0]}},
        )
        self.assertEqual(self.run_cli("decompose", config), 0)
        rows = read_rows(self.out / "estimates.csv")
        header = rows.index(["inequality_id", "delta", "lhs", "rhs_energy", "ratio"])
        self.assertEqual([row[0] for row in rows[header + 1:]], ["structure", "korn"])
        self.assertTrue(all(float(row[1]) == 0.2 for row in rows[header + 1:]))
        self.assertTrue(all(float(row[4]) > 0.0 for row in rows[header + 1:]))


class TestConverge(CliTestCase):
    def test_single_delta(self):
        config = self.write_run(unit_square(clamped=ALL_SIDES), delta_list=[0.1])
        self.assertEqual(self.run_cli("converge", config), 1)
        rows = read_rows(self.out / "convergence.csv")
        self.assertIn(["# trend needs ≥ 2 deltas"], rows)

    def test_cantilever_bending(self):
        config = self.write_run(unit_square(), forces={"f_I": {"1": [0.0, 0.0, 1.0]}})
        self.assertEqual(self.run_cli("converge", config), 0)
        rows = read_rows(self.out / "convergence.csv")
        self.assertIn(["# All trend checks passed."], rows)
        header = [row for row in rows if row and row[0] == "delta"][0]
        records = [dict(zip(header, row)) for row in rows[rows.index(header) + 1:]]
        self.assertEqual(len(records), 6)
        self.assertEqual(sorted({float(r["delta"]) for r in records}, reverse=True), [0.2, 0.1, 0.05])
        for delta in (0.2, 0.1, 0.05):
            variants = {
                r["junction_excluded"]: r for r in records if float(r["delta"]) == delta
            }
            for name in ("strain_distance_ab", "strain_distance_a3", "strain_distance_33", "sigma_i3_norm"):
                self.assertLessEqual(
                    float(variants["True"][name]), float(variants["False"][name]) * (1.0 + 1e-12)
                )

    def test_delta_above_delta0(self):
        config = self.write_run(unit_square(clamped=ALL_SIDES), delta_list=[0.8, 0.1])
        self.assertEqual(self.run_cli("converge", config), 2)


class TestCheckLemmas(CliTestCase):
    def test_without_config(self):
        self.assertEqual(main(["check-lemmas", "--out", str(self.out)]), 0)
        rows = read_rows(self.out / "poincare.csv")
        header = rows.index(["alpha", "seed", "lhs", "rhs", "passed"])
        self.assertEqual(len(rows) - header - 1, 150)
        self.assertTrue(all(row[-1] == "True" for row in rows[header + 1:]))
        rows = read_rows(self.out / "cone.csv")
        self.assertEqual(rows[-1][-1], "True")


if __name__ == "__main__":
    unittest.main()
