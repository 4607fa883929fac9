# -*- coding: utf-8 -*-

"""Tests of the 3D reference solve, the sequences and the convergence study."""

import csv
import tempfile
import unittest
from pathlib import Path

import numpy as np

from platestruct.core import ConfigError, GeometryError, SolverError, SpaceError
from platestruct.fields import Material, energy_E
from platestruct.reference3d import sequences
from platestruct.reference3d.convergence import (
    DISTANCES,
    ConvergenceRecord,
    ConvergenceRow,
    bounded,
    convergence_study,
    non_increasing,
    strain_distances,
)
from platestruct.reference3d.core import (
    CORNERS,
    Structure3DProblem,
    elasticity_matrix,
    hex_stiffness,
    solve_3d,
)
from platestruct.skeleton import junction_region
from platestruct.solvers.core import ForceModel, constant_force
from platestruct.solvers.stress import solve_limit
from platestruct.spaces.core import build_spaces, interpolate, limit_inextensional_basis
from platestruct.spaces.mesh import mesh_skeleton
from tests.structures import build, right_angle_pair, t_junction, unit_square
from tests.test_spaces import corner_field, corner_gradient, hinge_field, hinge_gradient


def bending_load(face_ids=(1,)):
    return ForceModel(f_I={f: constant_force([0.0, 0.0, 1.0]) for f in face_ids})


def element_vector(points, field):
    return np.asarray(field(points)).ravel()


class TestHexElement(unittest.TestCase):
    def setUp(self):
        self.material = Material(1.0, 0.8)
        self.sizes = np.array([[0.3, 0.2, 0.1]])
        self.stiffness = hex_stiffness(self.sizes, self.material)[0]
        self.points = CORNERS * self.sizes[0]

    def test_symmetric(self):
        np.testing.assert_allclose(self.stiffness, self.stiffness.T, atol=1e-12)

    def test_rigid_motions_are_free(self):
        scale = np.abs(self.stiffness).max()
        rng = np.random.default_rng(3)
        for _ in range(5):
            a, b = rng.normal(size=3), rng.normal(size=3)
            v = element_vector(self.points, lambda x: a + np.cross(b, x))
            np.testing.assert_allclose(self.stiffness @ v, 0.0, atol=1e-12 * scale)

    def test_uniform_strain_energy(self):
        rng = np.random.default_rng(4)
        gradient = rng.normal(size=(3, 3))
        v = element_vector(self.points, lambda x: x @ gradient.T)
        strain = 0.5 * (gradient + gradient.T)
        expected = np.prod(self.sizes) * (
            self.material.lam * np.trace(strain) ** 2 + 2.0 * self.material.mu * np.sum(strain ** 2)
        )
        self.assertAlmostEqual(v @ self.stiffness @ v, expected, delta=1e-10 * expected)

    def test_elasticity_matrix(self):
        matrix = elasticity_matrix(Material(2.0, 0.5))
        self.assertEqual(matrix[0, 0], 3.0)
        self.assertEqual(matrix[0, 1], 2.0)
        self.assertEqual(matrix[5, 5], 0.5)


class TestStructure3DProblem(unittest.TestCase):
    def setUp(self):
        self.material = Material.from_young(1.0, 0.3)

    def test_zero_load_gives_zero(self):
        problem = Structure3DProblem(build(unit_square()), 0.2, self.material, ForceModel())
        sample = solve_3d(problem)
        for values in sample.values.values():
            self.assertFalse(np.any(values))

    def test_patch_test(self):
        gradient = np.array([[0.1, 0.2, -0.1], [0.05, -0.3, 0.2], [0.3, 0.1, 0.02]])
        shift = np.array([0.01, -0.02, 0.03])

        def exact(points):
            return points @ gradient.T + shift

        problem = Structure3DProblem(build(unit_square(clamped=())), 0.2, self.material, ForceModel(), nz=3)
        sample = solve_3d(problem, dirichlet=exact)
        grid = sample.grids[1]
        expected = exact(grid.nodes_global.reshape(-1, 3)).reshape(grid.shape + (3,))
        np.testing.assert_allclose(sample.values[1], expected, atol=1e-10)

    def test_unclamped_structure_rejected(self):
        problem = Structure3DProblem(build(unit_square(clamped=())), 0.2, self.material, bending_load())
        with self.assertRaises(SolverError):
            solve_3d(problem)

    def test_delta_outside_range(self):
        with self.assertRaises(GeometryError):
            Structure3DProblem(build(unit_square()), 0.6, self.material, ForceModel())

    def test_energy_identity(self):
        problem = Structure3DProblem(build(unit_square()), 0.2, self.material, bending_load())
        sample = solve_3d(problem)
        energy = problem.energy(sample)
        self.assertGreater(energy, 0.0)
        self.assertAlmostEqual(energy, problem.work(sample), delta=1e-9 * energy)
        self.assertLess(problem.residual(sample), 1e-9)

    def test_clamped_nodes_fixed(self):
        problem = Structure3DProblem(build(unit_square()), 0.2, self.material, bending_load())
        sample = solve_3d(problem)
        grid = sample.grids[1]
        self.assertEqual(grid.x1[0], 0.0)
        self.assertFalse(np.any(sample.values[1][0]))
        self.assertTrue(np.any(sample.values[1][1:]))

    def test_energy_scaling(self):
        structures = {"cantilever": unit_square(), "right angle": right_angle_pair()}
        for name, data in structures.items():
            with self.subTest(structure=name):
                skeleton = build(data)
                ratios = list()
                for delta in (0.2, 0.1, 0.05):
                    problem = Structure3DProblem(skeleton, delta, self.material, bending_load())
                    ratios.append(energy_E(solve_3d(problem)) / delta)
                self.assertLess(max(ratios) / min(ratios), 2.0)

    def test_thin_cantilever_residual(self):
        problem = Structure3DProblem(
            build(unit_square()), 0.05, self.material, bending_load(), inplane_factor=0.5
        )
        sample = solve_3d(problem)
        energy = problem.energy(sample)
        self.assertLess(problem.residual(sample), 1e-9)
        self.assertAlmostEqual(energy, problem.work(sample), delta=1e-9 * energy)

    def test_junction_grids(self):
        delta = 0.1
        problem = Structure3DProblem(build(right_angle_pair()), delta, self.material, ForceModel())
        owner, other = problem.grids[1], problem.grids[2]
        self.assertEqual(set(problem.owners.values()), {1})
        self.assertAlmostEqual(owner.x1[-1], 1.0 + delta)
        self.assertIn(1.0, owner.x1.tolist())
        self.assertAlmostEqual(other.x1[0], 0.0)

        centers = 0.5 * (other.x1[:-1] + other.x1[1:])
        inside = centers < delta
        self.assertTrue(np.any(inside))
        self.assertFalse(np.any(other.active[inside]))
        self.assertTrue(np.all(other.active[~inside]))

    def test_junction_solution_is_single_valued(self):
        problem = Structure3DProblem(build(right_angle_pair()), 0.1, self.material, bending_load((1, 2)))
        sample = solve_3d(problem)
        self.assertLess(sample.stitching_error(), 1e-12)
        self.assertLess(problem.residual(sample), 1e-9)


class TestRecoverySequence(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.skeleton = build(right_angle_pair())
        _, cls.dofs, cls.gram = build_spaces(cls.skeleton, 0.25, False)
        cls.limit = limit_inextensional_basis(cls.dofs, cls.gram)
        cls.corner = interpolate(cls.dofs, corner_field, corner_gradient)
        cls.material = Material.from_young(1.0, 0.3)

    def problem(self, delta):
        return Structure3DProblem(self.skeleton, delta, self.material, ForceModel())

    def test_zero_field(self):
        sample = sequences.recovery_sequence(self.limit, np.zeros(self.limit.dimension), self.problem(0.1))
        for values in sample.values.values():
            self.assertFalse(np.any(values))

    def test_field_outside_limit_space(self):
        x = interpolate(self.dofs, hinge_field, hinge_gradient)
        with self.assertRaises(SpaceError):
            sequences.recovery_sequence(self.limit, x, self.problem(0.1))
        with self.assertRaises(SpaceError):
            sequences.recovery_sequence(self.limit, np.zeros(3), self.problem(0.1))

    def test_rigid_near_vertices(self):
        delta = 0.1
        problem = self.problem(delta)
        coordinates = self.limit.fit(self.corner)
        sample = sequences.recovery_sequence(self.limit, coordinates, problem)
        radius = self.skeleton.eta0 * delta
        grid = sample.grids[1]
        nodes = grid.nodes_global.reshape(-1, 3)
        values = sample.global_values(1).reshape(-1, 3)
        checked = 0
        for point, (translation, rotation) in zip(self.limit.vertices, self.limit.vertex_values(coordinates)):
            near = np.linalg.norm(nodes - point, axis=1) <= radius
            checked += int(near.sum())
            expected = (translation + np.cross(rotation, nodes[near] - point)) / delta
            np.testing.assert_allclose(values[near], expected, atol=1e-9 / delta)
        self.assertGreater(checked, 0)
        self.assertLess(sample.stitching_error(), 1e-12)

    def test_unfolded_strains_away_from_junction(self):
        coordinates = self.limit.fit(self.corner)
        for delta in (0.1, 0.05):
            problem = self.problem(delta)
            sample = sequences.recovery_sequence(self.limit, coordinates, problem)
            region = junction_region(self.skeleton, None, delta, 3.0)
            distances = strain_distances(
                sample, problem, self.dofs, np.zeros(self.dofs.size), self.corner, self.material, region
            )
            self.assertLess(distances.strain_distance_ab, 1e-8)
            self.assertLess(distances.strain_distance_a3, 1e-8)


def smooth_field(face_id, points):
    x, y, z = points.T
    return (x + 1.0)[:, None] * np.column_stack([np.sin(x) + y, np.cos(y) * z, x * z + 1.0])


class TestTestSequence(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.skeleton = build(t_junction())
        cls.mesh = mesh_skeleton(cls.skeleton, 0.025, grading=False)

    def test_constant_unchanged_near_vertices(self):
        delta = 0.1
        values = sequences.test_sequence(self.mesh, lambda f, p: np.tile([1.0, 2.0, 3.0], (p.shape[0], 1)), delta)
        for face_id, face_mesh in self.mesh.faces.items():
            points = face_mesh.points_global
            near = np.min(
                [np.linalg.norm(points - v.point, axis=1) for v in self.skeleton.multi_face_vertices], axis=0
            ) < 2.0 * delta
            np.testing.assert_allclose(values[face_id][near], np.tile([1.0, 2.0, 3.0], (near.sum(), 1)), atol=1e-12)

    def test_vanishes_on_clamped_edges(self):
        values = sequences.test_sequence(self.mesh, smooth_field, 0.1)
        face_mesh = self.mesh.faces[1]
        self.assertTrue(np.any(face_mesh.clamped_nodes))
        self.assertFalse(np.any(values[1][face_mesh.clamped_nodes]))

    def test_h1_distance_decreases(self):
        exact = sequences.nodal_values(self.mesh, smooth_field)
        self.assertEqual(sequences.h1_distance(self.mesh, exact, exact), 0.0)
        distances = [
            sequences.h1_distance(self.mesh, sequences.test_sequence(self.mesh, smooth_field, delta), exact)
            for delta in (0.2, 0.1, 0.05)
        ]
        self.assertGreater(distances[0], distances[1])
        self.assertGreater(distances[1], distances[2])


class TestConvergenceStudy(unittest.TestCase):
    def setUp(self):
        self.skeleton = build(unit_square())
        self.material = Material.from_young(1.0, 0.3)
        self.forces = bending_load()

    def test_trend_helpers(self):
        self.assertTrue(non_increasing([1.0, 0.5, 0.52]))
        self.assertFalse(non_increasing([1.0, 0.5, 0.6]))
        self.assertTrue(non_increasing([0.0, 1e-11]))
        self.assertTrue(bounded([1.0, 1.5, np.nan]))
        self.assertFalse(bounded([1.0, 2.5]))

    def test_record_ignores_full_rows(self):
        def row(delta, distance, excluded):
            return ConvergenceRow(
                delta=delta, energy=delta, energy_over_delta=1.0, strain_distance_ab=distance,
                strain_distance_a3=0.0, strain_distance_33=0.0, sigma_i3_norm=0.0,
                korn_ratio=np.nan, junction_excluded=excluded, strain_tslope_ab=0.0,
                work_over_2delta=1.0, limit_work=1.0,
            )

        rows = [row(0.2, 1.0, False), row(0.2, 0.5, True), row(0.1, 2.0, False), row(0.1, 0.4, True)]
        record = ConvergenceRecord.from_rows(rows)
        self.assertTrue(record.success)
        self.assertFalse(record.flags["strain_distance_ab[full]"])
        self.assertTrue(record.flags["korn_ratio[excluded]"])

        record = ConvergenceRecord.from_rows([r for r in rows if not r.junction_excluded])
        self.assertFalse(record.success)
        self.assertIn("strain_distance_ab[full]", record.message)

    def test_one_delta_fails(self):
        record = convergence_study(self.skeleton, self.material, self.forces, delta_list=(0.1,))
        self.assertFalse(record.success)
        self.assertEqual(record.status, 1)
        self.assertIn("trend needs", record.message)

    def test_increasing_deltas_rejected(self):
        with self.assertRaises(ConfigError):
            convergence_study(self.skeleton, self.material, self.forces, delta_list=(0.1, 0.2))
        with self.assertRaises(ConfigError):
            convergence_study(self.skeleton, self.material, self.forces, delta_list=(1.0, 0.1))

    def test_bending_study(self):
        record = convergence_study(
            self.skeleton, self.material, self.forces, variants=(False, True), estimates=False,
        )
        self.assertIsInstance(record, ConvergenceRecord)
        self.assertTrue(record.success, record.message)
        self.assertEqual(len(record.rows), 6)
        self.assertEqual(record.deltas, [0.2, 0.1, 0.05])
        for name in (
            "energy_over_delta[excluded]",
            "strain_distance_ab[excluded]",
            "strain_distance_a3[excluded]",
            "strain_distance_33[excluded]",
            "sigma_i3_norm[excluded]",
        ):
            self.assertTrue(record.flags[name], name)
        for row in record.rows:
            self.assertTrue(np.isfinite(row.strain_distance_ab))
            self.assertTrue(np.isnan(row.korn_ratio))
            self.assertGreater(row.limit_work, 0.0)
            self.assertGreater(row.work_over_2delta / row.limit_work, 0.5)
            self.assertLess(row.work_over_2delta / row.limit_work, 3.0)
        # no junction: both variants agree
        np.testing.assert_allclose(
            record.column("strain_distance_ab", True), record.column("strain_distance_ab", False)
        )

        with tempfile.TemporaryDirectory() as folder:
            filename = Path(folder) / "convergence.csv"
            record.save_csv(filename, ["# delta_list: [0.2, 0.1, 0.05]"])
            with open(filename, newline="") as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0][0], "# delta_list: [0.2, 0.1, 0.05]")
        self.assertEqual(rows[2][:3], ["delta", "energy", "energy_over_delta"])
        self.assertEqual(len(rows) - 3, 6)

    def test_membrane_load_loses_thickness_slope(self):
        forces = ForceModel(f_E={1: constant_force([1.0, 0.0, 0.0])})
        record = convergence_study(self.skeleton, self.material, forces, estimates=False)
        self.assertTrue(record.success, record.message)
        self.assertTrue(non_increasing(record.column("strain_tslope_ab")))

    def test_concurrent_solves_keep_the_order(self):
        limit = solve_limit(self.skeleton, self.material, self.forces, mesh_size=0.25, grading=False)
        options = dict(delta_list=(0.2, 0.1), limit=limit, nz=3, inplane_factor=2.0, estimates=False)
        serial = convergence_study(self.skeleton, self.material, self.forces, **options)
        pooled = convergence_study(self.skeleton, self.material, self.forces, workers=2, **options)
        self.assertEqual(pooled.deltas, [0.2, 0.1])
        self.assertEqual([row.delta for row in pooled.rows], [0.2, 0.1])
        np.testing.assert_allclose(pooled.column("energy"), serial.column("energy"), rtol=1e-10)
        np.testing.assert_allclose(
            pooled.column("strain_distance_ab"), serial.column("strain_distance_ab"), rtol=1e-10
        )


class TestTwoPlateConvergence(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.skeleton = build(right_angle_pair())
        cls.material = Material.from_young(1.0, 0.3)

    def check_record(self, record):
        self.assertTrue(record.success, record.message)
        self.assertEqual(record.deltas, [0.2, 0.1, 0.05])
        for name in DISTANCES:
            self.assertTrue(record.flags["{}[excluded]".format(name)], name)
            excluded = record.column(name, True)
            full = record.column(name, False)
            self.assertTrue(np.all(excluded <= full * (1.0 + 1e-12)), name)

    def test_bending_load(self):
        record = convergence_study(
            self.skeleton, self.material, bending_load(), variants=(False, True), estimates=False
        )
        self.check_record(record)
        self.assertTrue(record.flags["energy_over_delta[excluded]"])

    def test_membrane_load(self):
        forces = ForceModel(f_E={1: constant_force([1.0, 0.0, 0.0])})
        record = convergence_study(
            self.skeleton, self.material, forces, variants=(False, True), estimates=False
        )
        self.check_record(record)


if __name__ == "__main__":
    unittest.main()
