# -*- coding: utf-8 -*-

"""Tests of the meshes, element kernels and discrete spaces."""

import csv
import tempfile
import unittest
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from platestruct.core import HypothesisError, MeshError, SpaceError
from platestruct.spaces.core import (
    ConstrainedBasis,
    InextensionalBasis,
    MembraneBendingDofs,
    assemble_gram,
    build_spaces,
    element_strains,
    evaluate,
    export_coo,
    gram_min_eigenvalue,
    inextensional_basis,
    interpolate,
    limit_inextensional_basis,
    norm_equivalence_probe,
    split,
)
from platestruct.spaces.elements import MorleyElements, P1Elements
from platestruct.spaces.mesh import mesh_skeleton
from tests.structures import (
    XY_FRAME,
    build,
    coplanar_pair,
    disjoint_squares,
    right_angle_pair,
    unit_square,
)

OMEGA = 0.3


def hinge_field(face_id, points):
    """Face 2 turns about the shared edge, face 1 stays at rest."""
    if face_id == 1:
        return np.zeros_like(points)
    return np.column_stack([OMEGA * points[:, 2], np.zeros((points.shape[0], 2))])


def hinge_gradient(face_id, points):
    jacobian = np.zeros((points.shape[0], 3, 3))
    if face_id == 2:
        jacobian[:, 0, 2] = OMEGA
    return jacobian


def corner_field(face_id, points):
    """Rigid corner: face 1 bends as a cantilever, face 2 follows rigidly."""
    result = np.zeros_like(points)
    if face_id == 1:
        result[:, 2] = -0.5 * OMEGA * points[:, 0] ** 2
    else:
        result[:, 0] = OMEGA * points[:, 2]
        result[:, 2] = -0.5 * OMEGA
    return result


def corner_gradient(face_id, points):
    jacobian = np.zeros((points.shape[0], 3, 3))
    if face_id == 1:
        jacobian[:, 2, 0] = -OMEGA * points[:, 0]
    else:
        jacobian[:, 0, 2] = OMEGA
    return jacobian


def quadratic_field(face_id, points):
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([x ** 2, x * y, x ** 2 + y ** 2])


def quadratic_gradient(face_id, points):
    x, y = points[:, 0], points[:, 1]
    jacobian = np.zeros((points.shape[0], 3, 3))
    jacobian[:, 0, 0] = 2.0 * x
    jacobian[:, 1, 0] = y
    jacobian[:, 1, 1] = x
    jacobian[:, 2, 0] = 2.0 * x
    jacobian[:, 2, 1] = 2.0 * y
    return jacobian


def triangle_skeleton():
    return build(
        {
            "faces": [
                {"id": 1, "vertices": [[0, 0, 0], [1, 0, 0], [0, 1, 0]], **XY_FRAME}
            ],
            "edges": [{"a": [0, 0, 0], "b": [1, 0, 0], "faces": [1], "clamped": True}],
        }
    )


class TestElements(unittest.TestCase):
    def setUp(self):
        self.points = np.array([[0.1, 0.2], [0.9, 0.0], [0.3, 0.8]])
        self.triangles = np.array([[0, 1, 2]])

    def test_p1_gradients_sum_to_zero(self):
        p1 = P1Elements(self.points, self.triangles)
        np.testing.assert_allclose(p1.gradients.sum(axis=1), 0.0, atol=1e-14)
        self.assertAlmostEqual(p1.areas[0], 0.5 * abs(0.8 * 0.6 - 0.2 * (-0.2)), places=14)

    def test_p1_strain_of_linear_field(self):
        p1 = P1Elements(self.points, self.triangles)
        u = np.column_stack([2.0 * self.points[:, 1], 3.0 * self.points[:, 0]]).ravel()
        np.testing.assert_allclose(p1.strain_matrices()[0] @ u, [0.0, 0.0, 2.5], atol=1e-13)
        np.testing.assert_allclose(p1.curl_matrices()[0] @ u, 0.5, atol=1e-13)

    def test_morley_reproduces_quadratics(self):
        vertices = self.points
        rotated = np.roll(vertices, -1, axis=0) - np.roll(vertices, 1, axis=0)
        normals = np.column_stack([-rotated[:, 1], rotated[:, 0]])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        morley = MorleyElements(self.points, self.triangles, normals[None, :, :])

        def w(p):
            return 1.0 + p[..., 0] - 2.0 * p[..., 1] + 3.0 * p[..., 0] ** 2 - p[..., 0] * p[..., 1] + 0.5 * p[..., 1] ** 2

        def grad(p):
            return np.stack([1.0 + 6.0 * p[..., 0] - p[..., 1], -2.0 - p[..., 0] + p[..., 1]], axis=-1)

        midpoints = 0.5 * (np.roll(vertices, -1, axis=0) + np.roll(vertices, 1, axis=0))
        dofs = np.concatenate([w(vertices), np.sum(grad(midpoints) * normals, axis=1)])
        probe = np.array([[[0.4, 0.3], [0.2, 0.25]]])
        np.testing.assert_allclose(morley.values(probe)[0] @ dofs, w(probe[0]), atol=1e-12)
        np.testing.assert_allclose(morley.gradients(probe)[0] @ dofs, grad(probe[0]), atol=1e-12)
        np.testing.assert_allclose(morley.hessians()[0] @ dofs, [6.0, 1.0, -1.0], atol=1e-11)


class TestMesh(unittest.TestCase):
    def test_nodes_shared_along_junction(self):
        skeleton = build(right_angle_pair())
        mesh = mesh_skeleton(skeleton, 0.25)
        on_edge = np.isclose(mesh.faces[1].points[:, 0], 1.0)
        self.assertEqual(len(mesh.node_pairs), int(on_edge.sum()))
        for pair in mesh.node_pairs:
            first = mesh.faces[pair.first[0]].points_global[pair.first[1]]
            second = mesh.faces[pair.second[0]].points_global[pair.second[1]]
            np.testing.assert_allclose(first, second, atol=1e-12)
        self.assertEqual(len(mesh.segment_pairs), int(on_edge.sum()) - 1)

    def test_grading_toward_multi_face_vertices(self):
        skeleton = build(right_angle_pair())
        graded = mesh_skeleton(skeleton, 0.25, grading=True)
        plain = mesh_skeleton(skeleton, 0.25, grading=False)
        self.assertGreater(graded.faces[1].n_nodes, plain.faces[1].n_nodes)
        points = graded.faces[1].points
        self.assertTrue(np.any(np.isclose(points[:, 0], 1.0 - 0.25 * 0.125)))
        self.assertEqual(plain.faces[1].n_nodes, 25)

    def test_clamped_nodes(self):
        mesh = mesh_skeleton(build(unit_square()), 0.5)
        clamped = mesh.faces[1].clamped_nodes
        np.testing.assert_array_equal(clamped, np.isclose(mesh.faces[1].points[:, 0], 0.0))

    def test_polygon_face(self):
        mesh = mesh_skeleton(triangle_skeleton(), 0.2)
        face_mesh = mesh.faces[1]
        self.assertAlmostEqual(face_mesh.p1.areas.sum(), 0.5, places=12)
        self.assertTrue(np.all(face_mesh.p1.areas > 0.0))
        self.assertEqual(int(face_mesh.clamped_edges.sum()), 5)

    def test_nonpositive_mesh_size(self):
        with self.assertRaises(MeshError):
            mesh_skeleton(build(unit_square()), 0.0)

    def test_locate(self):
        mesh = mesh_skeleton(build(unit_square()), 0.5)
        elements = mesh.faces[1].locate(np.array([[0.25, 0.1], [1.0, 1.0], [2.0, 2.0]]))
        self.assertGreaterEqual(elements[0], 0)
        self.assertGreaterEqual(elements[1], 0)
        self.assertEqual(elements[2], -1)


class TestConstrainedBasis(unittest.TestCase):
    def test_single_and_coupled_rows(self):
        constraints = sp.csr_matrix(
            np.array(
                [
                    [1.0, 0.0, 0.0, 0.0, 0.0],
                    [0.0, 1.0, -1.0, 0.0, 0.0],
                    [0.0, 2.0, -2.0, 0.0, 0.0],
                ]
            )
        )
        basis = ConstrainedBasis(constraints, 5)
        self.assertEqual(basis.dimension, 3)
        self.assertEqual(basis.redundant, 1)
        np.testing.assert_allclose(constraints @ basis.basis.toarray(), 0.0, atol=1e-14)
        self.assertEqual(np.linalg.matrix_rank(basis.basis.toarray()), 3)
        self.assertEqual(basis.dependent_rows.size, 1)
        self.assertIn(int(basis.dependent_rows[0]), (1, 2))
        with self.assertLogs("platestruct.spaces.core", level="WARNING") as logs:
            basis.report_dependent_rows("Coupled")
        self.assertIn("Coupled constraints are rank deficient", logs.output[0])
        self.assertIn(str(basis.dependent_rows.tolist()), logs.output[0])

    def test_no_constraints(self):
        basis = ConstrainedBasis(sp.csr_matrix((0, 4)), 4)
        np.testing.assert_array_equal(basis.basis.toarray(), np.eye(4))

    def test_wrong_width(self):
        with self.assertRaises(SpaceError):
            ConstrainedBasis(sp.csr_matrix((1, 3)), 4)


class TestBuildSpaces(unittest.TestCase):
    def test_gram_positive_on_clamped_square(self):
        _, dofs, gram = build_spaces(build(unit_square()), 0.25)
        self.assertGreater(gram_min_eigenvalue(dofs, gram), 0.0)
        np.testing.assert_allclose((gram.full - gram.full.T).toarray(), 0.0, atol=1e-13)

    def test_hypotheses_required(self):
        with self.assertRaises(HypothesisError):
            build_spaces(build(disjoint_squares()), 0.5)

    def test_gram_entries_converge(self):
        values = list()
        for size in (0.25, 0.125, 0.0625):
            _, dofs, gram = build_spaces(build(unit_square()), size)
            x = interpolate(dofs, quadratic_field, quadratic_gradient)
            values.append(gram.norm_sq(x))
        self.assertLess(abs(values[2] - values[1]), 0.05 * abs(values[2]))

    def test_interpolate_and_evaluate(self):
        _, dofs, _ = build_spaces(build(unit_square()), 0.25)
        x = interpolate(dofs, quadratic_field, quadratic_gradient)
        points = np.array([[0.3, 0.4], [0.71, 0.12]])
        values = evaluate(dofs, x, 1, points)
        np.testing.assert_allclose(values.displacement[:, 2], points[:, 0] ** 2 + points[:, 1] ** 2, atol=1e-12)
        np.testing.assert_allclose(values.gradient, 2.0 * points, atol=1e-12)
        np.testing.assert_allclose(values.hessian, np.tile([2.0, 2.0, 0.0], (2, 1)), atol=1e-10)
        with self.assertRaises(SpaceError):
            evaluate(dofs, x, 1, np.array([[2.0, 2.0]]))

    def test_export_coo(self):
        _, dofs, gram = build_spaces(build(unit_square()), 0.5)
        with tempfile.TemporaryDirectory() as folder:
            path = Path(folder) / "gram.csv"
            export_coo(gram.full, path)
            with open(path, newline="") as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0][0], "# shape: {} {}".format(dofs.size, dofs.size))
        self.assertEqual(rows[1][:3], ["row", "col", "value"])
        self.assertEqual(len(rows), 2 + gram.full.tocoo().nnz)


class TestInextensionalBasis(unittest.TestCase):
    def setUp(self):
        _, self.dofs, self.gram = build_spaces(build(right_angle_pair()), 0.25)
        self.basis = inextensional_basis(self.dofs, self.gram)

    def test_hinge_mode_in_span(self):
        x = interpolate(self.dofs, hinge_field, hinge_gradient)
        self.assertTrue(self.basis.contains(x, tol=1e-10))

    def test_sheared_free_face_not_in_span(self):
        def field(face_id, points):
            result = np.zeros_like(points)
            if face_id == 2:
                result[:, 1] = points[:, 2]
            return result

        self.assertFalse(self.basis.contains(interpolate(self.dofs, field), tol=1e-6))

    def test_membrane_strain_vanishes(self):
        for j in range(self.basis.dimension):
            x = self.basis.basis[:, j].toarray().ravel()
            for strains in element_strains(self.dofs, x).values():
                self.assertLess(np.max(np.abs(strains)), 1e-10)

    def test_orthonormal(self):
        q = self.basis.orthonormal()
        np.testing.assert_allclose(q.T @ (self.gram.full @ q), np.eye(q.shape[1]), atol=1e-9)

    def test_coplanar_joint_deflection(self):
        _, dofs, gram = build_spaces(build(coplanar_pair(clamped_all=False)), 0.25)
        basis = inextensional_basis(dofs, gram)

        def field(face_id, points):
            return np.column_stack([np.zeros((points.shape[0], 2)), points[:, 0] ** 2])

        def gradient(face_id, points):
            jacobian = np.zeros((points.shape[0], 3, 3))
            jacobian[:, 2, 0] = 2.0 * points[:, 0]
            return jacobian

        self.assertTrue(basis.contains(interpolate(dofs, field, gradient)))


class TestSplit(unittest.TestCase):
    def setUp(self):
        _, self.dofs, self.gram = build_spaces(build(right_angle_pair()), 0.25)
        self.basis = inextensional_basis(self.dofs, self.gram)

    def stretch_field(self, face_id, points):
        result = np.zeros_like(points)
        if face_id == 1:
            result[:, 0] = points[:, 0] * (1.0 - points[:, 0]) * points[:, 1]
        return result

    def test_orthogonality(self):
        x = interpolate(self.dofs, hinge_field, hinge_gradient) + interpolate(self.dofs, self.stretch_field)
        x_e, x_i = split(x, self.basis)
        np.testing.assert_allclose(x_e + x_i, x, atol=1e-14)
        cross = self.basis.basis.T @ (self.gram.full @ x_e)
        self.assertLess(np.max(np.abs(cross)), 1e-8 * np.sqrt(self.gram.norm_sq(x)))

    def test_idempotent(self):
        x = interpolate(self.dofs, hinge_field, hinge_gradient)
        x_e, x_i = split(x, self.basis)
        self.assertLess(np.sqrt(self.gram.norm_sq(x_e)), 1e-10 * np.sqrt(self.gram.norm_sq(x)))
        again_e, again_i = split(x_i, self.basis)
        np.testing.assert_allclose(again_i, x_i, atol=1e-10)

    def test_singular_gram_rejected(self):
        # Rigid fields of a free square have zero rho-norm
        skeleton = build(unit_square(clamped=()))
        dofs = MembraneBendingDofs(mesh_skeleton(skeleton, 0.5))
        basis = InextensionalBasis(dofs, assemble_gram(dofs))
        with self.assertRaises(SpaceError):
            split(np.ones(dofs.size), basis)


class TestNormEquivalence(unittest.TestCase):
    def test_single_clamped_plate(self):
        _, dofs, gram = build_spaces(build(unit_square()), 0.5)
        c_min, c_max = norm_equivalence_probe(dofs, gram, inextensional_basis(dofs, gram))
        self.assertAlmostEqual(c_min, 1.0, places=8)
        self.assertAlmostEqual(c_max, 1.0, places=8)

    def test_right_angle_pair(self):
        _, dofs, gram = build_spaces(build(right_angle_pair()), 0.5)
        basis = inextensional_basis(dofs, gram)
        c_min, c_max = norm_equivalence_probe(dofs, gram, basis)
        self.assertGreater(c_min, 0.0)
        self.assertLessEqual(c_max, 1.0 + 1e-10)
        polluted, _ = norm_equivalence_probe(dofs, gram, basis, contaminate=1)
        self.assertLess(polluted, 1e-8)


class TestLimitInextensionalBasis(unittest.TestCase):
    def setUp(self):
        _, self.dofs, self.gram = build_spaces(build(right_angle_pair()), 0.25)
        self.limit = limit_inextensional_basis(self.dofs, self.gram)

    def test_corner_mode(self):
        x = interpolate(self.dofs, corner_field, corner_gradient)
        coordinates = self.limit.fit(x)
        residual = self.limit.basis @ coordinates - x
        self.assertLess(np.sqrt(self.gram.norm_sq(residual)), 1e-9 * np.sqrt(self.gram.norm_sq(x)))

        rotation = self.limit.rotation(coordinates)
        np.testing.assert_allclose(rotation[2], np.tile([0.0, OMEGA, 0.0], (rotation[2].shape[0], 1)), atol=1e-9)
        points = self.dofs.mesh.faces[1].points
        expected = np.column_stack([np.zeros(points.shape[0]), OMEGA * points[:, 0], np.zeros(points.shape[0])])
        np.testing.assert_allclose(rotation[1], expected, atol=1e-9)

        for displacement, turn in self.limit.vertex_values(coordinates):
            np.testing.assert_allclose(displacement, [0.0, 0.0, -0.5 * OMEGA], atol=1e-9)
            np.testing.assert_allclose(turn, [0.0, OMEGA, 0.0], atol=1e-9)

    def test_hinge_mode_excluded(self):
        x = interpolate(self.dofs, hinge_field, hinge_gradient)
        residual = self.limit.basis @ self.limit.fit(x) - x
        self.assertGreater(np.sqrt(self.gram.norm_sq(residual)), 1e-3 * np.sqrt(self.gram.norm_sq(x)))

    def test_edge_restriction_is_rigid(self):
        edge = self.dofs.skeleton.junction_edges[0]
        rng = np.random.default_rng(7)
        for _ in range(3):
            coordinates = rng.normal(size=self.limit.dimension)
            x = self.limit.basis @ coordinates
            for point, (displacement, turn) in zip(self.limit.vertices, self.limit.vertex_values(coordinates)):
                face_mesh = self.dofs.mesh.faces[1]
                nodes = np.flatnonzero(edge.distance(face_mesh.points_global) <= 1e-12)
                values = evaluate(self.dofs, x, 1, face_mesh.points[nodes]).displacement
                expected = displacement + np.cross(turn, face_mesh.points_global[nodes] - point)
                np.testing.assert_allclose(values, expected, atol=1e-9)

    def test_subspace_of_inextensional(self):
        basis = inextensional_basis(self.dofs, self.gram)
        for j in range(0, self.limit.dimension, 7):
            self.assertTrue(basis.contains(self.limit.basis[:, j].toarray().ravel(), tol=1e-9))


if __name__ == "__main__":
    unittest.main()
