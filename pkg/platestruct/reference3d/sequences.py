# -*- coding: utf-8 -*-

"""Recovery and test sequences.

recovery_sequence lifts a field of the limit inextensional space to a 3D
displacement of the thick structure, scaled by 1/delta, that is an exact
rigid motion near every multi-face vertex and a rod motion along every
junction edge. test_sequence replaces a skeleton field near junction edges
and vertices by transverse and ball means.

"""

from __future__ import annotations
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import roots_legendre

from platestruct.core import SpaceError
from platestruct.fields import DisplacementSample3D
from platestruct.helper import cutoff, get_logger
from platestruct.reference3d.core import Structure3DProblem
from platestruct.skeleton import Edge, Face, Skeleton
from platestruct.spaces.core import LimitInextensionalBasis, MembraneBendingDofs, evaluate
from platestruct.spaces.mesh import SkeletonMesh

# Initialize global logger
logger = get_logger(__name__)

SkeletonField = Callable[[int, np.ndarray], np.ndarray]


def _coordinates(basis: LimitInextensionalBasis, field: np.ndarray) -> np.ndarray:
    """Limit-space coordinates of coordinates or of full dofs."""
    field = np.asarray(field, dtype=np.float64)
    if field.shape == (basis.dimension,):
        return field
    if field.shape != (basis.dofs.size,):
        logger.error("Field of size %d fits neither the limit space nor the dofs.", field.size)
        raise SpaceError("field of size {} fits neither the limit space nor the dofs".format(field.size))
    coordinates = basis.fit(field)
    residual = np.linalg.norm(basis.basis @ coordinates - field)
    if residual > 1e-8 * max(float(np.linalg.norm(field)), 1e-300):
        logger.error("Field is not in the limit inextensional space (residual %s).", str(residual))
        raise SpaceError("field is not in the limit inextensional space")
    return coordinates


def _clip(bounds: Optional[Tuple[float, float, float, float]], local: np.ndarray) -> np.ndarray:
    if bounds is None:
        return local
    return np.column_stack(
        [np.clip(local[:, 0], bounds[0], bounds[1]), np.clip(local[:, 1], bounds[2], bounds[3])]
    )


def _values_global(
    dofs: MembraneBendingDofs, x: np.ndarray, face: Face, points: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Displacement and rotation in global components at global points of a face."""
    values = evaluate(dofs, x, face.id, face.to_local(points))
    return face.vectors_to_global(values.displacement), face.vectors_to_global(values.rotation)


def _rod_motion(
    dofs: MembraneBendingDofs, x: np.ndarray, skeleton: Skeleton, edge: Edge, points: np.ndarray
) -> np.ndarray:
    """Face-averaged rigid motion of the edge cross-section through each point."""
    s = np.clip(edge.arclength(points), 0.0, edge.length)
    feet = edge.point_at(s)
    translation = np.zeros_like(feet)
    rotation = np.zeros_like(feet)
    for face_id in edge.faces:
        a, b = _values_global(dofs, x, skeleton.faces[face_id], feet)
        translation += a
        rotation += b
    translation /= len(edge.faces)
    rotation /= len(edge.faces)
    return translation + np.cross(rotation, points - feet)


def recovery_sequence(
    basis: LimitInextensionalBasis,
    field: np.ndarray,
    problem: Structure3DProblem,
) -> DisplacementSample3D:
    """Displacement W of the thick structure built from a limit field V.

    W = (V + B ^ x3 e3) / delta on every plate, B the rotation of V. Within
    eta0 delta of a junction edge W is the rod motion of the edge and within
    eta0 delta of a multi-face vertex A it is (A(A) + B(A) ^ (x - A)) / delta;
    the transitions use the cutoff over the next eta0 delta.

    Args:
        field: Limit-space coordinates or full dofs of V.

    Raises:
        SpaceError: V is not in the limit inextensional space.

    """
    coordinates = _coordinates(basis, field)
    dofs = basis.dofs
    x = basis.basis @ coordinates
    skeleton = problem.skeleton
    delta = problem.delta
    radius = skeleton.eta0 * delta
    vertices = basis.vertex_values(coordinates)
    clamped = problem.clamped_nodes()
    logger.info("Build recovery sequence, delta=%s.", str(delta))

    values = dict()
    for face_id, grid in problem.grids.items():
        face = grid.face
        midsurface = grid.midsurface_local.reshape(-1, 2)
        on_face = _clip(face.rectangle_bounds, midsurface)
        field_values = evaluate(dofs, x, face_id, on_face)
        rotation = field_values.rotation
        x3 = grid.x3

        # (n, nz, 3) local components
        local = (
            field_values.displacement[:, None, :]
            + x3[None, :, None] * np.stack(
                [rotation[:, 1], -rotation[:, 0], np.zeros(rotation.shape[0])], axis=-1
            )[:, None, :]
        )
        result = face.vectors_to_global(local) / delta
        points = grid.nodes_global.reshape(-1, 3).reshape(midsurface.shape[0], grid.nz, 3)
        base_points = face.to_global(midsurface)

        for edge in skeleton.junction_edges:
            distance = edge.distance(base_points)
            near = distance < 2.0 * radius
            if not np.any(near):
                continue
            weight = cutoff(distance[near] / radius)[:, None, None]
            rod = _rod_motion(dofs, x, skeleton, edge, points[near].reshape(-1, 3))
            rod = rod.reshape(-1, grid.nz, 3) / delta
            result[near] = weight * result[near] + (1.0 - weight) * rod

        for point, (translation, turn) in zip(basis.vertices, vertices):
            distance = np.linalg.norm(base_points - point, axis=1)
            near = distance < 2.0 * radius
            if not np.any(near):
                continue
            weight = cutoff(distance[near] / radius)[:, None, None]
            rigid = (translation + np.cross(turn, points[near] - point)) / delta
            result[near] = weight * result[near] + (1.0 - weight) * rigid

        local_values = face.vectors_to_local(result).reshape(grid.shape + (3,))
        mask = clamped[problem.node_slice(face_id)].reshape(grid.shape)
        local_values[mask] = 0.0
        values[face_id] = local_values
    return DisplacementSample3D(problem.grids, values, problem.ties).stitch()


# Test sequences
def nodal_values(mesh: SkeletonMesh, field: SkeletonField) -> Dict[int, np.ndarray]:
    """Global field values at the mesh nodes of every face."""
    return {
        face_id: np.asarray(field(face_id, face_mesh.points_global), dtype=np.float64)
        for face_id, face_mesh in mesh.faces.items()
    }


def _inward(face: Face, edge: Edge) -> np.ndarray:
    normal = np.cross(face.e3, edge.direction)
    centroid = face.polygon.mean(axis=0)
    if (centroid - edge.a) @ normal < 0.0:
        normal = -normal
    return normal


def _transverse_mean(
    skeleton: Skeleton,
    field: SkeletonField,
    edge: Edge,
    feet: np.ndarray,
    delta: float,
    quadrature: int,
) -> np.ndarray:
    """Mean of the field over the segments of length delta normal to the edge."""
    if edge.clamped:
        return np.zeros_like(feet)
    nodes, weights = roots_legendre(quadrature)
    t = 0.5 * delta * (nodes + 1.0)
    weights = 0.5 * weights
    mean = np.zeros_like(feet)
    for face_id in edge.faces:
        normal = _inward(skeleton.faces[face_id], edge)
        points = feet[:, None, :] + t[None, :, None] * normal
        samples = np.asarray(field(face_id, points.reshape(-1, 3))).reshape(feet.shape[0], quadrature, 3)
        mean += np.einsum("q,nqc->nc", weights, samples)
    return mean / len(edge.faces)


def _ball_mean(
    skeleton: Skeleton,
    field: SkeletonField,
    point: np.ndarray,
    delta: float,
    quadrature: int,
) -> np.ndarray:
    """Mean of the field over the skeleton points within delta of point."""
    r_nodes, r_weights = roots_legendre(quadrature)
    r = 0.5 * delta * (r_nodes + 1.0)
    r_weights = 0.5 * delta * r_weights * r
    angles = np.pi * (np.arange(4 * quadrature) + 0.5) / (2 * quadrature)
    a_weight = np.pi / (2 * quadrature)

    total = np.zeros(3)
    measure = 0.0
    for face_id, face in skeleton.faces.items():
        origin = face.to_local(point)[0]
        if not face.contains(origin[None, :], tol=skeleton.tolerance)[0]:
            continue
        offsets = r[:, None, None] * np.stack([np.cos(angles), np.sin(angles)], axis=-1)[None, :, :]
        local = (origin + offsets).reshape(-1, 2)
        weights = np.repeat(r_weights, angles.shape[0]) * a_weight
        inside = face.contains(local, tol=skeleton.tolerance)
        if not np.any(inside):
            continue
        samples = np.asarray(field(face_id, face.to_global(local[inside])))
        total += weights[inside] @ samples
        measure += float(np.sum(weights[inside]))
    if measure == 0.0:
        return np.zeros(3)
    return total / measure


def test_sequence(
    mesh: SkeletonMesh,
    field: SkeletonField,
    delta: float,
    quadrature: int = 8,
) -> Dict[int, np.ndarray]:
    """Nodal values of the field V_delta.

    Within delta of a junction edge V is replaced by its transverse mean
    over the incident faces, within delta of a clamped edge by 0, within
    delta of a multi-face vertex by its mean over the ball of radius delta;
    the cutoff blends back to V over the next delta. Values on clamped
    edges are 0.

    Args:
        field: field(face_id, global points (n, 3)) -> global vectors (n, 3).

    """
    skeleton = mesh.skeleton
    logger.info("Build test sequence, delta=%s.", str(delta))
    means = list()
    for vertex in skeleton.multi_face_vertices:
        if any(e.contains_point(vertex.point, skeleton.tolerance) for e in skeleton.clamped_edges):
            means.append((vertex.point, np.zeros(3)))
        else:
            means.append((vertex.point, _ball_mean(skeleton, field, vertex.point, delta, quadrature)))

    result = dict()
    for face_id, face_mesh in mesh.faces.items():
        points = face_mesh.points_global
        values = np.asarray(field(face_id, points), dtype=np.float64).copy()
        for edge in skeleton.face_edges(face_id):
            if not (edge.is_junction or edge.clamped):
                continue
            distance = edge.distance(points)
            near = distance < 2.0 * delta
            if not np.any(near):
                continue
            feet = edge.point_at(np.clip(edge.arclength(points[near]), 0.0, edge.length))
            mean = _transverse_mean(skeleton, field, edge, feet, delta, quadrature)
            weight = cutoff(distance[near] / delta)[:, None]
            values[near] = weight * values[near] + (1.0 - weight) * mean

        for point, mean in means:
            distance = np.linalg.norm(points - point, axis=1)
            near = distance < 2.0 * delta
            if not np.any(near):
                continue
            weight = cutoff(distance[near] / delta)[:, None]
            values[near] = weight * values[near] + (1.0 - weight) * mean

        values[face_mesh.clamped_nodes] = 0.0
        result[face_id] = values
    return result


def h1_distance(
    mesh: SkeletonMesh,
    a: Dict[int, np.ndarray],
    b: Optional[Dict[int, np.ndarray]] = None,
) -> np.float64:
    """H1 norm of the P1 interpolant of the nodal difference a - b."""
    total = np.float64(0.0)
    for face_id, face_mesh in mesh.faces.items():
        difference = a[face_id] if b is None else a[face_id] - b[face_id]
        corners = difference[face_mesh.triangles]
        areas = face_mesh.p1.areas
        grads = np.einsum("mic,mid->mcd", corners, face_mesh.p1.gradients)
        total += np.sum(areas * np.sum(grads ** 2, axis=(1, 2)))
        mass = np.sum(corners ** 2, axis=(1, 2)) + np.sum(corners.sum(axis=1) ** 2, axis=1)
        total += np.sum(areas * mass / 12.0)
    return np.float64(np.sqrt(total))


if __name__ == "__main__":
    logger.info("This is the file for the recovery and test sequences.")
