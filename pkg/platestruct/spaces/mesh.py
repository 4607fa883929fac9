# -*- coding: utf-8 -*-

"""Conforming triangle meshes of a skeleton.

Every face gets its own triangulation in local coordinates. Break points on
junction edges are exchanged between the incident faces until all of them
carry the same nodes along the edge, so continuity can be imposed node by
node. Rectangular faces get structured tensor meshes, other polygons a
constrained Delaunay triangulation of boundary and lattice points.

"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import matplotlib.tri as mtri
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, cKDTree

from platestruct.core import MeshError
from platestruct.helper import get_logger
from platestruct.skeleton import Edge, Face, Skeleton
from platestruct.spaces.elements import MorleyElements, P1Elements

# Initialize global logger
logger = get_logger(__name__)

GRADING_FACTORS = (0.5, 0.25, 0.125)
MAX_EXCHANGE_ROUNDS = 50


# Mesh classes
class FaceMesh:
    def __init__(
        self: FaceMesh,
        face: Face,
        points: np.ndarray,
        triangles: np.ndarray,
        skeleton: Skeleton,
    ):
        """Initialize FaceMesh class.

        Init function of the FaceMesh class.

        Args:
            face: Face the mesh discretizes.
            points: Local node coordinates (n, 2).
            triangles: Counter-clockwise node indices (m, 3).
            skeleton: Skeleton the face belongs to.

        """
        self._face = face
        self._points = np.asarray(points, dtype=np.float64)
        self._triangles = np.asarray(triangles, dtype=np.int64)
        self._global_nodes = np.zeros(self._points.shape[0], dtype=np.int64)

        # Mesh edges, each stored once with the lower node first
        pairs = np.stack(
            [
                np.sort(self._triangles[:, [(k + 1) % 3, (k + 2) % 3]], axis=1)
                for k in range(3)
            ],
            axis=1,
        )
        self._edges, inverse, counts = np.unique(
            pairs.reshape(-1, 2), axis=0, return_inverse=True, return_counts=True
        )
        self._triangle_edges = inverse.reshape(-1, 3)
        self._boundary = counts == 1
        element = np.repeat(np.arange(self._triangles.shape[0]), 3)
        local = np.tile(np.arange(3), self._triangles.shape[0])
        self._edge_element = np.zeros(self._edges.shape[0], dtype=np.int64)
        self._edge_local = np.zeros(self._edges.shape[0], dtype=np.int64)
        self._edge_element[inverse.ravel()] = element
        self._edge_local[inverse.ravel()] = local

        delta = self._points[self._edges[:, 1]] - self._points[self._edges[:, 0]]
        self._lengths = np.linalg.norm(delta, axis=1)
        self._tangents = delta / self._lengths[:, None]
        self._normals = np.column_stack([-self._tangents[:, 1], self._tangents[:, 0]])

        # Skeleton edges carrying the boundary mesh edges
        tol = skeleton.tolerance
        nodes_global = face.to_global(self._points)
        self._edge_owner = np.full(self._edges.shape[0], -1, dtype=np.int64)
        self._clamped_nodes = np.zeros(self._points.shape[0], dtype=bool)
        for edge in skeleton.face_edges(face.id):
            on_edge = edge.distance(nodes_global) <= tol
            if edge.clamped:
                self._clamped_nodes |= on_edge
            owned = self._boundary & on_edge[self._edges[:, 0]] & on_edge[self._edges[:, 1]]
            self._edge_owner[owned] = edge.index
        self._clamped_edges = np.zeros(self._edges.shape[0], dtype=bool)
        for edge in skeleton.clamped_edges:
            if face.id in edge.faces:
                self._clamped_edges |= self._edge_owner == edge.index

        self._p1 = P1Elements(self._points, self._triangles)
        self._morley = MorleyElements(
            self._points, self._triangles, self._normals[self._triangle_edges]
        )
        self._triangulation = None

    @property
    def face(self: FaceMesh) -> Face:
        return self._face

    @property
    def face_id(self: FaceMesh) -> int:
        return self._face.id

    @property
    def points(self: FaceMesh) -> np.ndarray:
        return self._points

    @property
    def points_global(self: FaceMesh) -> np.ndarray:
        return self._face.to_global(self._points)

    @property
    def triangles(self: FaceMesh) -> np.ndarray:
        return self._triangles

    @property
    def n_nodes(self: FaceMesh) -> int:
        return self._points.shape[0]

    @property
    def n_edges(self: FaceMesh) -> int:
        return self._edges.shape[0]

    @property
    def edges(self: FaceMesh) -> np.ndarray:
        return self._edges

    @property
    def triangle_edges(self: FaceMesh) -> np.ndarray:
        """Mesh edge opposite each vertex of each triangle, (m, 3)."""
        return self._triangle_edges

    @property
    def boundary_edges(self: FaceMesh) -> np.ndarray:
        return self._boundary

    @property
    def edge_owner(self: FaceMesh) -> np.ndarray:
        """Skeleton edge index of boundary mesh edges, -1 elsewhere."""
        return self._edge_owner

    @property
    def edge_element(self: FaceMesh) -> Tuple[np.ndarray, np.ndarray]:
        """A triangle containing each edge and the opposite local vertex."""
        return self._edge_element, self._edge_local

    @property
    def edge_lengths(self: FaceMesh) -> np.ndarray:
        return self._lengths

    @property
    def edge_tangents(self: FaceMesh) -> np.ndarray:
        return self._tangents

    @property
    def edge_normals(self: FaceMesh) -> np.ndarray:
        return self._normals

    @property
    def edge_midpoints(self: FaceMesh) -> np.ndarray:
        return 0.5 * (self._points[self._edges[:, 0]] + self._points[self._edges[:, 1]])

    @property
    def clamped_nodes(self: FaceMesh) -> np.ndarray:
        return self._clamped_nodes

    @property
    def clamped_edges(self: FaceMesh) -> np.ndarray:
        return self._clamped_edges

    @property
    def global_nodes(self: FaceMesh) -> np.ndarray:
        return self._global_nodes

    @global_nodes.setter
    def global_nodes(self: FaceMesh, value: np.ndarray):
        self._global_nodes = np.asarray(value, dtype=np.int64)

    @property
    def p1(self: FaceMesh) -> P1Elements:
        return self._p1

    @property
    def morley(self: FaceMesh) -> MorleyElements:
        return self._morley

    @property
    def h_max(self: FaceMesh) -> np.float64:
        return np.float64(self._lengths.max())

    def locate(self: FaceMesh, points2d: np.ndarray) -> np.ndarray:
        """Triangle index of each local point, -1 outside the mesh."""
        if self._triangulation is None:
            self._triangulation = mtri.Triangulation(
                self._points[:, 0], self._points[:, 1], self._triangles
            )
        finder = self._triangulation.get_trifinder()
        points2d = np.atleast_2d(points2d)
        elements = np.asarray(finder(points2d[:, 0], points2d[:, 1]), dtype=np.int64)

        # Points on the boundary may fall through the finder
        missing = np.flatnonzero(elements < 0)
        if missing.size > 0:
            centroids = self._points[self._triangles].mean(axis=1)
            _, nearest = cKDTree(centroids).query(points2d[missing], k=min(8, centroids.shape[0]))
            nearest = np.asarray(nearest).reshape(missing.size, -1)
            for row, point in enumerate(points2d[missing]):
                candidates = nearest[row]
                bary = self._p1.barycentric(candidates, np.repeat(point[None, :], len(candidates), axis=0))
                best = np.argmax(bary.min(axis=1))
                if bary[best].min() >= -1e-9:
                    elements[missing[row]] = candidates[best]
        return elements


@dataclass
class NodePair:
    edge: int
    first: Tuple[int, int]
    second: Tuple[int, int]


@dataclass
class SegmentPair:
    edge: int
    first: Tuple[int, int]
    second: Tuple[int, int]


class SkeletonMesh:
    def __init__(
        self: SkeletonMesh,
        skeleton: Skeleton,
        faces: Dict[int, FaceMesh],
        mesh_size: float,
    ):
        """Initialize SkeletonMesh class.

        Init function of the SkeletonMesh class.

        """
        self._skeleton = skeleton
        self._faces = faces
        self._mesh_size = np.float64(mesh_size)
        self._identify_nodes()
        self._node_pairs, self._segment_pairs = self._match_junctions()

    def _identify_nodes(self: SkeletonMesh):
        points = np.vstack([mesh.points_global for mesh in self._faces.values()])
        pairs = cKDTree(points).query_pairs(self._skeleton.tolerance, output_type="ndarray")
        graph = coo_matrix(
            (np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])),
            shape=(points.shape[0], points.shape[0]),
        )
        _, labels = connected_components(graph, directed=False)
        _, first, compact = np.unique(labels, return_index=True, return_inverse=True)
        self._points = points[first]
        start = 0
        for mesh in self._faces.values():
            mesh.global_nodes = compact[start:start + mesh.n_nodes]
            start += mesh.n_nodes

    def _match_junctions(self: SkeletonMesh) -> Tuple[List[NodePair], List[SegmentPair]]:
        tol = self._skeleton.tolerance
        node_pairs, segment_pairs = list(), list()
        for edge in self._skeleton.junction_edges:
            nodes, segments = dict(), dict()
            for face_id in edge.faces:
                mesh = self._faces[face_id]
                on_edge = np.flatnonzero(edge.distance(mesh.points_global) <= tol)
                s = edge.arclength(mesh.points_global[on_edge])
                nodes[face_id] = (on_edge[np.argsort(s)], np.sort(s))
                owned = np.flatnonzero(mesh.edge_owner == edge.index)
                mids = edge.arclength(mesh.face.to_global(mesh.edge_midpoints[owned]))
                segments[face_id] = (owned[np.argsort(mids)], np.sort(mids))

            first = edge.faces[0]
            for other in edge.faces[1:]:
                for table, store, kind in (
                    (nodes, node_pairs, NodePair),
                    (segments, segment_pairs, SegmentPair),
                ):
                    ids_a, s_a = table[first]
                    ids_b, s_b = table[other]
                    if s_a.shape != s_b.shape or not np.allclose(s_a, s_b, atol=tol):
                        logger.error(
                            "Faces %d and %d don't share nodes along edge %d.",
                            first, other, edge.index,
                        )
                        raise MeshError(
                            "Faces {} and {} don't share nodes along edge {}.".format(
                                first, other, edge.index
                            )
                        )
                    for a, b in zip(ids_a, ids_b):
                        store.append(kind(edge.index, (first, int(a)), (other, int(b))))
        return node_pairs, segment_pairs

    @property
    def skeleton(self: SkeletonMesh) -> Skeleton:
        return self._skeleton

    @property
    def faces(self: SkeletonMesh) -> Dict[int, FaceMesh]:
        return self._faces

    @property
    def face_ids(self: SkeletonMesh) -> List[int]:
        return list(self._faces.keys())

    @property
    def mesh_size(self: SkeletonMesh) -> np.float64:
        return self._mesh_size

    @property
    def points(self: SkeletonMesh) -> np.ndarray:
        """Distinct global node positions (N, 3)."""
        return self._points

    @property
    def node_pairs(self: SkeletonMesh) -> List[NodePair]:
        return self._node_pairs

    @property
    def segment_pairs(self: SkeletonMesh) -> List[SegmentPair]:
        return self._segment_pairs

    def segments_on(self: SkeletonMesh, face_id: int, edge: Edge) -> np.ndarray:
        """Boundary mesh edges of a face along a skeleton edge, sorted from a to b."""
        mesh = self._faces[face_id]
        owned = np.flatnonzero(mesh.edge_owner == edge.index)
        mids = edge.arclength(mesh.face.to_global(mesh.edge_midpoints[owned]))
        return owned[np.argsort(mids)]

    def node_at(self: SkeletonMesh, face_id: int, point: np.ndarray) -> Optional[int]:
        mesh = self._faces[face_id]
        distance = np.linalg.norm(mesh.points_global - point, axis=1)
        index = int(np.argmin(distance))
        return index if distance[index] <= self._skeleton.tolerance else None


# Mesh generation
def _merge(values: np.ndarray, new: np.ndarray, tol: float) -> Tuple[np.ndarray, bool]:
    merged = list(np.asarray(values, dtype=np.float64))
    changed = False
    for value in np.atleast_1d(new):
        if np.min(np.abs(np.asarray(merged) - value)) > tol:
            merged.append(float(value))
            changed = True
    return np.sort(np.asarray(merged)), changed


def _uniform(a: float, b: float, h: float) -> np.ndarray:
    return np.linspace(a, b, int(np.ceil((b - a) / h - 1e-9)) + 1)


class _FaceBreaks:
    """Node coordinates of a face before triangulation.

    Rectangles keep one coordinate list per local axis, other polygons one
    parameter list per side.

    """

    def __init__(self: _FaceBreaks, face: Face, h: float, grading: np.ndarray, tol: float):
        self.face = face
        self.h = h
        self.tol = tol
        self.bounds = face.rectangle_bounds
        self.grading = grading
        if self.bounds is not None:
            x1 = _uniform(self.bounds[0], self.bounds[1], h)
            x2 = _uniform(self.bounds[2], self.bounds[3], h)
            for point in grading:
                for factor in GRADING_FACTORS:
                    for axis, lo, hi in ((0, self.bounds[0], self.bounds[1]), (1, self.bounds[2], self.bounds[3])):
                        for value in (point[axis] - factor * h, point[axis] + factor * h):
                            if lo + tol < value < hi - tol:
                                if axis == 0:
                                    x1, _ = _merge(x1, [value], tol)
                                else:
                                    x2, _ = _merge(x2, [value], tol)
            self.axes = [x1, x2]
        else:
            self.sides = list()
            local = face.polygon_local
            n = local.shape[0]
            for i in range(n):
                length = np.linalg.norm(local[(i + 1) % n] - local[i])
                t = _uniform(0.0, 1.0, h / length)
                for point in grading:
                    for end in (0, 1):
                        if np.linalg.norm(local[(i + end) % n] - point) <= tol:
                            offsets = np.array(GRADING_FACTORS) * h / length
                            t, _ = _merge(t, offsets if end == 0 else 1.0 - offsets, tol / length)
                self.sides.append(t)

    def _side(self: _FaceBreaks, edge: Edge) -> int:
        for i, (p, q) in enumerate(self.face.sides):
            ends = np.vstack([edge.a, edge.b])
            d = q - p
            t = (ends - p) @ d / (d @ d)
            foot = p + np.outer(np.clip(t, 0.0, 1.0), d)
            if np.all(np.linalg.norm(ends - foot, axis=1) <= self.tol):
                return i
        logger.error("Edge %d isn't on the boundary of face %d.", edge.index, self.face.id)
        raise MeshError(
            "Edge {} isn't on the boundary of face {}.".format(edge.index, self.face.id)
        )

    def on_edge(self: _FaceBreaks, edge: Edge) -> np.ndarray:
        """Arclength of the current break points along an edge."""
        if self.bounds is not None:
            a = self.face.to_local(edge.a)[0]
            direction = self.face.vectors_to_local(edge.direction)[:2]
            axis = int(np.argmax(np.abs(direction)))
            s = (self.axes[axis] - a[axis]) / direction[axis]
        else:
            i = self._side(edge)
            p, q = self.face.sides[i]
            s = edge.arclength(p + np.outer(self.sides[i], q - p))
        return s[(s >= -self.tol) & (s <= edge.length + self.tol)]

    def insert(self: _FaceBreaks, edge: Edge, s: np.ndarray) -> bool:
        if self.bounds is not None:
            a = self.face.to_local(edge.a)[0]
            direction = self.face.vectors_to_local(edge.direction)[:2]
            axis = int(np.argmax(np.abs(direction)))
            self.axes[axis], changed = _merge(
                self.axes[axis], a[axis] + s * direction[axis], self.tol
            )
            return changed
        i = self._side(edge)
        p, q = self.face.sides[i]
        d = q - p
        t = (edge.point_at(s) - p) @ d / (d @ d)
        self.sides[i], changed = _merge(self.sides[i], t, self.tol / np.linalg.norm(d))
        return changed

    def triangulate(self: _FaceBreaks) -> Tuple[np.ndarray, np.ndarray]:
        if self.bounds is not None:
            return _tensor_triangulation(*self.axes)
        return self._polygon_triangulation()

    def _polygon_triangulation(self: _FaceBreaks) -> Tuple[np.ndarray, np.ndarray]:
        local = self.face.polygon_local
        n = local.shape[0]
        boundary = np.vstack(
            [
                local[i] + np.outer(self.sides[i][:-1], local[(i + 1) % n] - local[i])
                for i in range(n)
            ]
        )
        lo, hi = local.min(axis=0), local.max(axis=0)
        grid = np.stack(
            np.meshgrid(
                np.arange(lo[0] + 0.5 * self.h, hi[0], self.h),
                np.arange(lo[1] + 0.5 * self.h, hi[1], self.h),
                indexing="ij",
            ),
            axis=-1,
        ).reshape(-1, 2)
        interior = [grid]
        angles = np.linspace(0.0, 2.0 * np.pi, 8, endpoint=False)
        ring = np.column_stack([np.cos(angles), np.sin(angles)])
        for point in self.grading:
            for factor in GRADING_FACTORS:
                interior.append(point + factor * self.h * ring)
        interior = np.vstack(interior)
        keep = self.face.contains(interior) & (
            self.face.boundary_distance(interior) > 0.3 * self.h * GRADING_FACTORS[-1]
        )
        points = np.vstack([boundary, interior[keep]])

        simplices = Delaunay(points).simplices
        centroids = points[simplices].mean(axis=1)
        a, b, c = (points[simplices[:, k]] for k in range(3))
        area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
        keep = self.face.contains(centroids) & (np.abs(area) > 1e-10 * self.h ** 2)
        triangles = simplices[keep]
        flip = area[keep] < 0.0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]

        # Every boundary segment has to appear as a mesh edge
        nb = boundary.shape[0]
        segments = {tuple(sorted((i, (i + 1) % nb))) for i in range(nb)}
        present = {
            tuple(sorted((int(t[(k + 1) % 3]), int(t[(k + 2) % 3]))))
            for t in triangles
            for k in range(3)
        }
        if not segments <= present:
            logger.error("Triangulation of face %d misses boundary segments.", self.face.id)
            raise MeshError(
                "Triangulation of face {} misses boundary segments.".format(self.face.id)
            )
        return points, triangles


def _tensor_triangulation(x1: np.ndarray, x2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    nx, ny = x1.size, x2.size
    points = np.stack(np.meshgrid(x1, x2, indexing="ij"), axis=-1).reshape(-1, 2)
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    n00, n10 = i * ny + j, (i + 1) * ny + j
    n01, n11 = n00 + 1, n10 + 1
    triangles = np.vstack(
        [np.column_stack([n00, n10, n11]), np.column_stack([n00, n11, n01])]
    )
    return points, triangles


def mesh_skeleton(skeleton: Skeleton, mesh_size: float, grading: bool = True) -> SkeletonMesh:
    """Conforming triangulation of all faces of a skeleton."""
    if mesh_size <= 0.0:
        logger.error("Mesh size %s isn't positive.", mesh_size)
        raise MeshError("Mesh size {} isn't positive.".format(mesh_size))

    tol = skeleton.tolerance
    breaks = dict()
    for face_id, face in skeleton.faces.items():
        special = np.zeros((0, 2))
        if grading and skeleton.multi_face_points.shape[0] > 0:
            local3 = face.to_local3(skeleton.multi_face_points)
            on_plane = np.abs(local3[:, 2]) <= tol
            candidates = local3[on_plane, :2]
            special = candidates[face.contains(candidates, tol)]
        breaks[face_id] = _FaceBreaks(face, mesh_size, special, tol)

    # Exchange break points across junction edges until they agree
    for _ in range(MAX_EXCHANGE_ROUNDS):
        changed = False
        for edge in skeleton.junction_edges:
            s = np.concatenate([breaks[f].on_edge(edge) for f in edge.faces])
            for face_id in edge.faces:
                changed |= breaks[face_id].insert(edge, s)
        if not changed:
            break
    else:
        logger.error("Break points didn't settle after %d rounds.", MAX_EXCHANGE_ROUNDS)
        raise MeshError(
            "Break points didn't settle after {} rounds.".format(MAX_EXCHANGE_ROUNDS)
        )

    faces = dict()
    for face_id, face in skeleton.faces.items():
        points, triangles = breaks[face_id].triangulate()
        faces[face_id] = FaceMesh(face, points, triangles, skeleton)
        logger.debug(
            "Face %d meshed with %d nodes and %d triangles.",
            face_id, points.shape[0], triangles.shape[0],
        )
    return SkeletonMesh(skeleton, faces, mesh_size)


if __name__ == "__main__":
    logger.info("This is the file for the skeleton meshes.")
