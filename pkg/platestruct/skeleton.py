# -*- coding: utf-8 -*-

"""Plate skeleton.

Geometric model of a structure made of thin plates: planar polygonal faces
with local frames, the edges along which faces are glued or clamped and the
vertices shared by several faces. Includes the validation of the structural
hypotheses H1 (faces connected through edges), H2 (faces around a shared
vertex connected through edges containing it) and H3 (some edge clamped).

"""

from __future__ import annotations
from dataclasses import dataclass, field
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, Union

import networkx as nx
import numpy as np
from matplotlib.path import Path as PolygonPath

from platestruct.core import BaseResultClass, GeometryError
from platestruct.helper import get_logger

# Initialize global logger
logger = get_logger(__name__)

PLANARITY_TOLERANCE = 1e-10
FRAME_TOLERANCE = 1e-12


def _segment_distance(
    points: np.ndarray, a: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Distance of points to the closed segment [a, b] (any dimension)."""
    ab = b - a
    t = np.clip((points - a) @ ab / (ab @ ab), 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)


def _segments_intersect(
    p1: np.ndarray, p2: np.ndarray, q1: np.ndarray, q2: np.ndarray, tol: float
) -> bool:
    def orientation(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orientation(q1, q2, p1)
    d2 = orientation(q1, q2, p2)
    d3 = orientation(p1, p2, q1)
    d4 = orientation(p1, p2, q2)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True

    # Touching or collinear overlap
    for point, a, b in ((p1, q1, q2), (p2, q1, q2), (q1, p1, p2), (q2, p1, p2)):
        if _segment_distance(point[None, :], a, b)[0] <= tol:
            return True
    return False


# Skeleton classes
class Face:
    """Face class.

    A planar simple polygon equipped with a local frame (origin, e1, e2, e3).
    Local coordinates of a point x are ((x - O).e1, (x - O).e2, (x - O).e3).

    """

    def __init__(
        self: Face,
        id: int,
        polygon: Sequence[Sequence[float]],
        origin: Sequence[float],
        e1: Sequence[float],
        e2: Sequence[float],
    ):
        """Initialize Face class.

        Init function of the Face class.

        """
        self._id = int(id)
        self._polygon = np.asarray(polygon, dtype=np.float64)
        self._origin = np.asarray(origin, dtype=np.float64)
        e1 = np.asarray(e1, dtype=np.float64)
        e2 = np.asarray(e2, dtype=np.float64)

        if self._polygon.ndim != 2 or self._polygon.shape[1] != 3:
            logger.error("Face %d: polygon must be a list of 3D points.", self._id)
            raise GeometryError(f"face {self._id}: polygon must contain 3D points")
        if self._polygon.shape[0] < 3:
            logger.error("Face %d: polygon needs at least 3 vertices.", self._id)
            raise GeometryError(f"face {self._id}: fewer than 3 polygon vertices")

        gram = np.array([[e1 @ e1, e1 @ e2], [e1 @ e2, e2 @ e2]])
        if np.max(np.abs(gram - np.eye(2))) > FRAME_TOLERANCE:
            logger.error("Face %d: frame is not orthonormal.", self._id)
            raise GeometryError(f"face {self._id}: frame is not orthonormal")
        self._frame = np.column_stack([e1, e2, np.cross(e1, e2)])

        diffs = self._polygon[:, None, :] - self._polygon[None, :, :]
        self._diameter = np.float64(np.max(np.linalg.norm(diffs, axis=2)))
        if self._diameter <= 0.0:
            logger.error("Face %d: degenerate polygon.", self._id)
            raise GeometryError(f"face {self._id}: degenerate polygon")

        offsets = (self._polygon - self._origin) @ self._frame[:, 2]
        if np.max(np.abs(offsets)) > PLANARITY_TOLERANCE * self._diameter:
            logger.error(
                "Face %d: polygon is not planar (offset %.3e).",
                self._id,
                np.max(np.abs(offsets)),
            )
            raise GeometryError(f"face {self._id}: polygon is not planar")

        self._polygon_local = self.to_local(self._polygon)
        self._check_simple()

        self._path = PolygonPath(
            np.vstack([self._polygon_local, self._polygon_local[:1]]), closed=True
        )

    def _check_simple(self: Face):
        tol = PLANARITY_TOLERANCE * self._diameter
        pts = self._polygon_local
        n = pts.shape[0]
        for i in range(n):
            if np.linalg.norm(pts[(i + 1) % n] - pts[i]) <= tol:
                logger.error("Face %d: zero-length polygon side.", self._id)
                raise GeometryError(f"face {self._id}: zero-length polygon side")
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(
                    pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n], tol ** 2
                ):
                    logger.error("Face %d: polygon is not simple.", self._id)
                    raise GeometryError(f"face {self._id}: polygon is not simple")
        if abs(self.area) <= tol ** 2:
            logger.error("Face %d: polygon has zero area.", self._id)
            raise GeometryError(f"face {self._id}: polygon has zero area")

    @property
    def id(self: Face) -> int:
        return self._id

    @property
    def polygon(self: Face) -> np.ndarray:
        return self._polygon

    @property
    def polygon_local(self: Face) -> np.ndarray:
        return self._polygon_local

    @property
    def origin(self: Face) -> np.ndarray:
        return self._origin

    @property
    def frame(self: Face) -> np.ndarray:
        """Columns e1, e2, e3 of the local frame."""
        return self._frame

    @property
    def e1(self: Face) -> np.ndarray:
        return self._frame[:, 0]

    @property
    def e2(self: Face) -> np.ndarray:
        return self._frame[:, 1]

    @property
    def e3(self: Face) -> np.ndarray:
        return self._frame[:, 2]

    @property
    def diameter(self: Face) -> np.float64:
        return self._diameter

    @property
    def area(self: Face) -> np.float64:
        x, y = self._polygon_local[:, 0], self._polygon_local[:, 1]
        return np.float64(0.5 * (x @ np.roll(y, -1) - np.roll(x, -1) @ y))

    @property
    def sides(self: Face) -> List[Tuple[np.ndarray, np.ndarray]]:
        n = self._polygon.shape[0]
        return [(self._polygon[i], self._polygon[(i + 1) % n]) for i in range(n)]

    @property
    def rectangle_bounds(self: Face) -> Optional[Tuple[float, float, float, float]]:
        """Bounds (x1min, x1max, x2min, x2max) if the face is an axis-aligned
        rectangle in its local frame, else None."""
        if self._polygon.shape[0] != 4:
            return None
        tol = PLANARITY_TOLERANCE * self._diameter * 10.0
        x1, x2 = self._polygon_local[:, 0], self._polygon_local[:, 1]
        bounds = (x1.min(), x1.max(), x2.min(), x2.max())
        on_x = np.minimum(np.abs(x1 - bounds[0]), np.abs(x1 - bounds[1])) <= tol
        on_y = np.minimum(np.abs(x2 - bounds[2]), np.abs(x2 - bounds[3])) <= tol
        if not (np.all(on_x) and np.all(on_y)):
            return None
        if bounds[1] - bounds[0] <= tol or bounds[3] - bounds[2] <= tol:
            return None
        return tuple(float(b) for b in bounds)

    def to_local(self: Face, points: np.ndarray) -> np.ndarray:
        """In-plane local coordinates (n, 2) of 3D points."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return (points - self._origin) @ self._frame[:, :2]

    def to_local3(self: Face, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return (points - self._origin) @ self._frame

    def to_global(
        self: Face, points: np.ndarray, x3: Optional[np.ndarray] = None
    ) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        result = self._origin + points[:, 0:1] * self.e1 + points[:, 1:2] * self.e2
        if x3 is not None:
            result = result + np.asarray(x3, dtype=np.float64).reshape(-1, 1) * self.e3
        return result

    def vectors_to_global(self: Face, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors) @ self._frame.T

    def vectors_to_local(self: Face, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors) @ self._frame

    def boundary_distance(self: Face, points2d: np.ndarray) -> np.ndarray:
        points2d = np.atleast_2d(points2d)
        pts = self._polygon_local
        n = pts.shape[0]
        return np.min(
            np.column_stack(
                [
                    _segment_distance(points2d, pts[i], pts[(i + 1) % n])
                    for i in range(n)
                ]
            ),
            axis=1,
        )

    def contains(self: Face, points2d: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Closed-polygon membership of local points, boundary within tol."""
        points2d = np.atleast_2d(points2d)
        inside = self._path.contains_points(points2d)
        if tol > 0.0:
            inside = inside | (self.boundary_distance(points2d) <= tol)
        return inside

    def transformed(
        self: Face, rotation: np.ndarray, translation: np.ndarray
    ) -> Face:
        return Face(
            id=self._id,
            polygon=self._polygon @ rotation.T + translation,
            origin=rotation @ self._origin + translation,
            e1=rotation @ self.e1,
            e2=rotation @ self.e2,
        )

    def to_dict(self: Face) -> Dict[str, Any]:
        return {
            "id": self._id,
            "vertices": self._polygon.tolist(),
            "origin": self._origin.tolist(),
            "e1": self.e1.tolist(),
            "e2": self.e2.tolist(),
        }


class Edge:
    """Edge class.

    Segment [a, b] of the skeleton, oriented by e_J = (b - a)/|b - a|.

    """

    def __init__(
        self: Edge,
        index: int,
        a: Sequence[float],
        b: Sequence[float],
        faces: Sequence[int],
        clamped: bool = False,
    ):
        """Initialize Edge class.

        Init function of the Edge class.

        """
        self._index = int(index)
        self._a = np.asarray(a, dtype=np.float64)
        self._b = np.asarray(b, dtype=np.float64)
        self._faces = tuple(sorted(int(f) for f in faces))
        self._clamped = bool(clamped)
        self._length = np.float64(np.linalg.norm(self._b - self._a))
        if self._length <= 0.0:
            logger.error("Edge %d has zero length.", self._index)
            raise GeometryError(f"edge {self._index}: zero length")
        self._direction = (self._b - self._a) / self._length

    @property
    def index(self: Edge) -> int:
        return self._index

    @property
    def a(self: Edge) -> np.ndarray:
        return self._a

    @property
    def b(self: Edge) -> np.ndarray:
        return self._b

    @property
    def faces(self: Edge) -> Tuple[int, ...]:
        return self._faces

    @property
    def clamped(self: Edge) -> bool:
        return self._clamped

    @property
    def length(self: Edge) -> np.float64:
        return self._length

    @property
    def direction(self: Edge) -> np.ndarray:
        return self._direction

    @property
    def is_junction(self: Edge) -> bool:
        return len(self._faces) >= 2

    def point_at(self: Edge, s: np.ndarray) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        return self._a + s[:, None] * self._direction

    def arclength(self: Edge, points: np.ndarray) -> np.ndarray:
        """Signed abscissa of the projection on the edge line."""
        return (np.atleast_2d(points) - self._a) @ self._direction

    def distance(self: Edge, points: np.ndarray) -> np.ndarray:
        return _segment_distance(np.atleast_2d(points), self._a, self._b)

    def contains_point(self: Edge, point: np.ndarray, tol: float) -> bool:
        return bool(self.distance(point)[0] <= tol)


@dataclass
class Vertex:
    index: int
    point: np.ndarray
    edges: List[int] = field(default_factory=list)
    faces: List[int] = field(default_factory=list)

    @property
    def multi_face(self: Vertex) -> bool:
        return len(self.faces) >= 2


class Skeleton:
    """Skeleton class.

    Union of faces glued along edges. Edges not listed for a face side are
    completed as free edges of that face. The skeleton is immutable.

    """

    def __init__(
        self: Skeleton,
        faces: Sequence[Face],
        edges: Sequence[Edge],
        eta0: float = 2.0,
        delta0: float = 0.5,
    ):
        """Initialize Skeleton class.

        Init function of the Skeleton class.

        """
        self._eta0 = np.float64(eta0)
        self._delta0 = np.float64(delta0)
        if not (self._eta0 > 0.0 and self._delta0 > 0.0):
            logger.error("eta0 and delta0 must be positive.")
            raise GeometryError("eta0 and delta0 must be positive")

        self._faces: Dict[int, Face] = dict()
        for face in faces:
            if face.id in self._faces:
                logger.error("Face id used twice: %d.", face.id)
                raise GeometryError(f"face id {face.id} used twice")
            self._faces[face.id] = face
        if not self._faces:
            logger.error("Skeleton without faces.")
            raise GeometryError("skeleton has no faces")

        points = np.vstack([face.polygon for face in self._faces.values()])
        diffs = points.max(axis=0) - points.min(axis=0)
        self._diameter = np.float64(np.linalg.norm(diffs))
        self._tol = np.float64(PLANARITY_TOLERANCE * 10.0 * self._diameter)

        self._edges: List[Edge] = list()
        for edge in edges:
            self._check_edge(edge)
            self._edges.append(Edge(len(self._edges), edge.a, edge.b, edge.faces, edge.clamped))
        self._complete_free_edges()
        self._build_vertices()

    # Construction helpers
    def _side_of(self: Skeleton, face: Face, edge: Edge) -> Optional[int]:
        for i, (p, q) in enumerate(face.sides):
            ends = np.vstack([edge.a, edge.b])
            if np.all(_segment_distance(ends, p, q) <= self._tol):
                return i
        return None

    def _check_edge(self: Skeleton, edge: Edge):
        if not edge.faces:
            logger.error("Edge %d has no incident face.", edge.index)
            raise GeometryError(f"edge {edge.index}: no incident face")
        for face_id in edge.faces:
            if face_id not in self._faces:
                logger.error("Edge %d references unknown face %d.", edge.index, face_id)
                raise GeometryError(f"edge {edge.index}: unknown face {face_id}")
            if self._side_of(self._faces[face_id], edge) is None:
                logger.error(
                    "Edge %d is not on the boundary of face %d.", edge.index, face_id
                )
                raise GeometryError(
                    f"edge {edge.index}: not on the boundary of face {face_id}"
                )

    def _complete_free_edges(self: Skeleton):
        for face in self._faces.values():
            for side_index, (p, q) in enumerate(face.sides):
                length = np.linalg.norm(q - p)
                covered: List[Tuple[float, float]] = list()
                for edge in self._edges:
                    if face.id in edge.faces and self._side_of(face, edge) == side_index:
                        t = np.sort((np.vstack([edge.a, edge.b]) - p) @ (q - p)) / length ** 2
                        covered.append((t[0], t[1]))
                covered.sort()
                position = 0.0
                pieces: List[Tuple[float, float]] = list()
                for start, stop in covered:
                    if start - position > self._tol / length:
                        pieces.append((position, start))
                    position = max(position, stop)
                if 1.0 - position > self._tol / length:
                    pieces.append((position, 1.0))
                for start, stop in pieces:
                    self._edges.append(
                        Edge(
                            len(self._edges),
                            p + start * (q - p),
                            p + stop * (q - p),
                            [face.id],
                            False,
                        )
                    )

    def _build_vertices(self: Skeleton):
        self._vertices: List[Vertex] = list()
        for edge in self._edges:
            for point in (edge.a, edge.b):
                match = None
                for vertex in self._vertices:
                    if np.linalg.norm(vertex.point - point) <= self._tol:
                        match = vertex
                        break
                if match is None:
                    match = Vertex(index=len(self._vertices), point=point.copy())
                    self._vertices.append(match)
                if edge.index not in match.edges:
                    match.edges.append(edge.index)

        for vertex in self._vertices:
            for face in self._faces.values():
                local = face.to_local3(vertex.point)[0]
                if abs(local[2]) > self._tol:
                    continue
                if face.boundary_distance(local[None, :2])[0] <= self._tol:
                    vertex.faces.append(face.id)
            vertex.faces.sort()

        multi = [v.point for v in self._vertices if v.multi_face]
        self._multi_points = (
            np.vstack(multi) if multi else np.zeros((0, 3), dtype=np.float64)
        )

    # Properties
    @property
    def faces(self: Skeleton) -> Dict[int, Face]:
        return self._faces

    @property
    def face_ids(self: Skeleton) -> List[int]:
        return sorted(self._faces.keys())

    @property
    def edges(self: Skeleton) -> List[Edge]:
        return self._edges

    @property
    def vertices(self: Skeleton) -> List[Vertex]:
        return self._vertices

    @property
    def eta0(self: Skeleton) -> np.float64:
        return self._eta0

    @property
    def delta0(self: Skeleton) -> np.float64:
        return self._delta0

    @property
    def diameter(self: Skeleton) -> np.float64:
        return self._diameter

    @property
    def tolerance(self: Skeleton) -> np.float64:
        return self._tol

    @property
    def junction_edges(self: Skeleton) -> List[Edge]:
        return [edge for edge in self._edges if edge.is_junction]

    @property
    def clamped_edges(self: Skeleton) -> List[Edge]:
        return [edge for edge in self._edges if edge.clamped]

    @property
    def multi_face_vertices(self: Skeleton) -> List[Vertex]:
        return [vertex for vertex in self._vertices if vertex.multi_face]

    @property
    def multi_face_points(self: Skeleton) -> np.ndarray:
        return self._multi_points

    def face_edges(self: Skeleton, face_id: int) -> List[Edge]:
        return [edge for edge in self._edges if face_id in edge.faces]

    # Geometry
    def rho(self: Skeleton, face_id: int, points2d: np.ndarray) -> np.ndarray:
        points = self._faces[face_id].to_global(points2d)
        return self.rho_global(points)

    def rho_global(self: Skeleton, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self._multi_points.shape[0] == 0:
            return np.full(points.shape[0], self._diameter + 1.0)
        diffs = points[:, None, :] - self._multi_points[None, :, :]
        return np.min(np.linalg.norm(diffs, axis=2), axis=1)

    def transformed(
        self: Skeleton,
        rotation: np.ndarray,
        translation: np.ndarray,
        face_map: Optional[Dict[int, int]] = None,
    ) -> Skeleton:
        """Rigidly moved (and optionally re-indexed) copy."""
        rotation = np.asarray(rotation, dtype=np.float64)
        translation = np.asarray(translation, dtype=np.float64)
        if face_map is None:
            face_map = {face_id: face_id for face_id in self._faces}
        faces = list()
        for face in self._faces.values():
            moved = face.transformed(rotation, translation)
            faces.append(
                Face(face_map[face.id], moved.polygon, moved.origin, moved.e1, moved.e2)
            )
        edges = [
            Edge(
                edge.index,
                rotation @ edge.a + translation,
                rotation @ edge.b + translation,
                [face_map[f] for f in edge.faces],
                edge.clamped,
            )
            for edge in self._edges
        ]
        return Skeleton(faces, edges, eta0=self._eta0, delta0=self._delta0)

    # Input/ output
    @classmethod
    def from_dict(cls: Type[Skeleton], data: Dict[str, Any]) -> Skeleton:
        try:
            faces = [
                Face(
                    id=item["id"],
                    polygon=item["vertices"],
                    origin=item["origin"],
                    e1=item["e1"],
                    e2=item["e2"],
                )
                for item in data["faces"]
            ]
            edges = [
                Edge(
                    index=i,
                    a=item["a"],
                    b=item["b"],
                    faces=item.get("faces", []),
                    clamped=item.get("clamped", False),
                )
                for i, item in enumerate(data.get("edges", []))
            ]
        except (KeyError, TypeError, ValueError) as e:
            logger.error("Malformed skeleton data: %s", repr(e))
            raise GeometryError(f"malformed skeleton data: {e!r}") from e
        return cls(
            faces,
            edges,
            eta0=data.get("eta0", 2.0),
            delta0=data.get("delta0", 0.5),
        )

    @classmethod
    def from_json(cls: Type[Skeleton], filename: Union[str, Path]) -> Skeleton:
        logger.info("Load skeleton: %s", str(filename))
        try:
            with open(filename, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as e:
            logger.error("Skeleton file is not valid JSON: %s", str(e))
            raise GeometryError(
                f"{filename}: line {e.lineno} column {e.colno}: {e.msg}"
            ) from e
        return cls.from_dict(data)

    def to_dict(self: Skeleton) -> Dict[str, Any]:
        return {
            "faces": [self._faces[i].to_dict() for i in self.face_ids],
            "edges": [
                {
                    "a": edge.a.tolist(),
                    "b": edge.b.tolist(),
                    "faces": list(edge.faces),
                    "clamped": edge.clamped,
                }
                for edge in self._edges
            ],
            "eta0": float(self._eta0),
            "delta0": float(self._delta0),
        }


# Result classes
@dataclass
class ValidationReport(BaseResultClass):
    success: bool
    status: np.int8
    message: str
    hypotheses: Dict[str, bool]
    offending: Dict[str, List[Any]]
    structural_errors: List[str]

    @classmethod
    def from_checks(
        cls: Type[ValidationReport],
        hypotheses: Dict[str, bool],
        offending: Dict[str, List[Any]],
    ) -> ValidationReport:
        failed = [name for name, passed in hypotheses.items() if not passed]
        if failed:
            return cls(
                success=False,
                status=np.int8(1),
                message="Hypotheses failed: " + ", ".join(failed) + ".",
                hypotheses=hypotheses,
                offending=offending,
                structural_errors=list(),
            )
        return cls(
            success=True,
            status=np.int8(0),
            message="All hypotheses passed.",
            hypotheses=hypotheses,
            offending=offending,
            structural_errors=list(),
        )

    @classmethod
    def from_error(
        cls: Type[ValidationReport], errors: List[str]
    ) -> ValidationReport:
        return cls(
            success=False,
            status=np.int8(2),
            message="Structural errors in skeleton.",
            hypotheses=dict(),
            offending=dict(),
            structural_errors=errors,
        )

    def rows(self: ValidationReport) -> List[List[Any]]:
        rows = [["structural", str(not self.structural_errors), "; ".join(self.structural_errors)]]
        for name, passed in self.hypotheses.items():
            rows.append([name, str(passed), " ".join(str(o) for o in self.offending.get(name, []))])
        return rows


# Operations
def validate_hypotheses(skeleton: Skeleton) -> ValidationReport:
    logger.info("Validate skeleton hypotheses.")
    hypotheses: Dict[str, bool] = dict()
    offending: Dict[str, List[Any]] = dict()

    # H1
    graph = nx.Graph()
    graph.add_nodes_from(skeleton.face_ids)
    for edge in skeleton.junction_edges:
        for i, face_a in enumerate(edge.faces):
            for face_b in edge.faces[i + 1 :]:
                graph.add_edge(face_a, face_b, edge=edge.index)
    components = sorted(
        nx.connected_components(graph), key=lambda c: (-len(c), min(c))
    )
    hypotheses["H1"] = len(components) == 1
    offending["H1"] = sorted(f for c in components[1:] for f in c)

    # H2
    offending["H2"] = list()
    for vertex in skeleton.multi_face_vertices:
        local = nx.Graph()
        local.add_nodes_from(vertex.faces)
        for edge in skeleton.edges:
            if not edge.contains_point(vertex.point, skeleton.tolerance):
                continue
            members = [f for f in edge.faces if f in vertex.faces]
            for i, face_a in enumerate(members):
                for face_b in members[i + 1 :]:
                    local.add_edge(face_a, face_b)
        if not nx.is_connected(local):
            offending["H2"].append(vertex.index)
    hypotheses["H2"] = len(offending["H2"]) == 0

    # H3
    hypotheses["H3"] = len(skeleton.clamped_edges) > 0
    offending["H3"] = list() if hypotheses["H3"] else ["no clamped edge"]

    report = ValidationReport.from_checks(hypotheses, offending)
    logger.info(report.message)
    return report


def validate_file(filename: Union[str, Path]) -> Tuple[Optional[Skeleton], ValidationReport]:
    """Load and validate a skeleton file; structural errors are reported."""
    try:
        skeleton = Skeleton.from_json(filename)
    except (GeometryError, OSError) as e:
        return None, ValidationReport.from_error([str(e)])
    return skeleton, validate_hypotheses(skeleton)


def rho(skeleton: Skeleton, face: int, point_2d: np.ndarray) -> np.ndarray:
    """Distance to the multi-face vertices (surrogate if there are none)."""
    return skeleton.rho(face, point_2d)


class JunctionRegion:
    """Point-membership predicate for {x : dist(x, J) < factor * eta0 * delta}."""

    def __init__(
        self: JunctionRegion,
        edges: Sequence[Edge],
        radius: float,
    ):
        self._edges = list(edges)
        self._radius = np.float64(radius)

    @property
    def radius(self: JunctionRegion) -> np.float64:
        return self._radius

    def distance(self: JunctionRegion, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if not self._edges:
            return np.full(points.shape[0], np.inf)
        return np.min(
            np.column_stack([edge.distance(points) for edge in self._edges]), axis=1
        )

    def __call__(self: JunctionRegion, points: np.ndarray) -> np.ndarray:
        return self.distance(points) < self._radius


def junction_region(
    skeleton: Skeleton,
    edge: Optional[Union[int, Sequence[int]]],
    delta: float,
    factor: float = 1.0,
) -> JunctionRegion:
    """Neighborhood of one edge, several edges or (None) all junction edges."""
    if not (0.0 < delta <= skeleton.delta0 * (1.0 + 1e-12)):
        logger.error("Thickness %s outside (0, delta0].", str(delta))
        raise ValueError(f"delta {delta} outside (0, {skeleton.delta0}]")
    if factor < 1.0:
        logger.error("Junction factor %s below 1.", str(factor))
        raise ValueError(f"factor {factor} must be >= 1")
    if edge is None:
        edges = skeleton.junction_edges
    elif isinstance(edge, (int, np.integer)):
        edges = [skeleton.edges[int(edge)]]
    else:
        edges = [skeleton.edges[int(e)] for e in edge]
    return JunctionRegion(edges, factor * skeleton.eta0 * delta)


if __name__ == "__main__":
    logger.info("This is the file for the skeleton classes.")
