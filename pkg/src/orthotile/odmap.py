"""Orthodiagonal map data structure: an embedded bipartite quadrangulation
with boundary, plus extraction of the weighted primal/dual graphs and the
four marked boundary arcs.

Faces are stored as ordered 4-tuples (v1, w1, v2, w2) in counterclockwise
order, normalized to start at a primal vertex; v1, v2 are the primal
diagonal, w1, w2 the dual diagonal.  Adjacency tables are derived lazily.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import geom

PRIMAL = 0
DUAL = 1

TOL_ORTH = 1e-9


class MapError(ValueError):
    """Structurally invalid orthodiagonal map or marking."""


@dataclass(frozen=True)
class Violation:
    kind: str
    where: tuple
    measure: float
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    nonconvex_faces: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, where: tuple, measure: float, message: str) -> None:
        self.violations.append(Violation(kind, where, measure, message))


@dataclass(frozen=True)
class WeightedGraph:
    """Finite network: vertex ids with positions, edges with conductance,
    resistance, Euclidean length and (for graphs extracted from a map) the
    id of the face each edge is the diagonal of."""

    ids: np.ndarray          # (n,) int64, sorted ascending
    positions: np.ndarray    # (n, 2)
    edge_u: np.ndarray       # (m,) int64 vertex ids
    edge_v: np.ndarray
    edge_c: np.ndarray       # conductances > 0
    edge_len: np.ndarray
    edge_face: np.ndarray    # (m,) int64, -1 when not face-derived

    def __post_init__(self):
        if np.any(self.edge_c <= 0) or not np.all(np.isfinite(self.edge_c)):
            raise MapError("conductances must be positive and finite")

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.edge_u)

    @property
    def edge_r(self) -> np.ndarray:
        return 1.0 / self.edge_c

    def index_of(self) -> dict[int, int]:
        return {int(v): i for i, v in enumerate(self.ids)}

    def vertex_weights(self) -> np.ndarray:
        """pi_x = sum of conductances of incident edges."""
        idx = self.index_of()
        pi = np.zeros(self.n)
        for u, v, c in zip(self.edge_u, self.edge_v, self.edge_c):
            pi[idx[int(u)]] += c
            pi[idx[int(v)]] += c
        return pi

    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        adj: dict[int, list[tuple[int, float]]] = {int(v): [] for v in self.ids}
        for u, v, c in zip(self.edge_u, self.edge_v, self.edge_c):
            adj[int(u)].append((int(v), float(c)))
            adj[int(v)].append((int(u), float(c)))
        for k in adj:
            adj[k].sort()
        return adj


def graph_from_edges(positions: dict[int, tuple[float, float]],
                     edges: Sequence[tuple[int, int, float]]) -> WeightedGraph:
    """Build an abstract WeightedGraph from (u, v, conductance) triples."""
    ids = np.array(sorted(positions), dtype=np.int64)
    pos = np.array([positions[int(i)] for i in ids], dtype=float)
    eu = np.array([e[0] for e in edges], dtype=np.int64)
    ev = np.array([e[1] for e in edges], dtype=np.int64)
    ec = np.array([e[2] for e in edges], dtype=float)
    pmap = {int(i): positions[int(i)] for i in ids}
    el = np.array([np.hypot(pmap[int(u)][0] - pmap[int(v)][0],
                            pmap[int(u)][1] - pmap[int(v)][1]) for u, v in zip(eu, ev)])
    return WeightedGraph(ids, pos, eu, ev, ec, el,
                         np.full(len(eu), -1, dtype=np.int64))


class OrthodiagonalMap:
    """Embedded quadrangulation with one exterior face.

    vertices: (n, 2) float positions, colors: (n,) 0=primal / 1=dual,
    faces: (f, 4) int vertex ids ccw starting primal, boundary: list of
    vertex ids tracing the outer face counterclockwise.
    """

    def __init__(self, positions, colors, faces, boundary, mesh_eps: Optional[float] = None):
        self.positions = np.asarray(positions, dtype=float)
        self.colors = np.asarray(colors, dtype=np.int64)
        faces = np.asarray(faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 4:
            raise MapError("faces must be 4-tuples of vertex ids")
        self.faces = np.array([self._normalize_face(f) for f in faces], dtype=np.int64)
        self.boundary = [int(b) for b in boundary]
        self.mesh_eps = float(mesh_eps) if mesh_eps is not None else self._recompute_mesh_eps()
        self._caches: dict = {}

    def _normalize_face(self, f) -> tuple[int, int, int, int]:
        f = [int(x) for x in f]
        if self.colors[f[0]] == PRIMAL:
            return tuple(f)
        return (f[1], f[2], f[3], f[0])

    # -- derived quantities ------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.positions.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def _side_pairs(self) -> np.ndarray:
        """All face sides as (4f, 2) arrays of sorted vertex-id pairs."""
        if "side_pairs" not in self._caches:
            f = self.faces
            a = np.concatenate([f[:, 0], f[:, 1], f[:, 2], f[:, 3]])
            b = np.concatenate([f[:, 1], f[:, 2], f[:, 3], f[:, 0]])
            self._caches["side_pairs"] = np.stack(
                [np.minimum(a, b), np.maximum(a, b)], axis=1)
        return self._caches["side_pairs"]

    def side_edges(self) -> set[tuple[int, int]]:
        """Quadrilateral sides as unordered id pairs."""
        if "sides" not in self._caches:
            pairs = np.unique(self._side_pairs(), axis=0)
            self._caches["sides"] = {(int(a), int(b)) for a, b in pairs}
        return self._caches["sides"]

    def _recompute_mesh_eps(self) -> float:
        if self.n_faces == 0:
            return 0.0
        q = self.positions[self.faces]                     # (f, 4, 2)
        d = q - np.roll(q, -1, axis=1)
        return float(np.sqrt((d ** 2).sum(-1)).max())

    def face_centroids(self) -> np.ndarray:
        if "centroids" not in self._caches:
            self._caches["centroids"] = self.positions[self.faces].mean(axis=1)
        return self._caches["centroids"]

    def face_areas(self) -> np.ndarray:
        """Shoelace areas of the faces (positive for ccw simple quads)."""
        q = self.positions[self.faces]  # (f, 4, 2)
        x, y = q[:, :, 0], q[:, :, 1]
        xr, yr = np.roll(x, -1, axis=1), np.roll(y, -1, axis=1)
        return 0.5 * (x * yr - xr * y).sum(axis=1)

    def boundary_edge_set(self) -> set[tuple[int, int]]:
        if "bedges" not in self._caches:
            pairs, counts = np.unique(self._side_pairs(), axis=0, return_counts=True)
            self._caches["bedges"] = {(int(a), int(b)) for (a, b), c
                                      in zip(pairs, counts) if c == 1}
        return self._caches["bedges"]

    def boundary_polyline(self) -> np.ndarray:
        cyc = self.boundary + [self.boundary[0]]
        return self.positions[np.array(cyc, dtype=np.int64)]

    # -- weighted graph extraction ------------------------------------------

    def _diagonals(self, which: int) -> tuple[np.ndarray, np.ndarray]:
        f = self.faces
        if which == PRIMAL:
            return f[:, 0], f[:, 2]
        return f[:, 1], f[:, 3]

    def extract(self, which: int) -> WeightedGraph:
        """Primal (which=PRIMAL) or dual (which=DUAL) weighted graph.

        One edge per interior face; conductance is the ratio of the
        opposite diagonal's Euclidean length to this one's.
        """
        key = ("graph", which)
        if key in self._caches:
            return self._caches[key]
        p = self.positions
        u, v = self._diagonals(which)
        ou, ov = self._diagonals(1 - which)
        own = np.sqrt(((p[u] - p[v]) ** 2).sum(-1))
        other = np.sqrt(((p[ou] - p[ov]) ** 2).sum(-1))
        if np.any(own == 0.0) or np.any(other == 0.0):
            bad = int(np.argmax((own == 0.0) | (other == 0.0)))
            raise MapError(f"face {bad} has a zero-length diagonal")
        c = other / own
        ids = np.array(sorted(int(i) for i in np.where(self.colors == which)[0]), dtype=np.int64)
        g = WeightedGraph(ids, p[ids], u.astype(np.int64), v.astype(np.int64),
                          c, own, np.arange(self.n_faces, dtype=np.int64))
        self._caches[key] = g
        return g

    def extract_primal(self) -> WeightedGraph:
        return self.extract(PRIMAL)

    def extract_dual(self) -> WeightedGraph:
        return self.extract(DUAL)

    # -- serialization -------------------------------------------------------

    def to_json_dict(self, marked: Optional[Sequence[int]] = None) -> dict:
        verts = [{"id": int(i), "x": float(self.positions[i, 0]),
                  "y": float(self.positions[i, 1]),
                  "color": "primal" if self.colors[i] == PRIMAL else "dual"}
                 for i in range(self.n_vertices)]
        out = {"vertices": verts,
               "faces": [[int(x) for x in f] for f in self.faces],
               "boundary": [int(b) for b in self.boundary]}
        if marked is not None:
            out["marked"] = [int(x) for x in marked]
        return out

    @staticmethod
    def from_json_dict(d: dict) -> tuple["OrthodiagonalMap", Optional[list[int]]]:
        verts = d["vertices"]
        n = len(verts)
        pos = np.zeros((n, 2))
        col = np.zeros(n, dtype=np.int64)
        for rec in verts:
            i = int(rec["id"])
            pos[i] = (rec["x"], rec["y"])
            col[i] = PRIMAL if rec["color"] == "primal" else DUAL
        m = OrthodiagonalMap(pos, col, d["faces"], d["boundary"])
        marked = [int(x) for x in d["marked"]] if "marked" in d and d["marked"] else None
        return m, marked


def save_map(path: str, m: OrthodiagonalMap, marked: Optional[Sequence[int]] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(m.to_json_dict(marked), fh, indent=1)
        fh.write("\n")


def load_map(path: str) -> tuple[OrthodiagonalMap, Optional[list[int]]]:
    with open(path, encoding="utf-8") as fh:
        return OrthodiagonalMap.from_json_dict(json.load(fh))


def _triangle_contains(a, b, c, p, tol: float) -> bool:
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if det == 0.0:
        return False
    l1 = ((b[0] - p[0]) * (c[1] - p[1]) - (b[1] - p[1]) * (c[0] - p[0])) / det
    l2 = ((c[0] - p[0]) * (a[1] - p[1]) - (c[1] - p[1]) * (a[0] - p[0])) / det
    l3 = 1.0 - l1 - l2
    # a negative coordinate l_i means distance |l_i| |det| / |opposite side|
    # outside that side; convert tol to per-coordinate slack
    adet = abs(det)
    s1 = tol * np.hypot(c[0] - b[0], c[1] - b[1]) / adet
    s2 = tol * np.hypot(a[0] - c[0], a[1] - c[1]) / adet
    s3 = tol * np.hypot(b[0] - a[0], b[1] - a[1]) / adet
    return l1 >= -s1 and l2 >= -s2 and l3 >= -s3


def _simple_polygon_contains(corners: np.ndarray, p, tol: float) -> bool:
    ring = np.vstack([corners, corners[:1]])
    d = geom.points_to_segments_distance(np.asarray([p], dtype=float),
                                         ring[:-1], ring[1:])[0]
    if d <= tol:
        return True
    x, y = float(p[0]), float(p[1])
    n = len(corners)
    crossings = 0
    for i in range(n):
        x1, y1 = corners[i]
        x2, y2 = corners[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                crossings += 1
    return crossings % 2 == 1


class FaceLocator:
    """Uniform-hash point location over the faces of a map.

    locate(p) returns the lowest face id whose closed quadrilateral
    contains p (within tol), or None.
    """

    def __init__(self, m: OrthodiagonalMap, tol: Optional[float] = None):
        self.m = m
        q = m.positions[m.faces]
        self.fmin = q.min(axis=1)
        self.fmax = q.max(axis=1)
        self.cell = max(m.mesh_eps * 2.0, 1e-12)
        self.tol = tol if tol is not None else 1e-12 * max(1.0, m.mesh_eps)
        buckets: dict[tuple[int, int], list[int]] = {}
        lo = np.floor(self.fmin / self.cell).astype(int)
        hi = np.floor(self.fmax / self.cell).astype(int)
        for fi in range(m.n_faces):
            for gx in range(lo[fi, 0], hi[fi, 0] + 1):
                for gy in range(lo[fi, 1], hi[fi, 1] + 1):
                    buckets.setdefault((gx, gy), []).append(fi)
        self.buckets = buckets

    def face_contains(self, fi: int, p) -> bool:
        corners = self.m.positions[self.m.faces[fi]]
        if _quad_is_convex(corners):
            return (_triangle_contains(corners[0], corners[1], corners[2], p, self.tol)
                    or _triangle_contains(corners[0], corners[2], corners[3], p, self.tol))
        return _simple_polygon_contains(corners, p, self.tol)

    def locate(self, p) -> Optional[int]:
        import math as _math
        gx = int(_math.floor(p[0] / self.cell))
        gy = int(_math.floor(p[1] / self.cell))
        for fi in sorted(self.buckets.get((gx, gy), [])):
            if (self.fmin[fi, 0] - self.tol <= p[0] <= self.fmax[fi, 0] + self.tol
                    and self.fmin[fi, 1] - self.tol <= p[1] <= self.fmax[fi, 1] + self.tol
                    and self.face_contains(fi, p)):
                return fi
        return None


# -- validation ---------------------------------------------------------------


def _quad_is_convex(q: np.ndarray) -> bool:
    cross = []
    for k in range(4):
        a, b, c = q[k], q[(k + 1) % 4], q[(k + 2) % 4]
        cross.append((b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]))
    cross = np.array(cross)
    return bool(np.all(cross > 0) or np.all(cross < 0))


def validate(m: OrthodiagonalMap) -> ValidationReport:
    """Check every structural invariant; returns a report, never raises.

    Reported violations: color alternation, diagonal orthogonality,
    face orientation, Euler characteristic / boundary simplicity,
    boundary-cycle consistency and the stored mesh_eps.  Non-convex faces
    are recorded separately (they are legal) because the area identity
    Area = |e_primal||e_dual| / 2 only holds when the diagonals cross.
    """
    rep = ValidationReport()
    p = m.positions

    for fi, f in enumerate(m.faces):
        cols = [int(m.colors[v]) for v in f]
        if cols != [PRIMAL, DUAL, PRIMAL, DUAL]:
            rep.add("color-alternation", (fi,), 0.0,
                    f"face {fi} colors {cols} do not alternate primal/dual")
            continue
        d1 = p[f[2]] - p[f[0]]
        d2 = p[f[3]] - p[f[1]]
        n1, n2 = np.hypot(*d1), np.hypot(*d2)
        if n1 == 0.0 or n2 == 0.0:
            rep.add("degenerate-diagonal", (fi,), 0.0, f"face {fi} has a zero-length diagonal")
            continue
        dot = abs(float(d1 @ d2))
        if dot > TOL_ORTH * n1 * n2:
            rep.add("orthogonality", (fi,), dot / (n1 * n2),
                    f"face {fi} diagonals meet at |cos|={dot / (n1 * n2):.3e}")
        q = p[f]
        if geom.signed_area(q) <= 0:
            rep.add("orientation", (fi,), float(geom.signed_area(q)),
                    f"face {fi} is not counterclockwise")
        if not _quad_is_convex(q):
            rep.nonconvex_faces.append(fi)

    used = sorted({int(v) for f in m.faces for v in f})
    if len(used) != m.n_vertices:
        rep.add("unused-vertices", tuple(set(range(m.n_vertices)) - set(used)), 0.0,
                "vertices not incident to any face")

    n_e = len(m.side_edges())
    euler = m.n_vertices - n_e + (m.n_faces + 1)
    if euler != 2:
        rep.add("euler", (), float(euler),
                f"V - E + F = {euler} != 2; map is not simply connected")

    bset = m.boundary_edge_set()
    cyc = m.boundary
    if len(set(cyc)) != len(cyc):
        rep.add("boundary-not-simple", (), 0.0, "boundary cycle repeats a vertex")
    cyc_edges = {(min(cyc[i], cyc[(i + 1) % len(cyc)]), max(cyc[i], cyc[(i + 1) % len(cyc)]))
                 for i in range(len(cyc))} if cyc else set()
    if cyc_edges != bset:
        rep.add("boundary-mismatch", (), float(len(cyc_edges ^ bset)),
                "stored boundary cycle does not match the once-used face sides")
    else:
        ring = m.boundary_polyline()
        if geom.signed_area(ring[:-1]) <= 0:
            rep.add("boundary-orientation", (), 0.0, "boundary cycle is not counterclockwise")

    recomputed = m._recompute_mesh_eps()
    if abs(recomputed - m.mesh_eps) > 1e-12 * max(1.0, recomputed):
        rep.add("mesh-eps", (), abs(recomputed - m.mesh_eps),
                f"stored mesh_eps {m.mesh_eps} != recomputed {recomputed}")
    return rep


# -- marked maps ---------------------------------------------------------------


class MarkedRectangleMap:
    """OrthodiagonalMap with four marked primal boundary vertices A, B, C, D
    in counterclockwise boundary order, and the four derived arcs.

    arc_ab / arc_cd: primal vertices along the ccw boundary path from A to B
    (resp. C to D), endpoints included.  arc_bc / arc_da: dual vertices
    strictly between B and C (resp. D and A).
    """

    def __init__(self, m: OrthodiagonalMap, marked: Sequence[int]):
        self.map = m
        self.marked = tuple(int(x) for x in marked)
        if len(self.marked) != 4 or len(set(self.marked)) != 4:
            raise MapError("need four distinct marked vertices")
        for v in self.marked:
            if m.colors[v] != PRIMAL:
                raise MapError(f"marked vertex {v} is not primal")
            if v not in m.boundary:
                raise MapError(f"marked vertex {v} is not on the boundary")
        pos = {v: m.boundary.index(v) for v in self.marked}
        a, b, c, d = self.marked
        nb = len(m.boundary)
        order = sorted(self.marked, key=lambda v: (pos[v] - pos[a]) % nb)
        if order != [a, b, c, d]:
            raise MapError("marked vertices are not in counterclockwise order")
        self.arc_ab = self._primal_arc(a, b)
        self.arc_cd = self._primal_arc(c, d)
        self.arc_bc = self._dual_arc(b, c)
        self.arc_da = self._dual_arc(d, a)

    def _walk(self, start: int, stop: int) -> list[int]:
        cyc = self.map.boundary
        nb = len(cyc)
        i = cyc.index(start)
        out = [start]
        while cyc[i] != stop:
            i = (i + 1) % nb
            out.append(cyc[i])
        return out

    def _primal_arc(self, start: int, stop: int) -> list[int]:
        return [v for v in self._walk(start, stop) if self.map.colors[v] == PRIMAL]

    def _dual_arc(self, start: int, stop: int) -> list[int]:
        return [v for v in self._walk(start, stop)[1:-1] if self.map.colors[v] == DUAL]

    def boundary_arcs(self) -> tuple[list[int], list[int], list[int], list[int]]:
        """(arc_ab, arc_bc_dual, arc_cd, arc_da_dual), recomputed."""
        a, b, c, d = self.marked
        return (self._primal_arc(a, b), self._dual_arc(b, c),
                self._primal_arc(c, d), self._dual_arc(d, a))

    def boundary_chain(self, start: int, stop: int) -> np.ndarray:
        """Positions of all boundary vertices from start to stop, ccw."""
        return self.map.positions[np.array(self._walk(start, stop), dtype=np.int64)]

    def arc_chains(self) -> list[np.ndarray]:
        """Boundary chains [A..B], [B..C], [C..D], [D..A] as polylines."""
        a, b, c, d = self.marked
        return [self.boundary_chain(a, b), self.boundary_chain(b, c),
                self.boundary_chain(c, d), self.boundary_chain(d, a)]
