"""Quadrilateral meshes of a planar screen with oriented edge topology.

Panels are axis-aligned rectangles (squares for the uniform mesh), stored
counter-clockwise.  Every edge carries a fixed orientation: its tangent is
the one induced by the boundary orientation of the owner panel, where the
owner is the adjacent panel with the smaller index.  For boundary edges this
coincides with the positively oriented tangent of the screen boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

IDENTICAL = "identical"
COMMON_EDGE = "common_edge"
COMMON_VERTEX = "common_vertex"
DISJOINT = "disjoint"


@dataclass(frozen=True)
class Edge:
    """Mesh edge with fixed orientation.

    ``endpoints`` are stored so that the segment runs in the direction of
    increasing coordinate; ``tangent`` is the unit tangent induced by the
    owner panel and may point either way along the segment.
    """

    endpoints: tuple[int, int]
    owner: int
    neighbor: int | None
    tangent: np.ndarray
    is_boundary: bool

    @property
    def panels(self) -> tuple[int, ...]:
        if self.neighbor is None:
            return (self.owner,)
        return (self.owner, self.neighbor)


@dataclass(frozen=True)
class PairClass:
    tag: str
    shared_vertices: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming rectangle mesh of a planar screen.

    Immutable after construction; all evaluation helpers are pure.
    """

    vertices: np.ndarray          # (nv, 2)
    panels: np.ndarray            # (npanels, 4), CCW vertex indices
    edges: tuple[Edge, ...]
    h: float
    grid_n: int | None = None     # set for uniform n x n meshes
    _rects: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        rects = np.empty((len(self.panels), 4))
        for q, quad in enumerate(self.panels):
            pts = self.vertices[quad]
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            rects[q, :2] = lo
            rects[q, 2:] = hi - lo
        object.__setattr__(self, "_rects", rects)

    @property
    def num_panels(self) -> int:
        return len(self.panels)

    def panel_rect(self, q: int) -> tuple[np.ndarray, np.ndarray]:
        """Origin and side lengths of panel q (panels are axis-aligned)."""
        r = self._rects[q]
        return r[:2], r[2:]

    def panel_area(self, q: int) -> float:
        _, size = self.panel_rect(q)
        return float(size[0] * size[1])

    def panel_diameter(self, q: int) -> float:
        _, size = self.panel_rect(q)
        return float(np.hypot(size[0], size[1]))

    def edge_geometry(self, e: Edge) -> tuple[np.ndarray, np.ndarray, float]:
        """Start point, unit direction (canonical, endpoint order) and length."""
        a = self.vertices[e.endpoints[0]]
        b = self.vertices[e.endpoints[1]]
        d = b - a
        length = float(np.hypot(*d))
        return a, d / length, length

    def induced_tangent(self, q: int, e: Edge) -> np.ndarray:
        """Unit tangent on edge e induced by the CCW boundary of panel q."""
        quad = list(self.panels[q])
        directed = [(quad[k], quad[(k + 1) % 4]) for k in range(4)]
        u, v = e.endpoints
        if (u, v) in directed:
            d = self.vertices[v] - self.vertices[u]
        elif (v, u) in directed:
            d = self.vertices[u] - self.vertices[v]
        else:
            raise ValueError(f"edge {e.endpoints} is not an edge of panel {q}")
        return d / np.hypot(*d)

    def with_swapped_interior_owners(self) -> "Mesh":
        """Copy of the mesh with Q1/Q2 exchanged on every interior edge.

        Used to check that the discrete solution does not depend on the
        arbitrary-but-fixed edge orientation.
        """
        flipped = []
        for e in self.edges:
            if e.is_boundary:
                flipped.append(e)
            else:
                flipped.append(Edge(e.endpoints, e.neighbor, e.owner,
                                    -e.tangent, False))
        return Mesh(self.vertices, self.panels, tuple(flipped), self.h,
                    grid_n=self.grid_n)

    def to_json(self) -> str:
        """Mesh summary (vertices, panels, edges with orientation) as JSON."""
        return json.dumps({
            "vertices": self.vertices.tolist(),
            "panels": self.panels.tolist(),
            "h": self.h,
            "edges": [{
                "endpoints": list(e.endpoints),
                "owner": e.owner,
                "neighbor": e.neighbor,
                "tangent": e.tangent.tolist(),
                "is_boundary": e.is_boundary,
            } for e in self.edges],
        }, indent=2)


def build_uniform_square_mesh(n: int) -> Mesh:
    """Uniform n x n mesh of congruent squares on the unit square screen."""
    if n < 1:
        raise ValueError(f"mesh parameter must be a positive integer, got {n}")
    xs = np.linspace(0.0, 1.0, n + 1)
    vid = lambda ix, iy: iy * (n + 1) + ix
    vertices = np.array([[xs[ix], xs[iy]]
                         for iy in range(n + 1) for ix in range(n + 1)])
    panels = np.array([[vid(ix, iy), vid(ix + 1, iy),
                        vid(ix + 1, iy + 1), vid(ix, iy + 1)]
                       for iy in range(n) for ix in range(n)])
    pid = lambda ix, iy: iy * n + ix

    edges = []
    # horizontal edges: between panel below and panel above
    for iy in range(n + 1):
        for ix in range(n):
            below = pid(ix, iy - 1) if iy > 0 else None
            above = pid(ix, iy) if iy < n else None
            adj = sorted(q for q in (below, above) if q is not None)
            owner, neighbor = adj[0], (adj[1] if len(adj) == 2 else None)
            edges.append(_make_edge(vertices, panels,
                                    (vid(ix, iy), vid(ix + 1, iy)),
                                    owner, neighbor))
    # vertical edges: between panel left and panel right
    for iy in range(n):
        for ix in range(n + 1):
            left = pid(ix - 1, iy) if ix > 0 else None
            right = pid(ix, iy) if ix < n else None
            adj = sorted(q for q in (left, right) if q is not None)
            owner, neighbor = adj[0], (adj[1] if len(adj) == 2 else None)
            edges.append(_make_edge(vertices, panels,
                                    (vid(ix, iy), vid(ix, iy + 1)),
                                    owner, neighbor))

    h = float(np.sqrt(2.0) / n)
    return Mesh(vertices, panels, tuple(edges), h, grid_n=n)


def _make_edge(vertices, panels, endpoints, owner, neighbor):
    quad = list(panels[owner])
    directed = [(quad[k], quad[(k + 1) % 4]) for k in range(4)]
    u, v = endpoints
    if (u, v) in directed:
        d = vertices[v] - vertices[u]
    else:
        d = vertices[u] - vertices[v]
    tangent = d / np.hypot(*d)
    return Edge((u, v), owner, neighbor, tangent, neighbor is None)


def classify_pair(mesh: Mesh, a: int, b: int) -> PairClass:
    """Adjacency class of an ordered panel pair."""
    if not (0 <= a < mesh.num_panels and 0 <= b < mesh.num_panels):
        raise IndexError(f"panel index out of range: ({a}, {b})")
    if a == b:
        return PairClass(IDENTICAL, tuple(mesh.panels[a]))
    shared = tuple(sorted(set(mesh.panels[a]) & set(mesh.panels[b])))
    if len(shared) == 2:
        return PairClass(COMMON_EDGE, shared)
    if len(shared) == 1:
        return PairClass(COMMON_VERTEX, shared)
    return PairClass(DISJOINT)


def panel_map(mesh: Mesh, q: int, ref_point) -> np.ndarray:
    """Map a reference-square point to panel q (affine for rectangles)."""
    origin, size = mesh.panel_rect(q)
    ref = np.asarray(ref_point, dtype=float)
    return origin + ref * size
