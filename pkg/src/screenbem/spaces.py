"""Discontinuous and conforming hp spaces on a rectangle mesh.

The discontinuous space stacks the tensor-Legendre modal basis panel by
panel.  The conforming zero-trace space is realized as an explicit sparse
embedding matrix into the discontinuous space, built from 1D C^0 factors
(vertex hats plus interval bubbles P~_k - P~_{k-2}).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import basis
from .mesh import Mesh

DISCONTINUOUS = "discontinuous"
CONFORMING = "conforming_zero_trace"


@dataclass(frozen=True)
class BasisValue:
    value: float
    curl: np.ndarray


@dataclass(frozen=True, eq=False)
class HpSpace:
    """Discontinuous hp space with per-panel degrees and a global dof map."""

    mesh: Mesh
    degrees: np.ndarray         # (npanels,)
    dof_offsets: np.ndarray     # (npanels + 1,)
    kind: str = DISCONTINUOUS

    @property
    def total_dofs(self) -> int:
        return int(self.dof_offsets[-1])

    def panel_dofs(self, q: int) -> np.ndarray:
        return np.arange(self.dof_offsets[q], self.dof_offsets[q + 1])

    def local_dim(self, q: int) -> int:
        return (int(self.degrees[q]) + 1) ** 2

    def eval_on_panel(self, q: int, ref_points, coeffs) -> np.ndarray:
        """Evaluate the expansion on panel q at reference points."""
        p = int(self.degrees[q])
        V = basis.tensor_vals(ref_points, p)
        return V @ np.asarray(coeffs)[self.panel_dofs(q)]


@dataclass(frozen=True, eq=False)
class ConformingSpace:
    """C^0 tensor space with zero boundary trace, as an embedding.

    ``embedding`` maps conforming coefficients to coefficients of the
    matching discontinuous space (uniform degree).
    """

    mesh: Mesh
    degree: int
    dg_space: HpSpace
    embedding: sp.csr_matrix    # (dg dofs, conforming dofs)

    @property
    def total_dofs(self) -> int:
        return self.embedding.shape[1]

    kind: str = CONFORMING


def eval_local_basis(p: int, ref_point) -> list[BasisValue]:
    """Reference basis values and reference curls at one point.

    Physical curls on a panel of side L are these scaled by 1/L (chain rule
    through the affine panel map); that scaling is up to the caller.
    """
    if p < 0:
        raise ValueError("degree must be nonnegative")
    vals, curls = basis.tensor_vals_curls(np.atleast_2d(ref_point), p)
    return [BasisValue(float(v), c) for v, c in zip(vals[0], curls[0])]


def build_space(mesh: Mesh, degrees, kind: str = DISCONTINUOUS):
    """Build a discontinuous or conforming hp space on the mesh."""
    degrees = np.broadcast_to(np.asarray(degrees, dtype=int),
                              (mesh.num_panels,)).copy()
    if np.any(degrees < 0):
        raise ValueError("polynomial degrees must be nonnegative")
    if kind == DISCONTINUOUS:
        dims = (degrees + 1) ** 2
        offsets = np.concatenate([[0], np.cumsum(dims)])
        return HpSpace(mesh, degrees, offsets)
    if kind == CONFORMING:
        if np.any(degrees != degrees[0]):
            raise ValueError("conforming space requires a uniform degree")
        if mesh.grid_n is None:
            raise ValueError("conforming space requires a uniform grid mesh")
        p = int(degrees[0])
        if p < 1:
            raise ValueError("conforming space requires degree >= 1")
        dg = build_space(mesh, degrees, DISCONTINUOUS)
        E = _conforming_embedding(mesh.grid_n, p, dg)
        return ConformingSpace(mesh, p, dg, E)
    raise ValueError(f"unknown space kind: {kind}")


def _segment_coeff_table(p: int):
    """Legendre coefficients of the 1D C^0 shape functions on one interval.

    Columns: left hat (1-t), right hat (t), bubbles P~_k - P~_{k-2} for
    k = 2..p.  Shape (p+1, p+1).
    """
    G = np.zeros((p + 1, p + 1))
    G[0, 0], G[1, 0] = 0.5, -0.5        # 1 - t
    G[0, 1], G[1, 1] = 0.5, 0.5         # t
    for k in range(2, p + 1):
        G[k, k] = 1.0
        G[k - 2, k] = -1.0
    return G


def _conforming_dofs_1d(n: int, p: int):
    """Global ids of the active 1D functions per interval (-1 = removed).

    1D dof layout with zero endpoint values: interior hats 0..n-2, then
    bubbles interval-major.  Returns an (n, p+1) id array.
    """
    ids = -np.ones((n, p + 1), dtype=int)
    for e in range(n):
        if e > 0:
            ids[e, 0] = e - 1            # left hat = node e
        if e < n - 1:
            ids[e, 1] = e                # right hat = node e+1
        for k in range(2, p + 1):
            ids[e, k] = (n - 1) + e * (p - 1) + (k - 2)
    return ids


def _conforming_embedding(n: int, p: int, dg: HpSpace) -> sp.csr_matrix:
    n1d = n * p - 1
    ids1d = _conforming_dofs_1d(n, p)
    G = _segment_coeff_table(p)
    rows, cols, vals = [], [], []
    m1 = p + 1
    for iy in range(n):
        for ix in range(n):
            q = iy * n + ix
            base = dg.dof_offsets[q]
            for l1 in range(m1):
                g1 = ids1d[ix, l1]
                if g1 < 0:
                    continue
                for l2 in range(m1):
                    g2 = ids1d[iy, l2]
                    if g2 < 0:
                        continue
                    conf = g1 * n1d + g2
                    # coefficients of u(x1), v(x2) product in tensor basis
                    c = np.outer(G[:, l1], G[:, l2]).ravel()
                    nz = np.nonzero(c)[0]
                    rows.extend(base + nz)
                    cols.extend([conf] * len(nz))
                    vals.extend(c[nz])
    return sp.csr_matrix((vals, (rows, cols)),
                         shape=(dg.total_dofs, n1d * n1d))


def edge_ref_coords(mesh: Mesh, edge, q: int, s):
    """Reference coordinates in panel q of edge points at parameters s.

    s runs in [0,1] along the canonical edge direction.
    """
    start, direction, length = mesh.edge_geometry(edge)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    pts = start[None, :] + (s[:, None] * length) * direction[None, :]
    origin, size = mesh.panel_rect(q)
    return (pts - origin) / size


def panel_side_of_edge(mesh: Mesh, edge, q: int) -> str:
    """Which side of panel q the edge lies on (bottom/top/left/right)."""
    origin, size = mesh.panel_rect(q)
    start, direction, _ = mesh.edge_geometry(edge)
    if abs(direction[0]) > abs(direction[1]):   # horizontal edge
        if np.isclose(start[1], origin[1]):
            return "bottom"
        if np.isclose(start[1], origin[1] + size[1]):
            return "top"
    else:
        if np.isclose(start[0], origin[0]):
            return "left"
        if np.isclose(start[0], origin[0] + size[0]):
            return "right"
    raise ValueError("edge does not lie on the boundary of the panel")


def eval_jump(space: HpSpace, edge, s, coeffs) -> np.ndarray:
    """Jump of the expansion across an edge at parameters s in [0,1].

    Interior edges: trace from the owner minus trace from the neighbor.
    Boundary edges: the trace itself (open-screen convention).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    ref = edge_ref_coords(space.mesh, edge, edge.owner, s)
    jump = space.eval_on_panel(edge.owner, ref, coeffs)
    if edge.neighbor is not None:
        ref2 = edge_ref_coords(space.mesh, edge, edge.neighbor, s)
        jump = jump - space.eval_on_panel(edge.neighbor, ref2, coeffs)
    return jump
