"""Quadrature for weakly singular double integrals with the 1/(4*pi*r) kernel.

Panel-panel integrals  I = int_B int_A f(y) g(x) / (4 pi |x-y|) dy dx  and
edge-panel integrals   I = int_e int_A f(y) g(x(s)) / (4 pi |x(s)-y|) dy ds
are computed in relative coordinates z = y - x.  After integrating x (resp.
the edge parameter s) over the overlap interval, the remaining z-integral
carries the kernel 1/(4 pi |z|); the z-domain is split at the kinks of the
overlap lengths and Duffy (corner) transforms remove the singularity at
z = 0, so the transformed integrands are analytic and Gauss quadrature
converges exponentially in the order.

All geometry is restricted to coplanar axis-aligned rectangles, which covers
every mesh built by this package.  Polynomial factors are represented by
their tensor shifted-Legendre coefficients; the node-level entry points
return full moment matrices over all basis pairs, which assembly contracts
with coefficient transforms.
"""

from __future__ import annotations

import numpy as np

from . import basis
from .mesh import Mesh, classify_pair, DISJOINT

FOUR_PI = 4.0 * np.pi

# moment-matrix caches keyed by quantized relative geometry; idempotent
# recomputation makes plain dict access safe under threading
_PAIR_CACHE: dict = {}
_EDGE_CACHE: dict = {}


def clear_cache():
    _PAIR_CACHE.clear()
    _EDGE_CACHE.clear()


def _key(*parts):
    out = []
    for p in parts:
        if isinstance(p, (float, np.floating)):
            out.append(round(float(p), 12))
        elif isinstance(p, np.ndarray):
            out.extend(round(float(v), 12) for v in p)
        else:
            out.append(p)
    return tuple(out)


def rect_distance(rect_a, rect_b) -> float:
    """Distance between two axis-aligned rectangles (origin, size) pairs."""
    (oa, sa), (ob, sb) = rect_a, rect_b
    gap = np.maximum(0.0, np.maximum(oa - (ob + sb), ob - (oa + sa)))
    return float(np.hypot(*gap))


def scaled_order(order: int, dist: float, diam: float, theta: float = 1.0) -> int:
    """Reduced Gauss order for well-separated pairs.

    Keeps the full order up to dist = theta * diam and lowers it slowly with
    distance; the 1/r kernel gets smoother as pairs separate, so accuracy at
    the reduced order matches the near-field accuracy at the full order.
    """
    if dist <= theta * diam:
        return order
    return max(3, int(np.ceil(order / (1.0 + 0.5 * np.log2(dist / (theta * diam))))))


def _breakpoints(lo: float, hi: float, kinks) -> np.ndarray:
    pts = [lo, hi]
    for k in kinks:
        if lo + 1e-14 < k < hi - 1e-14:
            pts.append(k)
    if lo + 1e-14 < 0.0 < hi - 1e-14:
        pts.append(0.0)
    return np.array(sorted(set(pts)))


def _duffy_corner_nodes(c1, c2, q):
    """Nodes/weights for int over [min(c1)..] x [..] of G(z)/(4 pi |z|) dz
    on a rectangle with the origin at one corner.

    c1, c2 are the (signed) extents: the cell is the box spanned by 0 and
    (c1, c2).  Returns (z nodes (M,2), weights (M,) including the kernel).
    """
    g, w = basis.gauss_01(q)
    U, V = np.meshgrid(g, g, indexing="ij")
    WU = np.outer(w, w)
    zs, ws = [], []
    # triangle 1: z1 = c1*u, z2 = c2*u*v ; |J| = |c1 c2| u, |z| = u*sqrt(c1^2 + c2^2 v^2)
    r1 = np.sqrt(c1 * c1 + c2 * c2 * V * V)
    zs.append(np.stack([c1 * U, c2 * U * V], axis=-1).reshape(-1, 2))
    ws.append((abs(c1 * c2) * WU / (FOUR_PI * r1)).ravel())
    # triangle 2: roles of the axes swapped
    r2 = np.sqrt(c2 * c2 + c1 * c1 * V * V)
    zs.append(np.stack([c1 * U * V, c2 * U], axis=-1).reshape(-1, 2))
    ws.append((abs(c1 * c2) * WU / (FOUR_PI * r2)).ravel())
    return np.concatenate(zs), np.concatenate(ws)


def _plain_cell_nodes(b1, b2, q):
    """Tensor Gauss nodes for a z-cell away from the origin, kernel included."""
    g, w = basis.gauss_01(q)
    z1 = b1[0] + (b1[1] - b1[0]) * g
    z2 = b2[0] + (b2[1] - b2[0]) * g
    Z1, Z2 = np.meshgrid(z1, z2, indexing="ij")
    W = np.outer(w, w) * (b1[1] - b1[0]) * (b2[1] - b2[0])
    z = np.stack([Z1, Z2], axis=-1).reshape(-1, 2)
    r = np.hypot(z[:, 0], z[:, 1])
    return z, W.ravel() / (FOUR_PI * r)


def _z_cells(bounds1, bounds2, kinks1, kinks2):
    """Subdivide the z-domain at kinks (and the origin) into cells.

    Yields (cell1, cell2, singular) where singular flags cells with the
    origin at one corner.
    """
    bp1 = _breakpoints(bounds1[0], bounds1[1], kinks1)
    bp2 = _breakpoints(bounds2[0], bounds2[1], kinks2)
    for i in range(len(bp1) - 1):
        for j in range(len(bp2) - 1):
            c1 = (bp1[i], bp1[i + 1])
            c2 = (bp2[j], bp2[j + 1])
            singular = (min(abs(c1[0]), abs(c1[1])) < 1e-14
                        and min(abs(c2[0]), abs(c2[1])) < 1e-14)
            yield c1, c2, singular


def _singular_z_nodes(bounds1, bounds2, kinks1, kinks2, q):
    """z-nodes and kernel-weighted weights over the whole z-domain."""
    zs, ws = [], []
    for c1, c2, singular in _z_cells(bounds1, bounds2, kinks1, kinks2):
        if singular:
            a1 = c1[0] if abs(c1[0]) > abs(c1[1]) else c1[1]
            a2 = c2[0] if abs(c2[0]) > abs(c2[1]) else c2[1]
            z, w = _duffy_corner_nodes(a1, a2, q)
        else:
            z, w = _plain_cell_nodes(c1, c2, q)
        zs.append(z)
        ws.append(w)
    return np.concatenate(zs), np.concatenate(ws)


def _inner_order(deg_a: int, deg_b: int) -> int:
    # exact for the polynomial inner integrand of degree deg_a + deg_b
    return max(2, (deg_a + deg_b) // 2 + 1)


def panel_pair_nodes(rect_a, rect_b, order: int, inner_order: int):
    """Quadrature nodes (y, x, w) for a coplanar rectangle pair.

    y runs over rect_a, x over rect_b; weights include the kernel factor.
    Touching or overlapping pairs get the regularized relative-coordinate
    rule, separated pairs a plain tensor rule.
    """
    (oa, sa), (ob, sb) = rect_a, rect_b
    if rect_distance(rect_a, rect_b) > 1e-14:
        g, w = basis.gauss_01(order)
        ya = oa[None, :] + np.stack(np.meshgrid(sa[0] * g, sa[1] * g,
                                                indexing="ij"), -1).reshape(-1, 2)
        xb = ob[None, :] + np.stack(np.meshgrid(sb[0] * g, sb[1] * g,
                                                indexing="ij"), -1).reshape(-1, 2)
        wa = np.outer(w, w).ravel() * sa[0] * sa[1]
        wb = np.outer(w, w).ravel() * sb[0] * sb[1]
        Y = np.repeat(ya, len(xb), axis=0)
        X = np.tile(xb, (len(ya), 1))
        W = np.outer(wa, wb).ravel()
        r = np.hypot(Y[:, 0] - X[:, 0], Y[:, 1] - X[:, 1])
        return Y, X, W / (FOUR_PI * r)

    bounds = [(oa[d] - (ob[d] + sb[d]), (oa[d] + sa[d]) - ob[d]) for d in (0, 1)]
    kinks = [(oa[d] - ob[d], (oa[d] + sa[d]) - (ob[d] + sb[d])) for d in (0, 1)]
    z, wz = _singular_z_nodes(bounds[0], bounds[1], kinks[0], kinks[1], order)

    # inner x-integral over the overlap rectangle, bounds linear in z
    lo = np.maximum(ob[None, :], oa[None, :] - z)
    hi = np.minimum(ob[None, :] + sb[None, :], oa[None, :] + sa[None, :] - z)
    g, w = basis.gauss_01(inner_order)
    span = hi - lo                                     # (M, 2)
    x1 = lo[:, None, 0] + span[:, None, 0] * g[None, :]
    x2 = lo[:, None, 1] + span[:, None, 1] * g[None, :]
    X = np.stack([np.repeat(x1, inner_order, axis=1),
                  np.tile(x2, (1, inner_order))], axis=-1)   # (M, qin^2, 2)
    Wx = (span[:, 0] * span[:, 1])[:, None] * np.outer(w, w).ravel()[None, :]
    Y = X + z[:, None, :]
    W = wz[:, None] * Wx
    return Y.reshape(-1, 2), X.reshape(-1, 2), W.ravel()


def panel_pair_moments(rect_a, rect_b, deg_a: int, deg_b: int,
                       order: int) -> np.ndarray:
    """Moment matrix M[alpha, beta] over tensor-Legendre basis pairs.

    M[alpha, beta] = int_B int_A T_alpha(yhat) T_beta(xhat) / (4 pi |x-y|),
    with yhat, xhat the panel-local reference coordinates.
    """
    key = _key("pp", rect_a[0] - rect_b[0], rect_a[1], rect_b[1],
               deg_a, deg_b, order)
    hit = _PAIR_CACHE.get(key)
    if hit is not None:
        return hit
    Y, X, W = panel_pair_nodes(rect_a, rect_b, order,
                               _inner_order(deg_a, deg_b))
    Pa = basis.tensor_vals((Y - rect_a[0]) / rect_a[1], deg_a)
    Pb = basis.tensor_vals((X - rect_b[0]) / rect_b[1], deg_b)
    M = Pa.T @ (W[:, None] * Pb)
    _PAIR_CACHE[key] = M
    return M


def edge_panel_nodes(start, axis: int, length: float, rect_a,
                     order: int, inner_order: int):
    """Quadrature nodes (y, s, w) for an edge-panel pair.

    The edge runs from `start` along coordinate `axis`; s in [0, length] is
    the arclength parameter, y runs over rect_a.  Weights include the kernel.
    """
    oa, sa = rect_a
    t, u = axis, 1 - axis
    c = start[u]
    # z_t = y_t - start_t - s, z_u = y_u - c
    bt = (oa[t] - start[t] - length, oa[t] + sa[t] - start[t])
    bu = (oa[u] - c, oa[u] + sa[u] - c)
    kt = (oa[t] - start[t], oa[t] + sa[t] - start[t] - length)

    if max(bt[0], bu[0]) > 1e-14 or min(bt[1], bu[1]) < -1e-14:
        # origin outside the z-domain: edge and panel are separated
        g, w = basis.gauss_01(order)
        s = length * g
        ws = length * w
        ya = oa[None, :] + np.stack(np.meshgrid(sa[0] * g, sa[1] * g,
                                                indexing="ij"), -1).reshape(-1, 2)
        wy = np.outer(w, w).ravel() * sa[0] * sa[1]
        Y = np.repeat(ya, len(s), axis=0)
        S = np.tile(s, len(ya))
        X = np.empty((len(S), 2))
        X[:, t] = start[t] + S
        X[:, u] = c
        W = np.outer(wy, ws).ravel()
        r = np.hypot(Y[:, 0] - X[:, 0], Y[:, 1] - X[:, 1])
        return Y, S, W / (FOUR_PI * r)

    z, wz = _singular_z_nodes(bt, bu, kt, (), order)
    lo = np.maximum(0.0, oa[t] - start[t] - z[:, 0])
    hi = np.minimum(length, oa[t] + sa[t] - start[t] - z[:, 0])
    g, w = basis.gauss_01(inner_order)
    span = hi - lo
    S = lo[:, None] + span[:, None] * g[None, :]       # (M, qin)
    Ws = span[:, None] * w[None, :]
    Y = np.empty(S.shape + (2,))
    Y[:, :, t] = start[t] + S + z[:, 0:1]
    Y[:, :, u] = c + z[:, 1:2]
    W = wz[:, None] * Ws
    return Y.reshape(-1, 2), S.ravel(), W.ravel()


def edge_panel_moments(start, axis: int, length: float, rect_a,
                       deg_a: int, deg_e: int, order: int) -> np.ndarray:
    """Moment matrix R[d, alpha] for an edge-panel pair.

    R[d, alpha] = int_e int_A T_alpha(yhat) P~_d(s/len) / (4 pi |x(s)-y|),
    the edge parametrized canonically along its axis.
    """
    key = _key("ep", axis, rect_a[0] - start, length, rect_a[1],
               deg_a, deg_e, order)
    hit = _EDGE_CACHE.get(key)
    if hit is not None:
        return hit
    Y, S, W = edge_panel_nodes(start, axis, length, rect_a, order,
                               _inner_order(deg_a, deg_e))
    Pa = basis.tensor_vals((Y - rect_a[0]) / rect_a[1], deg_a)
    Pe = basis.legendre_vals(S / length, deg_e)
    R = Pe.T @ (W[:, None] * Pa)
    _EDGE_CACHE[key] = R
    return R


def integrate_panel_pair(mesh: Mesh, a: int, b: int, coef_f, coef_g,
                         order: int) -> float:
    """Weakly singular double integral over a panel pair.

    coef_f and coef_g are tensor shifted-Legendre coefficients of the local
    polynomials on panels a (inner, y) and b (outer, x); arrays of shape
    (p+1, p+1) with index [deg_x1, deg_x2].
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    coef_f = np.asarray(coef_f, dtype=float)
    coef_g = np.asarray(coef_g, dtype=float)
    ra, rb = mesh.panel_rect(a), mesh.panel_rect(b)
    for rect in (ra, rb):
        if min(rect[1]) <= 0.0:
            raise ValueError("degenerate panel geometry")
    M = panel_pair_moments(ra, rb, coef_f.shape[0] - 1, coef_g.shape[0] - 1,
                           order)
    return float(coef_f.ravel() @ M @ coef_g.ravel())


def integrate_edge_panel(mesh: Mesh, edge, a: int, coef_f, coef_g,
                         order: int) -> float:
    """Weakly singular integral over an edge-panel pair.

    coef_f: tensor coefficients of the polynomial on panel a (y variable);
    coef_g: 1D shifted-Legendre coefficients on the edge, canonical
    parametrization.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    coef_f = np.asarray(coef_f, dtype=float)
    coef_g = np.asarray(coef_g, dtype=float)
    start, direction, length = mesh.edge_geometry(edge)
    axis = 0 if abs(direction[0]) > abs(direction[1]) else 1
    ra = mesh.panel_rect(a)
    if min(ra[1]) <= 0.0 or length <= 0.0:
        raise ValueError("degenerate geometry")
    R = edge_panel_moments(start, axis, length, ra,
                           coef_f.shape[0] - 1, len(coef_g) - 1, order)
    return float(coef_g @ R @ coef_f.ravel())
