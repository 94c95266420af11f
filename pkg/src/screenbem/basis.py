"""Shifted-Legendre modal basis on the reference square [0,1]^2.

The local basis of degree p is the tensor product
``phi_(a,b)(xi) = P~_a(xi_1) * P~_b(xi_2)`` where ``P~_k(t) = P_k(2t-1)``
is the Legendre polynomial shifted to [0,1].  Local index ordering is
``a * (p+1) + b``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg


@lru_cache(maxsize=None)
def gauss_01(q: int):
    """Gauss-Legendre nodes/weights on [0,1] (exact through degree 2q-1)."""
    x, w = np.polynomial.legendre.leggauss(q)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def _deriv_coeff_cache(p: int) -> np.ndarray:
    # D[k, j]: coefficients of d/dt P~_j in the shifted basis {P~_k}
    D = np.zeros((p + 1, p + 1))
    for j in range(p + 1):
        e = np.zeros(j + 1)
        e[j] = 1.0
        d = 2.0 * npleg.legder(e)  # factor 2 from t -> 2t-1
        D[: len(d), j] = d
    return D


def legendre_vals(t, p: int) -> np.ndarray:
    """Values of P~_0..P~_p at points t in [0,1]; shape (len(t), p+1)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return npleg.legvander(2.0 * t - 1.0, p)


def legendre_vals_derivs(t, p: int):
    """Values and t-derivatives of the shifted Legendre basis."""
    V = legendre_vals(t, p)
    return V, V @ _deriv_coeff_cache(p)


def deg1d_norms(p: int) -> np.ndarray:
    """L2([0,1]) norms squared of the shifted Legendre basis: 1/(2k+1)."""
    return 1.0 / (2.0 * np.arange(p + 1) + 1.0)


def tensor_index(p: int):
    """Pairs (a, b) of 1D degrees in local index order."""
    return [(a, b) for a in range(p + 1) for b in range(p + 1)]


def tensor_vals(points, p: int) -> np.ndarray:
    """Tensor basis values at reference points; shape (npts, (p+1)^2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    V1 = legendre_vals(pts[:, 0], p)
    V2 = legendre_vals(pts[:, 1], p)
    return np.einsum("na,nb->nab", V1, V2).reshape(len(pts), -1)


def tensor_vals_curls(points, p: int):
    """Values and reference surface curls of the tensor basis.

    The reference curl is the rotated gradient (d/dxi2, -d/dxi1); physical
    curls follow by dividing by the panel side length.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    V1, D1 = legendre_vals_derivs(pts[:, 0], p)
    V2, D2 = legendre_vals_derivs(pts[:, 1], p)
    m = (p + 1) ** 2
    vals = np.einsum("na,nb->nab", V1, V2).reshape(len(pts), m)
    d2 = np.einsum("na,nb->nab", V1, D2).reshape(len(pts), m)
    d1 = np.einsum("na,nb->nab", D1, V2).reshape(len(pts), m)
    return vals, np.stack([d2, -d1], axis=-1)


@lru_cache(maxsize=None)
def curl_coefficient_matrices(p: int):
    """Legendre expansion of the reference curl components.

    Returns (C1, C2), each of shape ((p+1)^2, (p+1)^2), such that column j
    holds the tensor-Legendre coefficients of component 1 resp. 2 of the
    reference curl of basis function j.  Physical curls on a square panel
    of side L are these divided by L.
    """
    D = _deriv_coeff_cache(p)
    m = (p + 1) ** 2
    eye = np.eye(p + 1)
    # component 1 = d/dxi2 phi, component 2 = -d/dxi1 phi
    C1 = np.einsum("ac,bd->abcd", eye, D).reshape(m, m)
    C2 = -np.einsum("ac,bd->abcd", D, eye).reshape(m, m)
    return C1, C2


@lru_cache(maxsize=None)
def edge_trace_matrices(p: int):
    """Trace coefficients of the tensor basis on the four panel edges.

    For each side ('bottom', 'top', 'left', 'right') returns a matrix
    T of shape (p+1, (p+1)^2): column j holds the 1D shifted-Legendre
    coefficients of basis function j restricted to that edge, with the edge
    parametrized canonically (increasing coordinate).
    """
    at0 = legendre_vals(np.array([0.0]), p)[0]
    at1 = legendre_vals(np.array([1.0]), p)[0]
    m = (p + 1) ** 2
    out = {}
    for side, axis, endval in (("bottom", 0, at0), ("top", 0, at1),
                               ("left", 1, at0), ("right", 1, at1)):
        T = np.zeros((p + 1, m))
        for j, (a, b) in enumerate(tensor_index(p)):
            if axis == 0:      # horizontal edge: trace varies in xi1
                T[a, j] = endval[b]
            else:              # vertical edge: trace varies in xi2
                T[b, j] = endval[a]
        out[side] = T
    return out
