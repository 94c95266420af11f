"""Dense Galerkin assembly of the interior-penalty system.

The discrete bilinear form on the screen is

    a(v, w) = <V curl v, curl w> + <Tv, [w]> - <[v], Tw> + nu <[v], [w]>,

realized as A(nu) = K + B - B^T + nu P.  K couples every panel pair through
the single-layer kernel, B couples every mesh edge to every panel (T is
nonlocal), and P is the local jump Gram matrix.  nu enters only when the
blocks are combined, so parameter sweeps reuse one assembly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import basis
from . import quadrature as quad
from .mesh import Mesh
from .spaces import ConformingSpace, HpSpace, panel_side_of_edge

_K_BLOCK_CACHE: dict = {}
_B_BLOCK_CACHE: dict = {}


def clear_cache():
    _K_BLOCK_CACHE.clear()
    _B_BLOCK_CACHE.clear()
    quad.clear_cache()


@dataclass(frozen=True, eq=False)
class DgSystem:
    """Assembled blocks of the penalized system, independent of nu."""

    K: np.ndarray
    B: np.ndarray
    P: np.ndarray
    rhs: np.ndarray
    space: HpSpace

    def matrix(self, nu: float) -> np.ndarray:
        if nu <= 0:
            raise ValueError("penalty parameter must be positive")
        return self.K + self.B - self.B.T + nu * self.P


def _pair_order(quad_order: int, mesh: Mesh, a: int, b: int) -> int:
    dist = quad.rect_distance(mesh.panel_rect(a), mesh.panel_rect(b))
    diam = max(mesh.panel_diameter(a), mesh.panel_diameter(b))
    return quad.scaled_order(quad_order, dist, diam)


def _k_block(mesh: Mesh, a: int, b: int, pa: int, pb: int, order: int):
    """<V curl phi_j^b, curl phi_i^a> for all local basis pairs."""
    ra, rb = mesh.panel_rect(a), mesh.panel_rect(b)
    key = quad._key("kb", ra[0] - rb[0], ra[1], rb[1], pa, pb, order)
    hit = _K_BLOCK_CACHE.get(key)
    if hit is not None:
        return hit
    M = quad.panel_pair_moments(ra, rb, pa, pb, order)
    Ca = basis.curl_coefficient_matrices(pa)
    Cb = basis.curl_coefficient_matrices(pb)
    La = float(ra[1][0])
    Lb = float(rb[1][0])
    block = (Ca[0].T @ M @ Cb[0] + Ca[1].T @ M @ Cb[1]) / (La * Lb)
    _K_BLOCK_CACHE[key] = block
    return block


def assemble_K(space: HpSpace, quad_order: int = 6,
               threads: int = 1) -> np.ndarray:
    """Single-layer curl-curl matrix K[i,j] = <V curl phi_j, curl phi_i>.

    Computed pair-by-pair over the upper panel triangle and mirrored
    (the kernel is symmetric).  Far pairs use a distance-reduced order.
    """
    mesh = space.mesh
    nq = mesh.num_panels
    K = np.zeros((space.total_dofs, space.total_dofs))

    def fill_rows(a_range):
        for a in a_range:
            ia = space.panel_dofs(a)
            pa = int(space.degrees[a])
            for b in range(a, nq):
                order = _pair_order(quad_order, mesh, a, b)
                block = _k_block(mesh, a, b, pa, int(space.degrees[b]), order)
                K[np.ix_(ia, space.panel_dofs(b))] = block

    _run_partitioned(fill_rows, nq, threads)
    iu = np.triu_indices(space.total_dofs, k=1)
    K[(iu[1], iu[0])] = K[iu]
    return K


def _edge_rect(start, axis, length):
    size = np.zeros(2)
    size[axis] = length
    return (np.asarray(start, float), size)


def _b_edge_block(mesh: Mesh, edge, b: int, pb: int, deg_e: int, order: int):
    """<(V curl phi_j^b) . t_e, P~_d(s/L)>_e for d <= deg_e, all local j."""
    start, direction, length = mesh.edge_geometry(edge)
    axis = 0 if abs(direction[0]) > abs(direction[1]) else 1
    rb = mesh.panel_rect(b)
    sgn = float(np.sign(edge.tangent[axis]))
    key = quad._key("bb", axis, rb[0] - start, length, rb[1], pb, deg_e, order)
    hit = _B_BLOCK_CACHE.get(key)
    if hit is None:
        R = quad.edge_panel_moments(start, axis, length, rb, pb, deg_e, order)
        C = basis.curl_coefficient_matrices(pb)[axis]
        hit = (R @ C) / float(rb[1][0])
        _B_BLOCK_CACHE[key] = hit
    return sgn * hit


def assemble_B(space: HpSpace, quad_order: int = 6,
               threads: int = 1) -> np.ndarray:
    """Edge-coupling matrix B[i,j] = <T phi_j, [phi_i]> over all mesh edges.

    Edge-major: every edge couples to every source panel because T is a
    single-layer trace.  Interior jumps are owner minus neighbor; boundary
    edges contribute the plain trace.
    """
    mesh = space.mesh
    nq = mesh.num_panels

    def fill_edges(e_range):
        B = np.zeros((space.total_dofs, space.total_dofs))
        for ei in e_range:
            edge = mesh.edges[ei]
            deg_e = max(int(space.degrees[q]) for q in edge.panels)
            tests = [(edge.owner, 1.0)]
            if edge.neighbor is not None:
                tests.append((edge.neighbor, -1.0))
            for b in range(nq):
                start, _, length = mesh.edge_geometry(edge)
                dist = quad.rect_distance(
                    _edge_rect(start, 0 if edge.tangent[1] == 0 else 1, length),
                    mesh.panel_rect(b))
                diam = max(length, mesh.panel_diameter(b))
                order = quad.scaled_order(quad_order, dist, diam)
                G = _b_edge_block(mesh, edge, b, int(space.degrees[b]),
                                  deg_e, order)
                jb = space.panel_dofs(b)
                for q, sign in tests:
                    pq = int(space.degrees[q])
                    side = panel_side_of_edge(mesh, edge, q)
                    Tr = basis.edge_trace_matrices(pq)[side]
                    B[np.ix_(space.panel_dofs(q), jb)] += \
                        sign * (Tr.T @ G[:pq + 1, :])
        return B

    # per-worker accumulators, summed in partition order: deterministic
    # for a fixed partition
    return sum(_map_partitioned(fill_edges, len(mesh.edges), threads))


def assemble_P(space: HpSpace) -> np.ndarray:
    """Jump Gram matrix P[i,j] = <[phi_j], [phi_i]> over all mesh edges.

    1D Gauss of order max degree + 1 on each edge, exact for the
    polynomial traces.  Boundary edges enter with the trace itself.
    """
    mesh = space.mesh
    P = np.zeros((space.total_dofs, space.total_dofs))
    for edge in mesh.edges:
        _, _, length = mesh.edge_geometry(edge)
        sides = [(edge.owner, 1.0)]
        if edge.neighbor is not None:
            sides.append((edge.neighbor, -1.0))
        order = max(int(space.degrees[q]) for q, _ in sides) + 1
        g, w = basis.gauss_01(order)
        vals = []
        for q, sign in sides:
            pq = int(space.degrees[q])
            Tr = basis.edge_trace_matrices(pq)[panel_side_of_edge(mesh, edge, q)]
            vals.append((q, sign * (basis.legendre_vals(g, pq) @ Tr)))
        for q, Vq in vals:
            iq = space.panel_dofs(q)
            for r, Vr in vals:
                P[np.ix_(iq, space.panel_dofs(r))] += \
                    length * (Vq.T @ (w[:, None] * Vr))
    return P


def assemble_rhs(space: HpSpace, f=1.0, quad_order: int = 12) -> np.ndarray:
    """Load vector <f, phi_i>.

    Constant f is exact: only the constant mode of each panel integrates
    to a nonzero value, the panel area.  Callable f uses tensor Gauss.
    """
    rhs = np.zeros(space.total_dofs)
    mesh = space.mesh
    if not callable(f):
        c = float(f)
        for q in range(mesh.num_panels):
            rhs[space.dof_offsets[q]] = c * mesh.panel_area(q)
        return rhs
    g, w = basis.gauss_01(quad_order)
    ref = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    wts = np.outer(w, w).ravel()
    for q in range(mesh.num_panels):
        origin, size = mesh.panel_rect(q)
        pts = origin[None, :] + ref * size[None, :]
        fv = np.asarray([f(pt) for pt in pts], dtype=float)
        V = basis.tensor_vals(ref, int(space.degrees[q]))
        rhs[space.panel_dofs(q)] = mesh.panel_area(q) * (V.T @ (wts * fv))
    return rhs


def reduce_conforming(conf: ConformingSpace, K: np.ndarray,
                      rhs: np.ndarray):
    """Project assembled DG blocks onto the conforming subspace."""
    E = conf.embedding
    return np.asarray(E.T @ (E.T @ K.T).T), np.asarray(E.T @ rhs)


def assemble_conforming(conf: ConformingSpace, quad_order: int = 6,
                        f=1.0, threads: int = 1):
    """SPD system of the continuous zero-trace subspace: (E^T K E, E^T rhs)."""
    K = assemble_K(conf.dg_space, quad_order, threads=threads)
    rhs = assemble_rhs(conf.dg_space, f)
    return reduce_conforming(conf, K, rhs)


def assemble_system(space: HpSpace, quad_order: int = 6, f=1.0,
                    threads: int = 1) -> DgSystem:
    """All nu-independent blocks of the penalized problem."""
    return DgSystem(K=assemble_K(space, quad_order, threads=threads),
                    B=assemble_B(space, quad_order, threads=threads),
                    P=assemble_P(space),
                    rhs=assemble_rhs(space, f),
                    space=space)


def _run_partitioned(fill, count: int, threads: int):
    """Run fill(range_block) over a row-block partition of range(count).

    Each index is handled by exactly one worker and every worker writes a
    disjoint slice of the output, so the result is identical to the
    single-worker run.
    """
    if threads <= 1 or count < 2:
        fill(range(count))
        return
    blocks = np.array_split(np.arange(count), min(threads, count))
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        futures = [pool.submit(fill, blk) for blk in blocks]
        for fut in futures:
            fut.result()


def _map_partitioned(fn, count: int, threads: int):
    """Like _run_partitioned but collects return values in partition order."""
    if threads <= 1 or count < 2:
        return [fn(range(count))]
    blocks = np.array_split(np.arange(count), min(threads, count))
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        return [fut.result() for fut in [pool.submit(fn, blk)
                                         for blk in blocks]]


def write_matrix_binary(path, M: np.ndarray):
    """Row-major float64 dump: two uint64 dims then the data."""
    M = np.ascontiguousarray(M, dtype=np.float64)
    with open(path, "wb") as fh:
        np.asarray(M.shape, dtype=np.uint64).tofile(fh)
        M.tofile(fh)


def read_matrix_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        shape = np.fromfile(fh, dtype=np.uint64, count=2).astype(int)
        data = np.fromfile(fh, dtype=np.float64)
    return data.reshape(shape[0], shape[1])
