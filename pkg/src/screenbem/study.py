"""Convergence studies, energy extrapolation and CSV plumbing.

Reproduces the unit-load screen experiments: the reference energy
<Wu, u> is extrapolated from a nested sequence of continuous piecewise
bilinear solutions, and the penalized discrete solutions are measured
against it through the surrogate error

    err_h12  = |<Wu,u> - <f, u_hp>|^(1/2) / <Wu,u>^(1/2)
    jump_rel = ||[u_hp]||_{L2(edges)} / <Wu,u>^(1/2).

Both the plain and the square-rooted jump norms are emitted; the plain
one enters jump_rel.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, fields

import numpy as np
import scipy.linalg as sla

from . import assembly as asm
from . import basis
from . import quadrature as quad
from .mesh import build_uniform_square_mesh
from .solve import solve_dense, evaluate_on_panel
from .spaces import CONFORMING, build_space

DEFAULT_H_NUS = (1.0, 20.0, 100.0)
DEFAULT_P_NUS = (1.0, 10.0, 50.0, 100.0)


@dataclass(frozen=True)
class StudyRecord:
    method: str                 # "dg" or "conforming"
    n: int
    p: int
    nu: float                   # 0 for conforming records
    dofs: int
    energy: float               # <f, u_hp>
    jump_l2: float              # ||[u_hp]||_{L2(edge skeleton)}
    err_h12: float
    jump_rel: float
    jump_rel_sqrt: float        # ||[u_hp]||^(1/2) / ||u||_ex
    wall_time: float


@dataclass(frozen=True)
class EnergyReference:
    u_ex_sq: float
    levels: tuple               # mesh parameters n_k
    energies: tuple             # conforming energies E_k
    extrapolants: tuple
    tolerance: float            # spread of the last two extrapolants

    @property
    def u_ex(self) -> float:
        return float(np.sqrt(self.u_ex_sq))


_ENERGY_CACHE: dict = {}


def conforming_energy(n: int, p: int = 1, quad_order: int = 6) -> float:
    """Galerkin energy <f, u_N> of the continuous zero-trace solution."""
    key = (n, p, quad_order)
    hit = _ENERGY_CACHE.get(key)
    if hit is not None:
        return hit
    if p == 1 and n >= 16:
        A, rhs = _bilinear_system_fast(n, quad_order)
    else:
        conf = build_space(build_uniform_square_mesh(n), p, CONFORMING)
        A, rhs = asm.assemble_conforming(conf, quad_order)
    c, low = sla.cho_factor(A)
    energy = float(rhs @ sla.cho_solve((c, low), rhs))
    _ENERGY_CACHE[key] = energy
    return energy


def _bilinear_system_fast(n: int, quad_order: int):
    """Continuous bilinear (p=1) system without forming panel-pair blocks
    per entry.

    On the uniform grid the kernel block of a panel pair depends only on
    the pair's offset, so the hat-hat interaction is a function of the
    vertex offset alone: one pass over the (2n-1)^2 distinct panel
    offsets, then a gather fill.  Validated against the generic embedded
    assembly on small grids.
    """
    mesh = build_uniform_square_mesh(n)
    h = 1.0 / n
    size = np.array([h, h])

    # tensor-Legendre coefficients of the 1D hat factors 1-t and t
    u0 = np.array([0.5, -0.5])
    u1 = np.array([0.5, 0.5])
    corner_coef = {(cx, cy): np.outer(u0 if cx == 0 else u1,
                                      u0 if cy == 0 else u1).ravel()
                   for cx in (0, 1) for cy in (0, 1)}

    def k_scalar(dx, dy, ea, eb):
        ra = (np.array([0.0, 0.0]), size)
        rb = (np.array([dx * h, dy * h]), size)
        order = quad.scaled_order(quad_order, quad.rect_distance(ra, rb),
                                  np.hypot(h, h))
        M = quad.panel_pair_moments(ra, rb, 1, 1, order)
        C1, C2 = basis.curl_coefficient_matrices(1)
        va = (C1 @ ea, C2 @ ea)
        vb = (C1 @ eb, C2 @ eb)
        return (va[0] @ M @ vb[0] + va[1] @ M @ vb[1]) / (h * h)

    # hat of vertex v covers panels v + chi with chi in {-1,0}^2; on panel
    # v + chi the vertex sits at reference corner -chi
    chis = [(-1, -1), (-1, 0), (0, -1), (0, 0)]
    m = n - 1
    ghat = np.zeros((2 * m - 1, 2 * m - 1))
    for dx in range(-(m - 1), m):
        for dy in range(-(m - 1), m):
            val = 0.0
            for ax, ay in chis:
                ea = corner_coef[(-ax, -ay)]
                for bx, by in chis:
                    val += k_scalar(dx + bx - ax, dy + by - ay,
                                    ea, corner_coef[(-bx, -by)])
            ghat[dx + m - 1, dy + m - 1] = val

    vx, vy = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    vx, vy = vx.ravel(), vy.ravel()
    A = ghat[vx[None, :] - vx[:, None] + m - 1,
             vy[None, :] - vy[:, None] + m - 1]
    rhs = np.full(m * m, h * h)
    return A, rhs


def extrapolate_energy(levels, p: int = 1,
                       quad_order: int = 6) -> EnergyReference:
    """Reference energy by Aitken elimination on the conforming sequence.

    The Galerkin energies E_k of the nested continuous spaces increase
    toward <Wu, u> like E_k = E_inf - C n_k^(-alpha); each consecutive
    triple eliminates the leading term.  The spread of the last two
    extrapolants is reported as the tolerance.
    """
    levels = tuple(int(n) for n in levels)
    if len(levels) < 3:
        raise ValueError("need at least three nested levels")
    energies = tuple(conforming_energy(n, p, quad_order) for n in levels)
    return extrapolate_energy_sequence(levels, energies)


def extrapolate_energy_sequence(levels, energies) -> EnergyReference:
    """Extrapolation core on a precomputed energy sequence."""
    E = np.asarray(energies, dtype=float)
    if len(E) < 3:
        raise ValueError("need at least three energies")
    if np.ptp(E) == 0.0:
        return EnergyReference(float(E[0]), tuple(levels), tuple(E),
                               (float(E[0]),), 0.0)
    if np.any(np.diff(E) <= 0):
        raise ValueError("conforming energies must increase under "
                         "refinement; raise the quadrature order")
    extr = []
    for k in range(len(E) - 2):
        d1 = E[k + 1] - E[k]
        d2 = E[k + 2] - E[k + 1]
        denom = d2 - d1
        if denom == 0.0:
            extr.append(float(E[k + 2]))
        else:
            extr.append(float(E[k + 2] - d2 * d2 / denom))
    tol = abs(extr[-1] - extr[-2]) if len(extr) > 1 else np.inf
    return EnergyReference(extr[-1], tuple(levels), tuple(E),
                           tuple(extr), tol)


def default_energy_reference(quad_order: int = 6) -> EnergyReference:
    """Shipped reference: bilinear sequence n = 4, 8, 16, 32, 64."""
    return extrapolate_energy((4, 8, 16, 32, 64), 1, quad_order)


def _dg_record(system: asm.DgSystem, n: int, p: int, nu: float,
               ref: EnergyReference, t0: float) -> StudyRecord:
    sol = solve_dense(system.matrix(nu), system.rhs, space=system.space,
                      config={"n": n, "p": p, "nu": nu})
    c = sol.coefficients
    energy = float(system.rhs @ c)
    jump_l2 = float(np.sqrt(max(0.0, c @ system.P @ c)))
    u2 = ref.u_ex_sq
    return StudyRecord(
        method="dg", n=n, p=p, nu=nu, dofs=len(c), energy=energy,
        jump_l2=jump_l2,
        err_h12=float(np.sqrt(abs(u2 - energy) / u2)),
        jump_rel=jump_l2 / ref.u_ex,
        jump_rel_sqrt=float(np.sqrt(jump_l2) / ref.u_ex),
        wall_time=time.perf_counter() - t0)


def _conforming_record(n: int, p: int, ref: EnergyReference,
                       quad_order: int) -> StudyRecord:
    t0 = time.perf_counter()
    energy = conforming_energy(n, p, quad_order)
    u2 = ref.u_ex_sq
    dofs = (n * p - 1) ** 2
    return StudyRecord(
        method="conforming", n=n, p=p, nu=0.0, dofs=dofs, energy=energy,
        jump_l2=0.0, err_h12=float(np.sqrt(abs(u2 - energy) / u2)),
        jump_rel=0.0, jump_rel_sqrt=0.0,
        wall_time=time.perf_counter() - t0)


def run_h_study(p_list=(1,), nu_list=DEFAULT_H_NUS, n_list=(4, 8, 16, 32),
                quad_order: int = 6, ref: EnergyReference | None = None,
                conforming: bool = True, threads: int = 1):
    """One record per (n, p, nu), plus conforming comparison rows for p=1."""
    ref = ref or default_energy_reference(quad_order)
    records = []
    for p in p_list:
        for n in n_list:
            t0 = time.perf_counter()
            space = build_space(build_uniform_square_mesh(n), p)
            system = asm.assemble_system(space, quad_order, threads=threads)
            for nu in nu_list:
                records.append(_dg_record(system, n, p, float(nu), ref, t0))
                t0 = time.perf_counter()
            if conforming and p == 1:
                records.append(_conforming_record(n, p, ref, quad_order))
    return records


def run_p_study(n: int = 2, nu_list=DEFAULT_P_NUS, p_range=range(1, 9),
                quad_order: int = 6, ref: EnergyReference | None = None,
                threads: int = 1):
    """Fixed 4-element mesh, sweeping the degree."""
    ref = ref or default_energy_reference(quad_order)
    records = []
    for p in p_range:
        t0 = time.perf_counter()
        space = build_space(build_uniform_square_mesh(n), p)
        system = asm.assemble_system(space, quad_order, threads=threads)
        for nu in nu_list:
            records.append(_dg_record(system, n, int(p), float(nu), ref, t0))
            t0 = time.perf_counter()
    return records


def run_nu_sweep(n: int = 5, p: int = 3, nu_list=(0.1, 1.0, 10.0),
                 quad_order: int = 6, samples_per_panel: int = 6,
                 ref: EnergyReference | None = None, threads: int = 1):
    """Penalty sweep with per-panel solution samples and a conforming field.

    Returns (records, samples); samples are dicts with keys method, nu,
    panel, x1, x2, u, sampled on a per-panel reference grid so that the
    inter-panel discontinuities stay visible.
    """
    ref = ref or default_energy_reference(quad_order)
    mesh = build_uniform_square_mesh(n)
    space = build_space(mesh, p)
    system = asm.assemble_system(space, quad_order, threads=threads)
    g = np.linspace(0.0, 1.0, samples_per_panel)
    refpts = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)

    records, samples = [], []
    t0 = time.perf_counter()
    for nu in nu_list:
        records.append(_dg_record(system, n, p, float(nu), ref, t0))
        sol = solve_dense(system.matrix(float(nu)), system.rhs, space=space)
        samples.extend(_field_samples("dg", float(nu), mesh, refpts,
                                      lambda q: evaluate_on_panel(sol, q,
                                                                  refpts)))
        t0 = time.perf_counter()

    conf = build_space(mesh, p, CONFORMING)
    A, rhs = asm.reduce_conforming(conf, system.K, system.rhs)
    cc = sla.cho_solve(sla.cho_factor(A), rhs)
    dg_coeffs = conf.embedding @ cc
    energy = float(rhs @ cc)
    u2 = ref.u_ex_sq
    records.append(StudyRecord(
        method="conforming", n=n, p=p, nu=0.0, dofs=len(cc), energy=energy,
        jump_l2=0.0, err_h12=float(np.sqrt(abs(u2 - energy) / u2)),
        jump_rel=0.0, jump_rel_sqrt=0.0,
        wall_time=time.perf_counter() - t0))
    samples.extend(_field_samples(
        "conforming", 0.0, mesh, refpts,
        lambda q: space.eval_on_panel(q, refpts, dg_coeffs)))
    return records, samples


def _field_samples(method, nu, mesh, refpts, values_on_panel):
    out = []
    for q in range(mesh.num_panels):
        origin, size = mesh.panel_rect(q)
        pts = origin[None, :] + refpts * size[None, :]
        vals = values_on_panel(q)
        for (x1, x2), u in zip(pts, vals):
            out.append({"method": method, "nu": nu, "panel": q,
                        "x1": float(x1), "x2": float(x2), "u": float(u)})
    return out


def fit_rate(records, x: str = "h", y: str = "err_h12", tail: int | None = None):
    """Least-squares slope of log y against log x.

    x is "h" (1/n) or "p"; tail keeps the last `tail` records (default all
    but the first).  Returns (slope, stderr).
    """
    if len(records) < 3:
        raise ValueError("need at least three records to fit a rate")
    if tail is None:
        tail = len(records) - 1
    recs = list(records)[-tail:]
    if x == "h":
        xs = np.array([1.0 / r.n for r in recs])
    elif x == "p":
        xs = np.array([float(r.p) for r in recs])
    else:
        raise ValueError(f"unknown abscissa {x!r}")
    ys = np.array([getattr(r, y) for r in recs])
    if np.any(ys <= 0):
        raise ValueError(f"non-positive values in {y}; cannot fit a log rate")
    lx, ly = np.log(xs), np.log(ys)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    dof = max(1, len(lx) - 2)
    var = (res[0] / dof if len(res) else 0.0)
    sxx = np.sum((lx - lx.mean()) ** 2)
    stderr = float(np.sqrt(var / sxx)) if sxx > 0 else np.inf
    return float(coef[0]), stderr


_FIELDS = [f.name for f in fields(StudyRecord)]


def records_to_csv(records, path=None) -> str:
    """CSV with one row per record; floats at 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_FIELDS)
    for r in records:
        row = []
        for name in _FIELDS:
            v = getattr(r, name)
            row.append(f"{v:.17g}" if isinstance(v, float) else str(v))
        writer.writerow(row)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def records_from_csv(source) -> list:
    """Inverse of records_to_csv; round-trips exactly."""
    if isinstance(source, str) and "\n" not in source:
        with open(source) as fh:
            text = fh.read()
    else:
        text = source
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != _FIELDS:
        raise ValueError(f"unexpected CSV header {header}")
    out = []
    types = {f.name: f.type for f in fields(StudyRecord)}
    for row in reader:
        kwargs = {}
        for name, cell in zip(header, row):
            t = types[name]
            kwargs[name] = (int(cell) if t == "int"
                            else float(cell) if t == "float" else cell)
        out.append(StudyRecord(**kwargs))
    return out


def samples_to_csv(samples, path=None) -> str:
    """Field-sample CSV for the surface plots."""
    cols = ["method", "nu", "panel", "x1", "x2", "u"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for s in samples:
        writer.writerow([s["method"], f"{s['nu']:.17g}", s["panel"],
                         f"{s['x1']:.17g}", f"{s['x2']:.17g}",
                         f"{s['u']:.17g}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
