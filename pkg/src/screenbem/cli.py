"""Command-line entry points for the screen BEM studies."""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict

import click
import numpy as np

from . import assembly as asm
from . import oracle
from . import quadrature as quad
from . import study
from .mesh import build_uniform_square_mesh, classify_pair
from .solve import solve_dense
from .spaces import build_space


def _write(records, out, name, fmt):
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"{name}.{fmt}")
    if fmt == "csv":
        study.records_to_csv(records, path)
    else:
        with open(path, "w") as fh:
            json.dump([asdict(r) for r in records], fh, indent=2)
    click.echo(f"wrote {path}")
    return path


out_opt = click.option("--out", default="results", show_default=True,
                       help="output directory")
fmt_opt = click.option("--format", "fmt", default="csv", show_default=True,
                       type=click.Choice(["csv", "json"]))
order_opt = click.option("--quad-order", default=6, show_default=True,
                         help="outer Gauss order of the panel-pair rules")
threads_opt = click.option("--threads", default=1, show_default=True,
                           help="worker threads for the assembly pair loop")


@click.group()
def main():
    """Penalized Galerkin boundary elements on the unit-square screen."""


@main.command()
@click.option("--n", default=4, show_default=True, help="panels per side")
@click.option("--p", default=1, show_default=True, help="polynomial degree")
@click.option("--nu", multiple=True, type=float, default=(1.0,),
              show_default=True, help="penalty parameter (repeatable)")
@order_opt
@out_opt
@fmt_opt
@threads_opt
def solve(n, p, nu, quad_order, out, fmt, threads):
    """Solve one configuration and emit solution samples."""
    space = build_space(build_uniform_square_mesh(n), p)
    system = asm.assemble_system(space, quad_order, threads=threads)
    os.makedirs(out, exist_ok=True)
    for nu_k in nu:
        sol = solve_dense(system.matrix(nu_k), system.rhs, space=space,
                          config={"n": n, "p": p, "nu": nu_k})
        energy = float(system.rhs @ sol.coefficients)
        click.echo(f"nu={nu_k:g}: dofs={space.total_dofs} "
                   f"energy={energy:.12g} residual={sol.residual_norm:.2e}")
        g = np.linspace(0.0, 1.0, 6)
        refpts = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
        samples = study._field_samples(
            "dg", nu_k, space.mesh, refpts,
            lambda q: space.eval_on_panel(q, refpts, sol.coefficients))
        path = os.path.join(out, f"solve_n{n}_p{p}_nu{nu_k:g}.csv")
        study.samples_to_csv(samples, path)
        click.echo(f"wrote {path}")


@main.command("h-study")
@click.option("--n", multiple=True, type=int, default=(4, 8, 16, 32),
              show_default=True)
@click.option("--p", multiple=True, type=int, default=(1,), show_default=True)
@click.option("--nu", multiple=True, type=float,
              default=study.DEFAULT_H_NUS, show_default=True)
@order_opt
@out_opt
@fmt_opt
@threads_opt
def h_study(n, p, nu, quad_order, out, fmt, threads):
    """Mesh-refinement study at fixed degrees."""
    records = study.run_h_study(p, nu, n, quad_order, threads=threads)
    _write(records, out, "h_study", fmt)
    _report_rates(records, "h", nu, p_vals=p)


@main.command("p-study")
@click.option("--n", default=2, show_default=True)
@click.option("--p", multiple=True, type=int,
              default=tuple(range(1, 9)), show_default=True)
@click.option("--nu", multiple=True, type=float,
              default=study.DEFAULT_P_NUS, show_default=True)
@order_opt
@out_opt
@fmt_opt
@threads_opt
def p_study(n, p, nu, quad_order, out, fmt, threads):
    """Degree-refinement study on the fixed 4-element mesh."""
    records = study.run_p_study(n, nu, p, quad_order, threads=threads)
    _write(records, out, "p_study", fmt)
    _report_rates(records, "p", nu, p_vals=None)


def _report_rates(records, x, nus, p_vals):
    for nu_k in nus:
        if x == "h":
            for p_k in p_vals:
                recs = [r for r in records
                        if r.method == "dg" and r.nu == nu_k and r.p == p_k]
                if len(recs) >= 3:
                    s, err = study.fit_rate(recs, "h", "err_h12")
                    click.echo(f"nu={nu_k:g} p={p_k}: err_h12 rate "
                               f"{s:.3f} +- {err:.3f}")
        else:
            recs = [r for r in records if r.method == "dg" and r.nu == nu_k]
            if len(recs) >= 3:
                s, err = study.fit_rate(recs, "p", "err_h12")
                click.echo(f"nu={nu_k:g}: err_h12 p-rate {s:.3f} +- {err:.3f}")


@main.command("nu-sweep")
@click.option("--n", default=5, show_default=True)
@click.option("--p", default=3, show_default=True)
@click.option("--nu", multiple=True, type=float, default=(0.1, 1.0, 10.0),
              show_default=True)
@order_opt
@out_opt
@fmt_opt
@threads_opt
def nu_sweep(n, p, nu, quad_order, out, fmt, threads):
    """Penalty sweep with sampled solution fields (surface-plot input)."""
    records, samples = study.run_nu_sweep(n, p, nu, quad_order,
                                          threads=threads)
    _write(records, out, "nu_sweep", fmt)
    path = os.path.join(out, "nu_sweep_fields.csv")
    study.samples_to_csv(samples, path)
    click.echo(f"wrote {path}")
    for r in records:
        tag = f"nu={r.nu:g}" if r.method == "dg" else "conforming"
        click.echo(f"{tag}: jump_l2={r.jump_l2:.6e} energy={r.energy:.10g}")


@main.command("validate-quadrature")
@click.option("--n", default=4, show_default=True)
@click.option("--p", default=3, show_default=True,
              help="max integrand degree per variable")
@click.option("--quad-order", default=10, show_default=True)
def validate_quadrature(n, p, quad_order):
    """Compare the production rules with the subdivision oracle."""
    mesh = build_uniform_square_mesh(n)
    base = n + 1  # panel whose neighborhood realizes all adjacency classes
    cases = {"identical": (base, base), "common_edge": (base, base + 1),
             "common_vertex": (base, base + n + 1),
             "disjoint": (base, mesh.num_panels - 1)}
    failed = False
    for tag, (a, b) in cases.items():
        assert classify_pair(mesh, a, b).tag == tag
        ra, rb = mesh.panel_rect(a), mesh.panel_rect(b)
        M = quad.panel_pair_moments(ra, rb, p, p, quad_order)
        t0 = time.perf_counter()
        Mo, est = oracle.oracle_panel_pair_moments(ra, rb, p, p)
        rel = float(np.max(np.abs(M - Mo)) / np.max(np.abs(M)))
        tol = 1e-10 if tag == "disjoint" else 1e-6
        ok = rel <= tol
        failed |= not ok
        click.echo(f"{tag:14s} rel={rel:.3e} oracle_est={est:.1e} "
                   f"tol={tol:g} [{'ok' if ok else 'FAIL'}] "
                   f"({time.perf_counter() - t0:.1f}s)")
    if failed:
        raise SystemExit(1)


@main.command("energy-ref")
@click.option("--n", multiple=True, type=int, default=(4, 8, 16, 32, 64),
              show_default=True)
@click.option("--p", default=1, show_default=True)
@order_opt
@out_opt
@fmt_opt
def energy_ref(n, p, quad_order, out, fmt):
    """Extrapolate the reference energy from conforming solutions."""
    ref = study.extrapolate_energy(n, p, quad_order)
    payload = {"u_ex_sq": ref.u_ex_sq, "levels": list(ref.levels),
               "energies": list(ref.energies),
               "extrapolants": list(ref.extrapolants),
               "tolerance": ref.tolerance}
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "energy_ref.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    click.echo(f"u_ex_sq = {ref.u_ex_sq:.10g} +- {ref.tolerance:.2g}")
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
