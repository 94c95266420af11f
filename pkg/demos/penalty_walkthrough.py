#!/usr/bin/env python3
"""Narrative tour of the solver on a small mesh.

Assembles the penalized system on a 3x3 mesh with cubic panels, solves
it for a range of penalty parameters and prints how the inter-element
jumps die off while the Galerkin energy approaches the conforming one.
Takes a few seconds.
"""

import numpy as np

from screenbem import assembly as asm
from screenbem.mesh import build_uniform_square_mesh
from screenbem.solve import solve_dense
from screenbem.spaces import CONFORMING, build_space

n, p = 3, 3
mesh = build_uniform_square_mesh(n)
space = build_space(mesh, p)
print(f"mesh: {n}x{n} panels, degree {p}, {space.total_dofs} dofs")

system = asm.assemble_system(space, quad_order=6)

print(f"{'nu':>8s} {'energy':>14s} {'jump_l2':>12s} {'residual':>10s}")
for nu in (0.1, 1.0, 10.0, 100.0, 1000.0):
    sol = solve_dense(system.matrix(nu), system.rhs, space=space)
    c = sol.coefficients
    energy = system.rhs @ c
    jump = np.sqrt(max(0.0, c @ system.P @ c))
    print(f"{nu:8g} {energy:14.10f} {jump:12.3e} {sol.residual_norm:10.1e}")

conf = build_space(mesh, p, CONFORMING)
A, rhs = asm.reduce_conforming(conf, system.K, system.rhs)
cc = np.linalg.solve(A, rhs)
print(f"conforming limit: energy {rhs @ cc:.10f} ({conf.total_dofs} dofs)")
print("the discontinuous energies approach the conforming one from above"
      " as nu grows; the jumps decay like 1/nu")
