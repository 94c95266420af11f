"""Boundary element solvers for the hypersingular equation on a flat screen.

The package provides a discontinuous Galerkin discretization with penalty
stabilization, a conforming reference discretization, singular Galerkin
quadrature for the 1/(4*pi*r) kernel, and a study harness that measures
h- and p-convergence rates.
"""

from .mesh import Mesh, Edge, PairClass, build_uniform_square_mesh, classify_pair, panel_map
from .spaces import HpSpace, ConformingSpace, build_space, eval_local_basis, eval_jump
from .assembly import DgSystem, assemble_K, assemble_B, assemble_P, assemble_rhs, assemble_conforming, assemble_system
from .solve import Solution, solve_dense, evaluate_solution
from .study import (
    StudyRecord,
    extrapolate_energy_sequence,
    default_energy_reference,
    samples_to_csv,
    EnergyReference,
    extrapolate_energy,
    conforming_energy,
    run_h_study,
    run_p_study,
    run_nu_sweep,
    fit_rate,
    records_to_csv,
    records_from_csv,
)

__all__ = [
    "Mesh", "Edge", "PairClass", "build_uniform_square_mesh", "classify_pair", "panel_map",
    "HpSpace", "ConformingSpace", "build_space", "eval_local_basis", "eval_jump",
    "DgSystem", "assemble_K", "assemble_B", "assemble_P", "assemble_rhs",
    "assemble_conforming", "assemble_system",
    "Solution", "solve_dense", "evaluate_solution",
    "StudyRecord", "EnergyReference", "extrapolate_energy", "conforming_energy",
    "run_h_study", "run_p_study", "run_nu_sweep", "fit_rate",
    "records_to_csv", "records_from_csv", "samples_to_csv",
    "extrapolate_energy_sequence", "default_energy_reference",
]
