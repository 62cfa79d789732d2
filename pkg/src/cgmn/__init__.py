"""CGMN (CG-accelerated symmetric Kaczmarz) for finite-difference Helmholtz problems."""

from .discretization import (
    Grid1D,
    Grid2D,
    HelmholtzProblem,
    Medium,
    SparseRowMatrix,
    analytic_eigenpair_1d,
    build_helmholtz_1d,
    build_helmholtz_2d,
    plane_wave,
    scattered_field_rhs,
)
from .solver import ConvergenceHistory, SolverConfig, cgmn_solve, richardson_solve
from .sweeps import SweepPlan, SweepWorkspace, apply_I_minus_Q, apply_R, double_sweep, project_row
from .symbol import (
    OmegaCurve,
    SymbolFactors,
    SymbolParams,
    amplitude,
    amplitude_expanded,
    amplitude_factored,
    condition_proxy,
    local_relaxation_plan,
    omega_curve,
    optimal_omega,
    symbol_factors,
)

__all__ = [
    "Grid1D", "Grid2D", "HelmholtzProblem", "Medium", "SparseRowMatrix", "analytic_eigenpair_1d",
    "build_helmholtz_1d", "build_helmholtz_2d", "plane_wave", "scattered_field_rhs",
    "ConvergenceHistory", "SolverConfig", "cgmn_solve", "richardson_solve",
    "SweepPlan", "SweepWorkspace", "apply_I_minus_Q", "apply_R", "double_sweep", "project_row",
    "OmegaCurve", "SymbolFactors", "SymbolParams", "amplitude", "amplitude_expanded", "amplitude_factored", "condition_proxy",
    "local_relaxation_plan", "omega_curve", "optimal_omega", "symbol_factors",
]
