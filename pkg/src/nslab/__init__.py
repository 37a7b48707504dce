"""Discrete integral-operator reformulation of the 3-D incompressible Navier-Stokes equations.

Fields live on uniform (t, x, y, z) grids over one unit time interval and
one box cell.  The four operators I_1..I_4 are built from anchored
trapezoid antiderivatives, solved by a damped Picard iteration, marched
across unit intervals and checked by a family of audits.
"""
__version__ = "0.1.0"

from .audit import AuditReport
from .decomposition import DomainCell, bump_initial_data, decay_audit, divergence_free_bump, make_partition, support_audit
from .fixedpoint import EpsilonBudget, FixedPointReport, compute_M, compute_N, select_epsilon, solve_fixed_point
from .grid import Grid, ScalarField, anchored_cumulative_integral, finite_difference, make_uniform_grid
from .march import SolverConfig, Trajectory, global_l2_ledger, interface_audit, march, step_interval, theorem11_audit
from .operators import FlowState, OperatorOutput, assemble_I, lemma32_audit, nse_residual

__all__ = [
    "AuditReport", "DomainCell", "EpsilonBudget", "FixedPointReport", "FlowState", "Grid", "OperatorOutput",
    "ScalarField", "SolverConfig", "Trajectory", "anchored_cumulative_integral", "assemble_I", "bump_initial_data",
    "compute_M", "compute_N", "decay_audit", "divergence_free_bump", "finite_difference", "global_l2_ledger",
    "interface_audit", "lemma32_audit", "make_partition", "make_uniform_grid", "march", "nse_residual",
    "select_epsilon", "solve_fixed_point", "step_interval", "support_audit", "theorem11_audit",
]
