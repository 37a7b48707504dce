"""Norm budget, the S/T splitting and the damped Picard iteration on I(x) = 0.

With T x = (1 + eps) x and S x = -eps x + eps I(x), the fixed-point equation
T x + S x = x is equivalent to I(x) = 0, and solving it through the
contraction T^{-1} gives the update

    x <- x - eps / (1 + eps) * I(x)

applied componentwise to (u, v, w, p) with (I_1, I_2, I_3, I_4).  Nothing
here asserts that this map contracts; the solver measures it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .audit import UNMET, AuditReport
from .errors import DegenerateBudget, Divergence, GridMismatch, InvalidIndex, InvalidMeasure, MaxIterExceeded
from .grid import ScalarField, c1c2_norm
from .operators import FlowState, OperatorOutput, assemble_I, nse_residual, trace_fields

M_VARIANTS = ("step2", "step1")


def compute_M(j: int, mu: float, variant: str = "step2") -> float:
    """Norm cap of cell ``j`` with measure ``mu``.

    ``step2`` (default) is 1 / (2^(j/2) sqrt(mu)); ``step1`` is the
    1 / (2^(1/j) sqrt(mu)) form, kept for comparison.
    """
    if int(j) != j or j < 1:
        raise InvalidIndex(f"cell index must be an integer >= 1, got {j}")
    if not mu > 0:
        raise InvalidMeasure(f"measure must be positive, got {mu}")
    if variant == "step2":
        return 1.0 / (2.0 ** (j / 2.0) * math.sqrt(mu))
    if variant == "step1":
        return 1.0 / (2.0 ** (1.0 / j) * math.sqrt(mu))
    raise ValueError(f"variant must be one of {M_VARIANTS}, got {variant!r}")


def compute_N(u0, v0, w0) -> float:
    if not (u0.grid == v0.grid == w0.grid):
        raise GridMismatch("initial data must share a grid")
    return max(c1c2_norm(f, "sup") for f in (u0, v0, w0))


@dataclass(frozen=True)
class EpsilonBudget:
    M: float
    N: float
    mu: float
    epsilon: float
    safety: float = 1.0

    @property
    def lhs(self) -> float:
        """eps (3M^2 + 6M + N) mu^2, the quantity that must not exceed M."""
        return self.epsilon * (3 * self.M**2 + 6 * self.M + self.N) * self.mu**2

    @property
    def lhs_5m(self) -> float:
        """Same with the 5M coefficient of the operator estimate."""
        return self.epsilon * (3 * self.M**2 + 5 * self.M + self.N) * self.mu**2

    @property
    def satisfied(self) -> bool:
        # a few ulps of slack: at safety 1 the two sides agree to rounding
        return self.M > 0 and self.mu > 0 and self.N >= 0 and self.epsilon > 0 and self.lhs <= self.M * (1 + 1e-12)

    @property
    def damping(self) -> float:
        return self.epsilon / (1.0 + self.epsilon)

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "N": self.N,
            "mu": self.mu,
            "epsilon": self.epsilon,
            "safety": self.safety,
            "lhs_6M": self.lhs,
            "lhs_5M": self.lhs_5m,
            "satisfied": self.satisfied,
        }


def select_epsilon(M: float, N: float, mu: float, safety: float = 1.0) -> EpsilonBudget:
    """Largest eps (times ``safety``) with eps (3M^2 + 6M + N) mu^2 <= M."""
    if not M > 0 or not mu > 0:
        raise DegenerateBudget(f"need M > 0 and mu > 0, got M={M}, mu={mu}")
    if N < 0:
        raise DegenerateBudget(f"need N >= 0, got {N}")
    if not 0 < safety <= 1:
        raise DegenerateBudget(f"safety must lie in (0, 1], got {safety}")
    eps = safety * M / ((3 * M**2 + 6 * M + N) * mu**2)
    return EpsilonBudget(M=float(M), N=float(N), mu=float(mu), epsilon=float(eps), safety=float(safety))


def state_norm(s: FlowState, mode: str = "full") -> float:
    return max(c1c2_norm(f, mode) for f in s.components)


def apply_T(s: FlowState, eps: float) -> FlowState:
    return s.scaled(1.0 + eps)


def apply_T_inverse(s: FlowState, eps: float) -> FlowState:
    return s.scaled(1.0 / (1.0 + eps))


def apply_S(s: FlowState, eps: float, out: OperatorOutput) -> FlowState:
    if out.I1.grid != s.grid:
        raise GridMismatch("operator output and state live on different grids")
    return FlowState(*(-eps * f + eps * Ik for f, Ik in zip(s.components, out.components)))


def picard_step(s: FlowState, eps: float, prev_trace, anchor, m: int = 1, out: OperatorOutput | None = None) -> FlowState:
    """One damped update ``s - eps/(1+eps) * I(s)``."""
    if out is None:
        out = assemble_I(s, prev_trace, anchor, m)
    c = eps / (1.0 + eps)
    return FlowState(*(f - c * Ik for f, Ik in zip(s.components, out.components)))


def default_initial_guess(grid, prev_trace, p_start=None) -> FlowState:
    """Constant-in-time extension of the trace; pressure 0 unless ``p_start`` is given."""
    u, v, w = trace_fields(grid, prev_trace)
    if p_start is None:
        p = ScalarField.zeros(grid)
    else:
        if isinstance(p_start, ScalarField):
            p_start = p_start.values[0]
        p = ScalarField.from_spatial(grid, p_start)
    return FlowState(u, v, w, p)


@dataclass
class FixedPointReport:
    iterations: int = 0
    operator_norm_trace: list = field(default_factory=list)
    step_ratio_trace: list = field(default_factory=list)
    component_norm_trace: list = field(default_factory=list)
    ball_membership: list = field(default_factory=list)
    final_residual: float = float("nan")
    final_residual_convective: float = float("nan")
    converged: bool = False
    stop_reason: str = ""
    tol: float = 0.0
    epsilon: float = 0.0
    M: float = 0.0

    @property
    def ever_left_ball(self) -> bool:
        return not all(all(flags) for flags in self.ball_membership)

    @property
    def final_operator_norm(self) -> float:
        return max(self.operator_norm_trace[-1]) if self.operator_norm_trace else float("nan")

    def to_dict(self, with_traces: bool = False) -> dict:
        d = {
            "iterations": self.iterations,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "tol": self.tol,
            "epsilon": self.epsilon,
            "M": self.M,
            "final_operator_norm": self.final_operator_norm,
            "final_residual": self.final_residual,
            "final_residual_convective": self.final_residual_convective,
            "ever_left_ball": self.ever_left_ball,
        }
        if with_traces:
            d["operator_norm_trace"] = [list(r) for r in self.operator_norm_trace]
            d["step_ratio_trace"] = list(self.step_ratio_trace)
        return d

    CSV_COLUMNS = (
        "iter", "normI1", "normI2", "normI3", "normI4", "step_ratio",
        "maxnorm_u", "maxnorm_v", "maxnorm_w", "maxnorm_p", "in_ball",
    )

    def csv_rows(self):
        for i in range(self.iterations):
            yield (
                [i]
                + [float(x) for x in self.operator_norm_trace[i]]
                + [float(self.step_ratio_trace[i])]
                + [float(x) for x in self.component_norm_trace[i]]
                + [int(all(self.ball_membership[i]))]
            )

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.CSV_COLUMNS)
            for row in self.csv_rows():
                writer.writerow([r if isinstance(r, int) else repr(r) for r in row])
        return path


def solve_fixed_point(
    initial_guess: FlowState,
    prev_trace,
    anchor,
    m: int,
    budget: EpsilonBudget,
    tol: float = 1e-9,
    max_iter: int = 500,
    divergence_factor: float = 10.0,
    strict: bool = False,
):
    """Iterate :func:`picard_step` until max_k |I_k|_sup <= tol.

    Stops early when a component's full norm exceeds
    ``divergence_factor * (1 + eps) * M``.  Leaving the ball of radius M
    below that is only flagged in ``ball_membership``.  Returns
    ``(state, report)``; with ``strict=True`` a run that does not converge
    raises :class:`MaxIterExceeded` or :class:`Divergence` carrying both.
    """
    if not budget.satisfied:
        raise DegenerateBudget("epsilon budget is not satisfied")
    if not tol > 0:
        raise ValueError("tol must be positive")
    eps = budget.epsilon
    limit = divergence_factor * (1.0 + eps) * budget.M
    report = FixedPointReport(tol=tol, epsilon=eps, M=budget.M)
    s = initial_guess
    prev_step = None
    for it in range(max_iter + 1):
        out = assemble_I(s, prev_trace, anchor, m)
        op_norms = out.sup_norms()
        comp_norms = tuple(c1c2_norm(f) for f in s.components)
        report.operator_norm_trace.append(op_norms)
        report.component_norm_trace.append(comp_norms)
        report.ball_membership.append(tuple(n <= budget.M for n in comp_norms))
        report.iterations = it + 1
        if max(op_norms) <= tol:
            report.step_ratio_trace.append(float("nan"))
            report.converged, report.stop_reason = True, "tolerance"
            break
        if max(comp_norms) > limit:
            report.step_ratio_trace.append(float("nan"))
            report.stop_reason = "divergence"
            break
        if it == max_iter:
            report.step_ratio_trace.append(float("nan"))
            report.stop_reason = "max_iter"
            break
        s_new = picard_step(s, eps, prev_trace, anchor, m, out=out)
        step = max((a - b).max_abs() for a, b in zip(s_new.components, s.components))
        ratio = step / prev_step if prev_step else float("nan")
        report.step_ratio_trace.append(ratio)
        prev_step = step
        s = s_new
    report.final_residual = max(r.max_abs() for r in nse_residual(s, "divergence"))
    report.final_residual_convective = max(r.max_abs() for r in nse_residual(s, "convective"))
    if strict and not report.converged:
        exc = Divergence if report.stop_reason == "divergence" else MaxIterExceeded
        raise exc(f"fixed-point solve stopped: {report.stop_reason}", state=s, report=report)
    return s, report


def expansiveness_probe(eps: float, sample_pairs, mode: str = "full") -> AuditReport:
    """Measure |T x - T y| / |x - y| over pairs of distinct states."""
    report = AuditReport("expansiveness")
    ratios = []
    for x, y in sample_pairs:
        d = state_norm(x - y, mode)
        if d == 0:
            raise ValueError("expansiveness pairs must be distinct")
        ratios.append(state_norm(apply_T(x, eps) - apply_T(y, eps), mode) / d)
    ratios = np.asarray(ratios)
    h = 1.0 + eps
    report.measure("ratios", ratios.tolist())
    report.measure("constant", h)
    report.check("max_ratio_deviation", np.max(np.abs(ratios - h)) if ratios.size else 0.0, 1e-12)
    report.check("expansive", float(ratios.min()) if ratios.size else h, passed=bool(ratios.size) and bool(np.all(ratios > 1.0)),
                 note="h = 1 + eps must exceed 1")
    return report


def s_bound_audit(budget: EpsilonBudget, samples, prev_trace, anchor, m: int = 1) -> AuditReport:
    """Check |S_k(s)| <= eps M + eps (3M^2 + 5M + N) mu^2 <= (1 + eps) M per sample.

    The estimate behind the bound needs every spatial side of the cell to be
    at least 1; otherwise the audit is marked ``precondition_unmet``.
    Violations are reported, never raised.
    """
    report = AuditReport("s_bound")
    eps, M, N, mu = budget.epsilon, budget.M, budget.N, budget.mu
    chain = eps * M + eps * (3 * M**2 + 5 * M + N) * mu**2
    cap = (1 + eps) * M
    report.measure("chain_bound", chain)
    report.measure("ball_bound", cap)
    samples = list(samples)
    if not samples:
        return report
    g = samples[0].grid
    sides = [hi - lo for lo, hi in g.bounds[1:]]
    report.measure("sides", sides)
    if min(sides) < 1.0:
        report.check("side_length", min(sides), 1.0, status=UNMET, note="cell sides must be >= 1")
        return report
    tr = trace_fields(g, prev_trace)
    report.measure("trace_sup", max(f.max_abs() for f in tr))
    margins = []
    for i, s in enumerate(samples):
        norms_in = [c1c2_norm(f) for f in s.components]
        if max(norms_in) > M * (1 + 1e-12):
            report.check(f"sample_{i}_in_ball", max(norms_in), M, status=UNMET)
            continue
        out = assemble_I(s, prev_trace, anchor, m)
        S = apply_S(s, eps, out)
        norms = [c1c2_norm(f) for f in S.components]
        margins.append([chain - n for n in norms])
        report.check(f"sample_{i}_chain", max(norms), chain)
        report.check(f"sample_{i}_ball", max(norms), cap)
    report.measure("margins", margins)
    return report


__all__ = [
    "EpsilonBudget", "FixedPointReport", "apply_S", "apply_T", "apply_T_inverse", "compute_M",
    "compute_N", "default_initial_guess", "expansiveness_probe", "picard_step", "s_bound_audit",
    "select_epsilon", "solve_fixed_point", "state_norm",
]
