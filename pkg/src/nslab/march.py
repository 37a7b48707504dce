"""Unit-interval time marching per cell, interface matching and the global L2 ledger."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .audit import INFO, WARN, AuditReport
from .decomposition import DomainCell, decay_audit, support_audit
from .fixedpoint import EpsilonBudget, FixedPointReport, default_initial_guess, solve_fixed_point
from .grid import ScalarField, difference_array, trapezoid_weights
from .operators import FlowState, as_trace, assemble_I, initial_trace_audit

COMPONENTS = ("u", "v", "w", "p")
DERIVATIVES = (("t", 1), ("x", 1), ("x", 2), ("y", 1), ("y", 2), ("z", 1), ("z", 2))


@dataclass(frozen=True)
class SolverConfig:
    n: int = 8
    n_t: int | None = None
    tol: float = 1e-9
    max_iter: int = 500
    divergence_factor: float = 10.0
    thread_pressure: bool = True


@dataclass
class Interval:
    m: int
    state: FlowState
    report: FixedPointReport
    trace: tuple
    p_start: np.ndarray | None = None


@dataclass
class Trajectory:
    cell: DomainCell
    intervals: list = field(default_factory=list)
    horizon: int = 0

    @property
    def complete(self) -> bool:
        return len(self.intervals) == self.horizon and all(iv.report.stop_reason != "divergence" for iv in self.intervals)

    @property
    def stop_reason(self) -> str:
        return self.intervals[-1].report.stop_reason if self.intervals else ""

    def interval_at(self, t: float) -> tuple:
        """(interval, time node index) holding global time ``t``."""
        for iv in self.intervals:
            lo, hi = iv.state.grid.bounds[0]
            if lo - 1e-12 <= t <= hi + 1e-12:
                return iv, iv.state.grid.nearest_index("t", t)
        raise ValueError(f"time {t} outside the computed horizon")


def step_interval(cell: DomainCell, prev_trace, m: int, budget: EpsilonBudget, config: SolverConfig = SolverConfig(), p_start=None):
    """Solve I^{m} = 0 on [m-1, m] x cell for the given initial trace."""
    grid = cell.grid(config.n, m=m, n_t=config.n_t)
    anchor = cell.anchor(grid)
    guess = default_initial_guess(grid, prev_trace, p_start)
    return solve_fixed_point(guess, prev_trace, anchor, m, budget, config.tol, config.max_iter, config.divergence_factor)


def march(cell: DomainCell, u0, v0, w0, horizon: int, budget: EpsilonBudget, config: SolverConfig = SolverConfig()) -> Trajectory:
    """Solve intervals 1..horizon in sequence, passing each final slice on as the next trace.

    Non-convergence within ``max_iter`` is recorded and marching continues;
    divergence ends the march with a partial trajectory.
    """
    traj = Trajectory(cell=cell, horizon=horizon)
    grid0 = cell.grid(config.n, m=1, n_t=config.n_t)
    trace = as_trace((u0, v0, w0), grid0)
    p_start = None
    for m in range(1, horizon + 1):
        state, report = step_interval(cell, trace, m, budget, config, p_start)
        traj.intervals.append(Interval(m, state, report, trace, p_start))
        if report.stop_reason == "divergence":
            break
        trace = tuple(f.values[-1] for f in state.velocity)
        p_start = state.p.values[-1] if config.thread_pressure else None
    return traj


def _slice_derivative(f: ScalarField, axis: str, order: int, i: int) -> np.ndarray:
    return difference_array(f.values, f.grid, axis, order)[i]


def interface_audit(traj: Trajectory, value_tol: float = 1e-9, derivative_tol: float | None = None) -> AuditReport:
    """Compare adjacent interval states at every integer interface.

    For each of u, v, w, p the value and the derivatives t, x, xx, y, yy, z,
    zz are taken on each side (one-sided in t) and their max mismatch is
    reported.  Values are asserted against ``value_tol``; derivatives only
    when ``derivative_tol`` is given.
    """
    report = AuditReport("interface")
    for left, right in zip(traj.intervals, traj.intervals[1:]):
        for name, fl, fr in zip(COMPONENTS, left.state.components, right.state.components):
            mism = float(np.max(np.abs(fl.values[-1] - fr.values[0])))
            report.check(f"m{left.m}_{name}_value", mism, value_tol)
            for axis, order in DERIVATIVES:
                d = float(np.max(np.abs(_slice_derivative(fl, axis, order, -1) - _slice_derivative(fr, axis, order, 0))))
                label = f"m{left.m}_{name}_{axis * order}"
                if derivative_tol is None:
                    report.check(label, d, status=INFO)
                else:
                    report.check(label, d, derivative_tol)
    return report


@dataclass
class LedgerEntry:
    t: float
    integrals: list
    sups: list
    totals: dict
    bound: float
    caps: list
    measures: list
    C1: float = float("nan")
    weight_sums: list = field(default_factory=list)

    def holder_ok(self) -> bool:
        """int |f|^2 <= sup|f|^2 * mu for every cell and component (discrete Hoelder step)."""
        return all(
            self.integrals[c][name] <= self.sups[c][name] ** 2 * self.weight_sums[c] * (1 + 1e-12)
            for c in range(len(self.integrals)) for name in COMPONENTS
        )

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "integrals": self.integrals,
            "sups": self.sups,
            "totals": self.totals,
            "bound": self.bound,
            "caps": self.caps,
            "measures": self.measures,
            "C1": self.C1,
        }


def global_l2_ledger(cells, trajectories, t: float) -> LedgerEntry:
    """Per-cell trapezoid L2 integrals at time ``t`` and their sum against sum_j 2^-j."""
    integrals, sups, wsums = [], [], []
    for cell, traj in zip(cells, trajectories):
        iv, i = traj.interval_at(t)
        w = trapezoid_weights(iv.state.grid)[0]
        wsums.append(float(np.sum(w)))
        row, srow = {}, {}
        for name, f in zip(COMPONENTS, iv.state.components):
            sl = f.values[i]
            row[name] = float(np.sum(w * sl * sl))
            srow[name] = float(np.max(np.abs(sl)))
        integrals.append(row)
        sups.append(srow)
    totals = {name: float(sum(r[name] for r in integrals)) for name in COMPONENTS}
    bound = float(sum(2.0 ** (-c.j) for c in cells))
    entry = LedgerEntry(
        t=float(t), integrals=integrals, sups=sups, totals=totals, bound=bound,
        caps=[c.M for c in cells], measures=[c.mu for c in cells], weight_sums=wsums,
    )
    entry.C1 = max(totals.values())
    return entry


def ledger_audit(entries, cells) -> AuditReport:
    """Assert the Hoelder step always and the 2^-j bound wherever sup|f| <= M_j held."""
    report = AuditReport("l2_ledger")
    for e in entries:
        for c, cell in enumerate(cells):
            for name in COMPONENTS:
                lhs, sup = e.integrals[c][name], e.sups[c][name]
                report.check(f"t{e.t:g}_cell{cell.j}_{name}_holder", lhs, sup**2 * e.weight_sums[c] * (1 + 1e-12))
                cap = 2.0 ** (-cell.j)
                if sup <= cell.M:
                    report.check(f"t{e.t:g}_cell{cell.j}_{name}_cap", lhs, cap * (1 + 1e-12))
                else:
                    report.check(f"t{e.t:g}_cell{cell.j}_{name}_cap", lhs, cap, status=WARN,
                                 note="sup exceeds M_j, bound not applicable")
        for name in COMPONENTS:
            in_ball = all(e.sups[c][name] <= cell.M for c, cell in enumerate(cells))
            report.check(f"t{e.t:g}_total_{name}", e.totals[name], e.bound,
                         status=None if in_ball else INFO)
    report.measure("C1", max((e.C1 for e in entries), default=0.0))
    report.measure("bound", entries[0].bound if entries else 0.0)
    return report


def write_ledger_csv(entries, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        ncell = len(entries[0].integrals) if entries else 0
        header = ["t"] + [f"cell{c + 1}_{n}" for c in range(ncell) for n in COMPONENTS]
        header += [f"total_{n}" for n in COMPONENTS] + ["bound"]
        writer.writerow(header)
        for e in entries:
            row = [e.t] + [e.integrals[c][n] for c in range(ncell) for n in COMPONENTS]
            row += [e.totals[n] for n in COMPONENTS] + [e.bound]
            writer.writerow([repr(float(x)) for x in row])
    return path


def theorem11_audit(cells, trajectories, data=None, budgets=None, times=None, value_tol: float | None = None) -> AuditReport:
    """Aggregate every audit of a multi-cell run into one document.

    ``data`` is an optional per-cell list of ``(fields, (K, k))`` pairs for
    the decay audit of the inputs; ``budgets`` the per-cell EpsilonBudget.
    """
    master = AuditReport("theorem11")
    conv = master.add_section(AuditReport("convergence"))
    resid = master.add_section(AuditReport("nse_residual"))
    balls = master.add_section(AuditReport("ball_membership"))
    traces = master.add_section(AuditReport("initial_trace"))
    for cell, traj in zip(cells, trajectories):
        conv.check(f"cell{cell.j}_complete", float(len(traj.intervals)), passed=traj.complete,
                   note=traj.stop_reason)
        for iv in traj.intervals:
            r = iv.report
            label = f"cell{cell.j}_m{iv.m}"
            conv.check(label, r.final_operator_norm, r.tol, passed=r.converged, note=r.stop_reason)
            resid.check(f"{label}_divergence_form", r.final_residual, status=INFO)
            resid.check(f"{label}_convective_form", r.final_residual_convective, status=INFO)
            balls.check(label, float(r.ever_left_ball), status=WARN if r.ever_left_ball else None, passed=True)
            anchor = cell.anchor(iv.state.grid)
            out = assemble_I(iv.state, iv.trace, anchor, iv.m)
            ita = initial_trace_audit(out, iv.state, iv.trace, tol=value_tol or max(r.tol, 1e-6))
            for c in ita.checks:
                traces.check(f"{label}_{c.name}", c.value, c.threshold, status=c.status)
    if budgets is not None:
        bsec = master.add_section(AuditReport("epsilon_budget"))
        for cell, b in zip(cells, budgets):
            bsec.check(f"cell{cell.j}", b.lhs, b.M * (1 + 1e-12), passed=b.satisfied)
            bsec.measure(f"cell{cell.j}", b.to_dict())
    iface = master.add_section(AuditReport("interface"))
    for cell, traj in zip(cells, trajectories):
        if len(traj.intervals) >= 2:
            tol = value_tol if value_tol is not None else traj.intervals[0].report.tol
            sub = interface_audit(traj, value_tol=tol)
            for c in sub.checks:
                iface.check(f"cell{cell.j}_{c.name}", c.value, c.threshold, status=c.status)
    supp = master.add_section(AuditReport("support"))
    for cell, traj in zip(cells, trajectories):
        for iv in traj.intervals:
            for name, f in zip(COMPONENTS, iv.state.components):
                sa = support_audit(f, cell.inner_box, threshold=iv.report.tol)
                c = sa.checks[0]
                supp.check(f"cell{cell.j}_m{iv.m}_{name}", c.value, c.threshold,
                           status=WARN if c.status != "pass" else None, passed=True)
    if data is not None:
        dsec = master.add_section(AuditReport("decay"))
        for cell, (fields, (K, k)) in zip(cells, data):
            da = decay_audit(fields, K, k)
            dsec.check(f"cell{cell.j}", da.get("weighted_max").value, K)
            sa = [support_audit(f, cell.inner_box) for f in fields]
            dsec.check(f"cell{cell.j}_input_support", max(s.checks[0].value for s in sa), 0.0)
    if times is None:
        times = sorted({0.0} | {float(iv.m) for traj in trajectories for iv in traj.intervals})
        reach = min((traj.intervals[-1].m for traj in trajectories if traj.intervals), default=0)
        times = [t for t in times if t <= reach]
    entries = [global_l2_ledger(cells, trajectories, t) for t in times]
    master.add_section(ledger_audit(entries, cells))
    master.measure("ledger", [e.to_dict() for e in entries])
    return master
