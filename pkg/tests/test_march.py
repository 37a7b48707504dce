import numpy as np
import pytest

from nslab.decomposition import bump_initial_data, make_partition
from nslab.fixedpoint import compute_N, select_epsilon
from nslab.grid import ScalarField
from nslab.march import (
    Interval,
    SolverConfig,
    Trajectory,
    global_l2_ledger,
    interface_audit,
    ledger_audit,
    march,
    step_interval,
    theorem11_audit,
    write_ledger_csv,
)
from nslab.operators import FlowState, assemble_I, initial_trace_audit

QUICK = SolverConfig(n=8, max_iter=15)


def cell_run(cell, amplitude, horizon, config=QUICK):
    g = cell.grid(config.n)
    fields, cert = bump_initial_data(cell, g, amplitude)
    budget = select_epsilon(cell.M, compute_N(*fields), cell.mu)
    return march(cell, *fields, horizon, budget, config), (fields, cert), budget


def test_zero_data_gives_zero_trajectory():
    cells = make_partition(2)
    runs = [cell_run(c, 0.0, 3) for c in cells]
    for traj, _, _ in runs:
        assert traj.complete and len(traj.intervals) == 3
        for iv in traj.intervals:
            assert iv.report.converged and iv.report.iterations <= 2
            assert all(f.max_abs() == 0.0 for f in iv.state.components)
    rep = theorem11_audit(cells, [r[0] for r in runs], [r[1] for r in runs], [r[2] for r in runs])
    assert rep.status == "pass"
    assert {s.name for s in rep.sections} >= {"convergence", "interface", "support", "decay", "l2_ledger", "epsilon_budget"}


def test_horizon_one_matches_step_interval(unit_cell, small_bump):
    (u, v, w), _, b = small_bump
    traj = march(unit_cell, u, v, w, 1, b, QUICK)
    state, rep = step_interval(unit_cell, (u, v, w), 1, b, QUICK)
    assert len(traj.intervals) == 1
    for a, c in zip(traj.intervals[0].state.components, state.components):
        assert np.array_equal(a.values, c.values)
    assert traj.intervals[0].report.operator_norm_trace == rep.operator_norm_trace


@pytest.fixture(scope="module")
def two_interval(unit_cell, small_bump):
    (u, v, w), _, b = small_bump
    return march(unit_cell, u, v, w, 2, b, QUICK)


def test_trace_threading_is_exact(two_interval):
    first, second = two_interval.intervals
    for prev, tr in zip(first.state.velocity, second.trace):
        assert np.array_equal(prev.values[-1], tr)
    assert np.array_equal(first.state.p.values[-1], second.p_start)
    assert second.state.grid.bounds[0] == (1.0, 2.0)
    assert second.state.grid.bounds[1:] == first.state.grid.bounds[1:]


def test_second_interval_starts_on_the_trace(two_interval, unit_cell):
    iv = two_interval.intervals[1]
    out = assemble_I(iv.state, iv.trace, unit_cell.anchor(iv.state.grid), 2)
    rep = initial_trace_audit(out, iv.state, iv.trace)
    assert rep.status == "pass"
    for name in "uvw":
        assert rep.measured[f"max_trace_difference_{name}"] == 0.0


def test_interface_values_match(two_interval):
    rep = interface_audit(two_interval, value_tol=1e-9)
    values = [c for c in rep.checks if c.name.endswith("_value")]
    assert len(values) == 4 and all(c.value == 0.0 for c in values)
    derivs = [c for c in rep.checks if not c.name.endswith("_value")]
    assert len(derivs) == 4 * 7
    assert rep.status == "pass"


def test_interface_detects_injected_offset(two_interval):
    delta = 3.7e-4
    iv = two_interval.intervals[1]
    shifted = FlowState(iv.state.u + ScalarField.from_spatial(iv.state.grid, np.full(iv.state.grid.shape[1:], delta)), iv.state.v, iv.state.w, iv.state.p)
    bad = Trajectory(two_interval.cell, [two_interval.intervals[0], Interval(2, shifted, iv.report, iv.trace)], 2)
    rep = interface_audit(bad, value_tol=1e-9)
    assert rep.get("m1_u_value").value == pytest.approx(delta, rel=1e-12)
    assert rep.get("m1_u_value").status == "fail"
    assert rep.get("m1_v_value").value == 0.0


def test_divergence_aborts_march(unit_cell):
    traj, _, _ = cell_run(unit_cell, 1.0, 3)
    assert len(traj.intervals) == 1
    assert traj.stop_reason == "divergence" and not traj.complete


def test_ledger_zero_and_bound():
    cells = make_partition(3)
    runs = [cell_run(c, 0.0, 1) for c in cells]
    e = global_l2_ledger(cells, [r[0] for r in runs], 0.0)
    assert e.bound == 0.875
    assert all(v == 0.0 for v in e.totals.values())
    assert ledger_audit([e], cells).status == "pass"


def test_ledger_single_cell_cap(unit_cell):
    # data at sup exactly M_1 (odd grid, so the peak is a node): the integral cannot exceed M_1^2 mu = 1/2
    g = unit_cell.grid(9)
    fields, _ = bump_initial_data(unit_cell, g, unit_cell.M)
    traj = Trajectory(unit_cell, [Interval(1, FlowState(*fields, ScalarField.zeros(g)), None, None)], 1)
    e = global_l2_ledger([unit_cell], [traj], 0.0)
    assert e.sups[0]["u"] == pytest.approx(unit_cell.M, rel=1e-15)
    assert e.integrals[0]["u"] <= e.sups[0]["u"] ** 2 * unit_cell.mu
    assert e.integrals[0]["u"] <= 0.5
    assert e.holder_ok()


def test_ledger_totals_and_monotonicity():
    cells = make_partition(3)
    trajs = [cell_run(c, 1e-2, 1)[0] for c in cells]
    e2 = global_l2_ledger(cells[:2], trajs[:2], 1.0)
    e3 = global_l2_ledger(cells, trajs, 1.0)
    for name in "uvwp":
        assert e3.totals[name] == sum(r[name] for r in e3.integrals)
        assert e3.totals[name] >= e2.totals[name]
    assert e3.C1 == max(e3.totals.values())


def test_ledger_csv(tmp_path):
    cells = make_partition(2)
    trajs = [cell_run(c, 1e-3, 1)[0] for c in cells]
    entries = [global_l2_ledger(cells, trajs, t) for t in (0.0, 1.0)]
    lines = write_ledger_csv(entries, tmp_path / "l.csv").read_text().splitlines()
    assert lines[0].startswith("t,cell1_u") and lines[0].endswith("total_p,bound")
    assert len(lines) == 3


def test_master_audit_small_run():
    cells = make_partition(2)
    runs = [cell_run(c, 1e-3, 2) for c in cells]
    rep = theorem11_audit(cells, [r[0] for r in runs], [r[1] for r in runs], [r[2] for r in runs])
    sections = {s.name: s for s in rep.sections}
    assert all(s.checks for s in sections.values())
    for name in ("initial_trace", "epsilon_budget", "interface", "decay", "l2_ledger", "ball_membership"):
        assert sections[name].status == "pass", name
    assert np.isfinite(sections["nse_residual"].checks[0].value)
    assert len(rep.measured["ledger"]) == 3


def test_master_audit_flags_ball_exit(unit_cell):
    traj, data, b = cell_run(unit_cell, 1.0, 1, SolverConfig(n=8, max_iter=3, divergence_factor=1e6))
    rep = theorem11_audit([unit_cell], [traj], [data], [b])
    sections = {s.name: s for s in rep.sections}
    assert sections["ball_membership"].status == "warn"
    assert rep.status in ("warn", "fail")
