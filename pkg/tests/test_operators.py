import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslab.decomposition import bump_initial_data, make_partition
from nslab.grid import ScalarField, make_uniform_grid
from nslab.operators import (
    FlowState,
    as_trace,
    assemble_I,
    initial_trace_audit,
    lemma32_audit,
    lemma32_discrepancy,
    nse_residual,
    observed_order,
    stationary_constraint_residual,
)
from nslab.oracle import smooth_fields

from conftest import const, unit_grid


def taylor_green(n):
    g = make_uniform_grid((0, 1), (0, np.pi), (0, np.pi), (0, 1), n, n, n, 5)
    return FlowState.from_functions(
        g,
        lambda t, x, y, z: np.cos(x) * np.sin(y) * np.exp(-2 * t) + 0 * z,
        lambda t, x, y, z: -np.sin(x) * np.cos(y) * np.exp(-2 * t) + 0 * z,
        const(0.0),
        lambda t, x, y, z: -0.25 * (np.cos(2 * x) + np.cos(2 * y)) * np.exp(-4 * t) + 0 * z,
    )


def test_zero_state(zero_state):
    out = assemble_I(zero_state, zero_state, (0, 0, 0))
    assert out.sup_norms() == (0.0, 0.0, 0.0, 0.0)
    for form in ("divergence", "convective"):
        assert all(r.max_abs() == 0.0 for r in nse_residual(zero_state, form))
    assert max(lemma32_discrepancy(zero_state, zero_state, (0, 0, 0))) == 0.0


def test_residual_of_linear_pressure(grid8):
    s = FlowState.from_functions(grid8, const(0), const(0), const(0), lambda t, x, y, z: x + 0 * (t + y + z))
    for form in ("divergence", "convective"):
        r1, r2, r3, r4 = nse_residual(s, form)
        np.testing.assert_allclose(r1.values, 1.0, atol=1e-12)
        assert max(r.max_abs() for r in (r2, r3, r4)) < 1e-12


@pytest.mark.parametrize("form", ["divergence", "convective"])
def test_taylor_green_second_order(form):
    errs = [max(r.max_abs() for r in nse_residual(taylor_green(n), form)) for n in (9, 17, 33)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert ratios[-1] == pytest.approx(4.0, abs=0.4)
    assert errs[-1] < 0.02


@pytest.mark.parametrize("anchor", [(0, 0, 0), (3, 5, 2)])
def test_unit_pressure_closed_form(grid8, anchor):
    s = FlowState.from_functions(grid8, const(0), const(0), const(0), const(1.0))
    out = assemble_I(s, s, anchor)
    T, X, Y, Z = grid8.mesh()
    x0, y0, z0 = (grid8.coords(a)[i] for a, i in zip("xyz", anchor))
    dx, dy, dz = X - x0, Y - y0, Z - z0
    expected = (
        T * dx * dy**2 * dz**2 / 4,
        T * dx**2 * dy * dz**2 / 4,
        T * dx**2 * dy**2 * dz / 4,
    )
    for Ik, e in zip(out.components[:3], expected):
        np.testing.assert_allclose(Ik.values, np.broadcast_to(e, grid8.shape), atol=1e-14)
    assert out.I4.max_abs() == 0.0


def test_anchor_hyperplanes(grid8):
    fs = smooth_fields(3)
    s = FlowState.from_functions(grid8, *fs)
    a = (2, 4, 5)
    out = assemble_I(s, FlowState.zeros(grid8), a)
    idx = lambda ax, i: tuple([slice(None)] * (1 + ax) + [i])
    for Ik in out.components[:3]:
        v = Ik.values
        assert np.all(v[:, a[0], a[1], :] == 0)
        assert np.all(v[:, a[0], :, a[2]] == 0)
        assert np.all(v[:, :, a[1], a[2]] == 0)
        assert np.max(np.abs(v[idx(0, a[0])])) > 0
    for ax in range(3):
        assert np.all(out.I4.values[idx(ax, a[ax])] == 0)
    assert np.all(out.I4.values[0] == 0)


def test_trace_formats_agree(grid8):
    s = FlowState.from_functions(grid8, *smooth_fields(1))
    arrays = tuple(f.values[0] for f in s.velocity)
    ref = assemble_I(s, s, (0, 0, 0))
    for trace in (arrays, s.velocity):
        out = assemble_I(s, trace, (0, 0, 0))
        for a, b in zip(out.components, ref.components):
            assert np.array_equal(a.values, b.values)
    assert all(np.array_equal(a, b) for a, b in zip(as_trace(s, grid8), arrays))


@settings(max_examples=20, deadline=None)
@given(lam=st.floats(-3, 3, allow_nan=False))
def test_divergence_operator_is_homogeneous(lam):
    g = unit_grid(6)
    s = FlowState.from_functions(g, *smooth_fields(2))
    base = assemble_I(s, s, (1, 2, 3)).I4.values
    scaled = assemble_I(s.scaled(lam), s.scaled(lam), (1, 2, 3)).I4.values
    np.testing.assert_allclose(scaled, lam * base, atol=1e-13)


def test_lemma_audit_smooth_order():
    levels = []
    for n in (9, 17):
        g = unit_grid(n)
        levels.append(FlowState.from_functions(g, *smooth_fields(0)))
    rep = lemma32_audit(levels[0], levels[0], (0, 0, 0), refined=(levels[1], levels[1], (0, 0, 0)))
    assert rep.status == "pass"
    assert all(abs(o - 2.0) <= 0.35 for o in rep.measured["order"])


def test_lemma_audit_tol_marks_failures(grid8):
    s = FlowState.from_functions(grid8, *smooth_fields(0))
    assert lemma32_audit(s, s, (0, 0, 0), tol=1e-12).status == "fail"


def test_observed_order():
    assert observed_order(4.0, 1.0, 2.0) == pytest.approx(2.0)
    assert np.isnan(observed_order(0.0, 1.0))


def test_initial_trace_exact(grid8):
    s = FlowState.from_functions(grid8, *smooth_fields(5))
    out = assemble_I(s, s, (0, 0, 0))
    rep = initial_trace_audit(out, s, s)
    assert rep.status == "pass"
    assert all(rep.get(f"first_term_{c}").value <= 1e-12 for c in "uvw")
    assert all(rep.get(f"recovered_{c}").value <= 1e-12 for c in "uvw")


def test_initial_trace_constant_offset(grid8):
    s = FlowState.from_functions(grid8, *smooth_fields(5))
    c = 0.25
    trace = tuple(f.values[0] - c for f in s.velocity)
    rep = initial_trace_audit(assemble_I(s, trace, (2, 2, 2)), s, trace)
    for name in "uvw":
        assert rep.measured[f"max_trace_difference_{name}"] == pytest.approx(c, abs=1e-14)
        assert rep.get(f"recovered_{name}").value <= 1e-9
        assert rep.get(f"first_term_{name}").value <= 1e-12


def test_stationary_constraints():
    cell = make_partition(1)[0]
    g = cell.grid(8)
    z = ScalarField.zeros(g)
    assert stationary_constraint_residual(z, z, z, z, 7, (0, 0, 0)) == (0.0, 0.0, 0.0, 0.0)
    (u, v, w), _ = bump_initial_data(cell, g, 1.0)
    r = stationary_constraint_residual(u, v, w, z, 7, (0, 0, 0))
    assert r[3] > 1e-6
    lam = 0.37
    (u2, v2, w2), _ = bump_initial_data(cell, g, lam)
    r2 = stationary_constraint_residual(u2, v2, w2, z, 7, (0, 0, 0))
    assert r2[3] == pytest.approx(lam * r[3], rel=1e-12)
    assert stationary_constraint_residual(u, v, w, z, 0, (0, 0, 0))[3] == 0.0
