import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslab.errors import AnchorOutOfRange, DegenerateAxis, GridMismatch
from nslab.grid import (
    Grid,
    ScalarField,
    anchored_cumulative_integral,
    c1c2_norm,
    finite_difference,
    load_field,
    make_uniform_grid,
    save_field,
    time_running_integral,
)

from conftest import const, unit_grid


def line_grid(nx, xb=(0.0, 1.0), nt=5):
    return make_uniform_grid((0, 1), xb, (0, 1), (0, 1), nt, nx, 5, 5)


def test_uniform_spacing():
    g = make_uniform_grid((0, 1), (0, 1), (0, 1), (0, 1), 5, 5, 5, 5)
    assert g.spacing == (0.25, 0.25, 0.25, 0.25)
    assert line_grid(9, (0, 2)).h_x == 0.25


@pytest.mark.parametrize("bad", [3, 4])
def test_too_few_nodes(bad):
    with pytest.raises(DegenerateAxis):
        line_grid(bad)


def test_bad_bounds():
    with pytest.raises(DegenerateAxis):
        make_uniform_grid((0, 1), (1, 1), (0, 1), (0, 1), 5, 5, 5, 5)
    with pytest.raises(DegenerateAxis):
        make_uniform_grid((0, 1), (0, np.inf), (0, 1), (0, 1), 5, 5, 5, 5)


def test_field_rejects_nonfinite_and_is_readonly():
    g = unit_grid(5)
    a = np.zeros(g.shape)
    a[0, 0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, a)
    f = ScalarField.zeros(g)
    with pytest.raises(ValueError):
        f.values[0, 0, 0, 0] = 1.0


def test_arithmetic_needs_same_grid():
    f = ScalarField.zeros(unit_grid(5))
    h = ScalarField.zeros(unit_grid(6))
    with pytest.raises(GridMismatch):
        f + h
    with pytest.raises(GridMismatch):
        f * h


@pytest.mark.parametrize("axis", "txyz")
def test_derivative_of_constant(axis):
    f = ScalarField.from_function(unit_grid(6), const(3.5))
    assert finite_difference(f, axis, 1).max_abs() < 1e-12


def test_second_difference_exact_on_quadratic():
    g = line_grid(7)
    f = ScalarField.from_function(g, lambda t, x, y, z: x**2 + 0 * (t + y + z))
    d2 = finite_difference(f, "x", 2)
    np.testing.assert_allclose(d2.values, 2.0, atol=1e-10)


def test_second_difference_sin_order():
    errs = []
    for h in (0.05, 0.025):
        g = line_grid(int(round(1 / h)) + 1)
        f = ScalarField.from_function(g, lambda t, x, y, z: np.sin(x) + 0 * (t + y + z))
        _, X, _, _ = g.mesh()
        errs.append(np.max(np.abs(finite_difference(f, "x", 2).values + np.sin(X))))
    assert errs[0] <= 1e-2
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.3)


def test_second_time_difference_rejected():
    with pytest.raises(ValueError):
        finite_difference(ScalarField.zeros(unit_grid(5)), "t", 2)


def test_anchored_double_integral_of_one():
    g = line_grid(9)
    f = ScalarField.from_function(g, const(1.0))
    for a in (0, 4, 8):
        x0 = g.coords("x")[a]
        _, X, _, _ = g.mesh()
        F = anchored_cumulative_integral(f, "x", a, 2)
        np.testing.assert_allclose(F.values, np.broadcast_to((X - x0) ** 2 / 2, g.shape), atol=1e-14)


def test_anchored_integral_zero_and_anchor_plane():
    g = line_grid(9)
    for mult in (1, 2):
        assert anchored_cumulative_integral(ScalarField.zeros(g), "x", 3, mult).max_abs() == 0.0
    f = ScalarField.from_function(g, lambda t, x, y, z: np.exp(x) * (1 + y) + t * z)
    F = anchored_cumulative_integral(f, "x", 3, 2)
    assert np.all(F.values[:, 3] == 0.0)


def test_anchor_out_of_range():
    with pytest.raises(AnchorOutOfRange):
        anchored_cumulative_integral(ScalarField.zeros(line_grid(6)), "x", 6, 1)


def test_cos_double_integral_order():
    errs = []
    for h in (0.02, 0.01):
        g = line_grid(int(round(1 / h)) + 1)
        f = ScalarField.from_function(g, lambda t, x, y, z: np.cos(x) + 0 * (t + y + z))
        _, X, _, _ = g.mesh()
        errs.append(np.max(np.abs(anchored_cumulative_integral(f, "x", 0, 2).values - (1 - np.cos(X)))))
    assert errs[0] <= 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.3)


def test_time_running_integral():
    g = make_uniform_grid((0, 1), (0, 1), (0, 1), (0, 1), 101, 5, 5, 5)
    T, _, _, _ = g.mesh()
    one = time_running_integral(ScalarField.from_function(g, const(1.0)))
    np.testing.assert_allclose(one.values, np.broadcast_to(T, g.shape), atol=1e-14)
    assert time_running_integral(ScalarField.zeros(g)).max_abs() == 0.0
    ex = time_running_integral(ScalarField.from_function(g, lambda t, x, y, z: np.exp(t) + 0 * (x + y + z)))
    assert np.max(np.abs(ex.values - (np.exp(T) - 1))) <= 1e-4
    shifted = time_running_integral(ScalarField.from_function(g, const(1.0)), t_start=40)
    np.testing.assert_allclose(shifted.values, np.broadcast_to(T - T.flat[40], g.shape), atol=1e-14)


def test_c1c2_norm_examples():
    g = line_grid(401)
    assert c1c2_norm(ScalarField.zeros(g)) == 0.0
    lin = ScalarField.from_function(line_grid(9), lambda t, x, y, z: x + 0 * (t + y + z))
    assert c1c2_norm(lin) == pytest.approx(1.0, abs=1e-12)
    s = ScalarField.from_function(g, lambda t, x, y, z: np.sin(2 * np.pi * x) + 0 * (t + y + z))
    assert c1c2_norm(s) == pytest.approx(4 * np.pi**2, rel=0.01)
    assert c1c2_norm(s, "sup") == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    a=st.floats(-5, 5), b=st.floats(-5, 5),
    anchor=st.integers(0, 6), mult=st.sampled_from([1, 2]), axis=st.sampled_from("xyz"),
)
def test_cumulative_integral_is_linear(a, b, anchor, mult, axis):
    g = unit_grid(7, n_t=5)
    f = ScalarField.from_function(g, lambda t, x, y, z: np.sin(x + 2 * y) * np.exp(z) + t)
    h = ScalarField.from_function(g, lambda t, x, y, z: x * y - z**3)
    lhs = anchored_cumulative_integral(f * a + h * b, axis, anchor, mult)
    rhs = anchored_cumulative_integral(f, axis, anchor, mult) * a + anchored_cumulative_integral(h, axis, anchor, mult) * b
    assert np.allclose(lhs.values, rhs.values, atol=1e-12 * (1 + abs(a) + abs(b)) * 10)


def test_refine_and_nearest_index():
    g = unit_grid(5)
    r = g.refine(2)
    assert r.counts == (9, 9, 9, 9)
    assert np.allclose(r.coords("x")[::2], g.coords("x"))
    assert g.nearest_index("x", 0.49) == 2


def test_snapshot_roundtrip(tmp_path):
    g = make_uniform_grid((1, 2), (0, 1), (0, 2), (0, 1), 5, 6, 7, 5)
    f = ScalarField.from_function(g, lambda t, x, y, z: t + 10 * x + 100 * y + 1000 * z)
    p = save_field(tmp_path / "sub" / "f.npz", f, "phi")
    back = load_field(p)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
    raw = np.load(p)
    assert str(raw["format"]) == "nslab-field"
    assert raw["values"].shape == (int(np.prod(g.shape)),)
    assert np.array_equal(raw["values"].reshape(g.shape), f.values)
