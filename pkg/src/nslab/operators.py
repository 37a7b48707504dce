"""Integral operators I_1..I_4 of the fixed-point reformulation, NSE residuals and their audits.

Notation used in comments: X^k, Y^k, Z^k is the anchored trapezoid
antiderivative of multiplicity k along that axis (k = 0: the integrand is
evaluated pointwise on that axis) and T the running time integral from the
start of the interval.  With this shorthand

    I_1 = X2Y2Z2(u - u_prev) + T[X1Y2Z2(u u) + X2Y1Z2(u v) + X2Y2Z1(u w)]
          + T[X1Y2Z2(p)] - T[Y2Z2(u) + X2Z2(u) + X2Y2(u)]
    I_4 = T[X1Y2Z2(u) + X2Y1Z2(v) + X2Y2Z1(w)]

and I_2, I_3 follow by moving the single layer of the pressure term onto
y (resp. z).  Differentiating once in t and twice in each of x, y, z
recovers the divergence-form momentum equations and u_x + v_y + w_z.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audit import INFO, AuditReport
from .errors import GridMismatch
from .grid import (
    SPATIAL_AXES,
    Grid,
    ScalarField,
    cumulative_array,
    difference_array,
)

FORMS = ("divergence", "convective")


@dataclass(frozen=True, eq=False)
class FlowState:
    """Velocity components and pressure on one shared grid."""

    u: ScalarField
    v: ScalarField
    w: ScalarField
    p: ScalarField

    def __post_init__(self):
        g = self.u.grid
        if any(f.grid != g for f in (self.v, self.w, self.p)):
            raise GridMismatch("u, v, w, p must share one grid")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def components(self) -> tuple:
        return (self.u, self.v, self.w, self.p)

    @property
    def velocity(self) -> tuple:
        return (self.u, self.v, self.w)

    @classmethod
    def zeros(cls, grid: Grid) -> "FlowState":
        z = ScalarField.zeros(grid)
        return cls(z, z, z, z)

    @classmethod
    def from_arrays(cls, grid: Grid, u, v, w, p) -> "FlowState":
        return cls(*(ScalarField(grid, a) for a in (u, v, w, p)))

    @classmethod
    def from_functions(cls, grid: Grid, fu, fv, fw, fp) -> "FlowState":
        return cls(*(ScalarField.from_function(grid, f) for f in (fu, fv, fw, fp)))

    def scaled(self, a: float) -> "FlowState":
        return FlowState(*(a * f for f in self.components))

    def __add__(self, other: "FlowState") -> "FlowState":
        return FlowState(*(f + g for f, g in zip(self.components, other.components)))

    def __sub__(self, other: "FlowState") -> "FlowState":
        return FlowState(*(f - g for f, g in zip(self.components, other.components)))

    def time_slice(self, i: int) -> tuple:
        return tuple(f.values[i] for f in self.components)


def as_trace(prev_trace, grid: Grid) -> tuple:
    """Normalize an initial trace to three spatial arrays on ``grid``.

    Accepts a FlowState or a sequence of three ScalarFields (the first time
    slice is used) or of three spatial arrays.
    """
    if isinstance(prev_trace, FlowState):
        prev_trace = prev_trace.velocity
    if len(prev_trace) != 3:
        raise ValueError("a trace has exactly three components (u, v, w)")
    out = []
    for f in prev_trace:
        if isinstance(f, ScalarField):
            if f.grid.shape[1:] != grid.shape[1:] or f.grid.bounds[1:] != grid.bounds[1:]:
                raise GridMismatch("trace and state must share the spatial grid")
            out.append(f.values[0])
        else:
            a = np.asarray(f, dtype=float)
            if a.shape != grid.shape[1:]:
                raise GridMismatch(f"trace shape {a.shape} != spatial shape {grid.shape[1:]}")
            out.append(a)
    return tuple(out)


def trace_fields(grid: Grid, trace) -> tuple:
    """Constant-in-time extension of a trace onto ``grid``."""
    return tuple(ScalarField.from_spatial(grid, a) for a in as_trace(trace, grid))


def _layers(a, grid, mult, anchor, time=False):
    # fixed order x, y, z, then t keeps results bit-reproducible
    for k, m in enumerate(mult):
        if m:
            a = cumulative_array(a, grid, SPATIAL_AXES[k], anchor[k], m)
    if time:
        a = cumulative_array(a, grid, "t", 0, 1)
    return a


def _slot(k, m_at_k, default=2):
    mult = [default] * 3
    mult[k] = m_at_k
    return tuple(mult)


def _check_anchor(anchor, grid):
    anchor = tuple(int(i) for i in anchor)
    if len(anchor) != 3:
        raise ValueError("anchor is three node indices (x0, y0, z0)")
    return anchor


def _check_interval(grid: Grid, m: int):
    lo, hi = grid.bounds[0]
    if m is not None and not (np.isclose(lo, m - 1) and np.isclose(hi, m)):
        raise GridMismatch(f"step m={m} needs the time axis [{m - 1}, {m}], got [{lo}, {hi}]")


@dataclass(frozen=True, eq=False)
class OperatorOutput:
    I1: ScalarField
    I2: ScalarField
    I3: ScalarField
    I4: ScalarField
    m: int
    anchor: tuple
    initial_trace_id: str = ""

    @property
    def components(self) -> tuple:
        return (self.I1, self.I2, self.I3, self.I4)

    def sup_norms(self) -> tuple:
        return tuple(f.max_abs() for f in self.components)


def assemble_arrays(u, v, w, p, trace, grid: Grid, anchor) -> tuple:
    """The four operator fields as plain arrays (no validation)."""
    vel = (u, v, w)
    out = []
    for k in range(3):
        f = vel[k]
        acc = _layers(f - trace[k], grid, (2, 2, 2), anchor)
        time_part = 0.0
        for j in range(3):
            time_part = time_part + _layers(vel[j] * f, grid, _slot(j, 1), anchor)
        time_part = time_part + _layers(p, grid, _slot(k, 1), anchor)
        for j in range(3):
            time_part = time_part - _layers(f, grid, _slot(j, 0), anchor)
        acc = acc + cumulative_array(time_part, grid, "t", 0, 1)
        out.append(acc)
    div_part = 0.0
    for j in range(3):
        div_part = div_part + _layers(vel[j], grid, _slot(j, 1), anchor)
    out.append(cumulative_array(div_part, grid, "t", 0, 1))
    return tuple(out)


def assemble_I(s: FlowState, prev_trace, anchor, m: int = 1, trace_id: str = "", check_interval: bool = False) -> OperatorOutput:
    """Discrete I_1..I_4 for the interval [m-1, m].

    ``prev_trace`` supplies u, v, w at t = m-1 (see :func:`as_trace`);
    ``anchor`` is the node index triple of (x0, y0, z0).  The time integral
    always starts at the first time node of ``s.grid``; pass
    ``check_interval=True`` to insist that the time axis is [m-1, m].
    """
    g = s.grid
    anchor = _check_anchor(anchor, g)
    if check_interval:
        _check_interval(g, m)
    trace = as_trace(prev_trace, g)
    # time integration is linear, so the time-integrated terms share one T
    arrays = assemble_arrays(*(f.values for f in s.components), trace, g, anchor)
    return OperatorOutput(*(ScalarField(g, a) for a in arrays), m=m, anchor=anchor, initial_trace_id=trace_id)


def nse_residual(s: FlowState, form: str = "divergence") -> tuple:
    """Discrete left-hand sides (r1, r2, r3, r4) of the momentum and continuity equations.

    rho = nu = 1.  ``divergence`` uses (u u)_x + (u v)_y + (u w)_z,
    ``convective`` uses u u_x + v u_y + w u_z.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    g = s.grid
    vel = tuple(f.values for f in s.velocity)
    p = s.p.values
    d = lambda a, ax, order=1: difference_array(a, g, ax, order)  # noqa: E731
    res = []
    for k in range(3):
        f = vel[k]
        r = d(f, "t") + d(p, SPATIAL_AXES[k])
        for j, ax in enumerate(SPATIAL_AXES):
            if form == "divergence":
                r = r + d(vel[j] * f, ax)
            else:
                r = r + vel[j] * d(f, ax)
        for ax in SPATIAL_AXES:
            r = r - d(f, ax, 2)
        res.append(r)
    res.append(d(vel[0], "x") + d(vel[1], "y") + d(vel[2], "z"))
    return tuple(ScalarField(g, r) for r in res)


def mixed_derivative(a: np.ndarray, grid: Grid, time: bool = True) -> np.ndarray:
    """d_t (optional) then d_xx d_yy d_zz, all with the second-order stencils."""
    if time:
        a = difference_array(a, grid, "t", 1)
    for ax in SPATIAL_AXES:
        a = difference_array(a, grid, ax, 2)
    return a


def lemma32_discrepancy(s: FlowState, prev_trace, anchor, m: int = 1) -> tuple:
    """max|d_t d_xx d_yy d_zz I_k - r_k| for k = 1..4 (divergence-form residuals)."""
    out = assemble_I(s, prev_trace, anchor, m)
    res = nse_residual(s, "divergence")
    return tuple(
        float(np.max(np.abs(mixed_derivative(Ik.values, s.grid) - rk.values)))
        for Ik, rk in zip(out.components, res)
    )


def observed_order(coarse: float, fine: float, ratio: float = 2.0) -> float:
    """log_ratio(coarse/fine); nan when either error sits at zero."""
    if coarse <= 0.0 or fine <= 0.0:
        return float("nan")
    return float(np.log(coarse / fine) / np.log(ratio))


def lemma32_audit(s: FlowState, prev_trace, anchor, m: int = 1, tol: float | None = None, refined=None, ratio: float = 2.0) -> AuditReport:
    """Compare the differentiated operators with the NSE residuals.

    ``refined`` is an optional ``(state, trace, anchor)`` triple on a grid
    refined by ``ratio``; when given the observed order per equation is
    reported.  With ``tol`` each discrepancy becomes a pass/fail check,
    otherwise they are reported as measured values.
    """
    report = AuditReport("lemma32")
    disc = lemma32_discrepancy(s, prev_trace, anchor, m)
    for k, dk in enumerate(disc, start=1):
        if tol is None:
            report.check(f"discrepancy_{k}", dk, status=INFO)
        else:
            report.check(f"discrepancy_{k}", dk, tol)
    report.measure("max_discrepancy", max(disc))
    if refined is not None:
        fine = lemma32_discrepancy(*refined[:3], m)
        report.measure("discrepancy_refined", list(fine))
        report.measure("order", [observed_order(c, f, ratio) for c, f in zip(disc, fine)])
    return report


def initial_trace_audit(out: OperatorOutput, s: FlowState, prev_trace, tol: float = 1e-6) -> AuditReport:
    """Check the operators against the initial condition at t = m-1.

    (a) I_k at the first time node must equal the pure spatial six-fold
    integral of the trace difference (exact by construction); (b) the sixth
    mixed spatial derivative of I_k there must reproduce that difference.
    """
    g = s.grid
    trace = as_trace(prev_trace, g)
    report = AuditReport("initial_trace")
    anchor = out.anchor
    for k, name in enumerate(("u", "v", "w")):
        diff = s.components[k].values[:1] - trace[k][None]
        spatial = _layers(diff, g, (2, 2, 2), anchor)
        Ik0 = out.components[k].values[:1]
        report.check(f"first_term_{name}", np.max(np.abs(Ik0 - spatial)), 1e-12)
        d6 = mixed_derivative(Ik0, g, time=False)
        report.check(f"recovered_{name}", np.max(np.abs(d6 - diff)), tol)
        report.measure(f"max_trace_difference_{name}", float(np.max(np.abs(diff))))
    report.check("I4_at_start", np.max(np.abs(out.I4.values[0])), 0.0)
    return report


def stationary_constraint_residual(u0, v0, w0, p_path: ScalarField, t: int, anchor) -> tuple:
    """Max-abs over space of the four stationarity constraints at time node ``t``.

    These are what I_1..I_4 = 0 reduce to when the solution is frozen at
    the initial data for all time: every time integral of the velocity
    terms becomes (t - t_start) times the spatial integral, while the
    pressure keeps its running time integral taken from ``p_path``.
    """
    g = p_path.grid
    anchor = _check_anchor(anchor, g)
    data = as_trace((u0, v0, w0), g)
    vel = tuple(a[None] for a in data)
    elapsed = float(g.coords("t")[t] - g.bounds[0][0])
    p_int = cumulative_array(p_path.values, g, "t", 0, 1)[t : t + 1]
    out = []
    for k in range(3):
        f = vel[k]
        acc = 0.0
        for j in range(3):
            acc = acc + _layers(vel[j] * f, g, _slot(j, 1), anchor)
        for j in range(3):
            acc = acc - _layers(f, g, _slot(j, 0), anchor)
        acc = elapsed * acc + _layers(p_int, g, _slot(k, 1), anchor)
        out.append(float(np.max(np.abs(acc))))
    div = 0.0
    for j in range(3):
        div = div + _layers(vel[j], g, _slot(j, 1), anchor)
    out.append(float(np.max(np.abs(elapsed * div))))
    return tuple(out)
