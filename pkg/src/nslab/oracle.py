"""Dense-quadrature reference values for the integral operators.

The repeated antiderivative is evaluated through the Cauchy kernel

    int_a^x int_a^{x1} f = int_a^x (x - b) f(b) db,

with the trapezoid rule on a grid ``r`` times finer than the target grid.
Every layer becomes a small matrix from fine nodes to coarse nodes, and a
term of I_k is the tensor contraction of those matrices with the fine-grid
integrand.  Nothing here shares code with the cumulative-sum path in
:mod:`nslab.operators`, so agreement between the two is a genuine check.
"""
from __future__ import annotations

import numpy as np

from .grid import Grid, ScalarField, make_uniform_grid
from .operators import OperatorOutput


def fine_grid(grid: Grid, r: int) -> Grid:
    """Grid whose every axis has ``r`` sub-intervals per coarse interval."""
    if int(r) != r or r < 1:
        raise ValueError(f"refinement factor must be an integer >= 1, got {r}")
    counts = [(n - 1) * r + 1 for n in grid.counts]
    return make_uniform_grid(*grid.bounds, *counts)


def _segment_weights(xf: np.ndarray, lo: int, hi: int) -> np.ndarray:
    w = np.zeros_like(xf)
    if hi > lo:
        h = np.diff(xf[lo:hi + 1])
        w[lo:hi] += 0.5 * h
        w[lo + 1:hi + 1] += 0.5 * h
    return w


def kernel_matrix(coarse: np.ndarray, fine: np.ndarray, r: int, anchor: int, multiplicity: int) -> np.ndarray:
    """Matrix mapping fine samples to the anchored integral of the given multiplicity at coarse nodes."""
    n = coarse.size
    K = np.zeros((n, fine.size))
    a = anchor * r
    for i in range(n):
        fi = i * r
        if multiplicity == 0:
            K[i, fi] = 1.0
            continue
        lo, hi = min(a, fi), max(a, fi)
        w = _segment_weights(fine, lo, hi)
        if multiplicity == 2:
            w = w * (coarse[i] - fine)
        elif multiplicity != 1:
            raise ValueError(f"multiplicity must be 0, 1 or 2, got {multiplicity}")
        K[i] = w if fi >= a else -w
    return K


def _contract(F: np.ndarray, mats) -> np.ndarray:
    # mats in axis order (t, x, y, z); each reduces one fine axis to coarse
    for axis, K in enumerate(mats):
        F = np.moveaxis(np.tensordot(K, F, axes=([1], [axis])), 0, axis)
    return F


def oracle_I(grid: Grid, fu, fv, fw, fp, anchor, r: int = 8, trace=None) -> OperatorOutput:
    """Reference I_1..I_4 on ``grid`` from analytic fields.

    ``fu, fv, fw, fp`` are vectorized callables of (t, x, y, z).  ``trace``
    is an optional triple of callables of (x, y, z); by default the velocity
    at the first time node is used.
    """
    fg = fine_grid(grid, r)
    T, X, Y, Z = fg.mesh(sparse=True)
    shape = fg.shape
    vel = [np.broadcast_to(f(T, X, Y, Z), shape).astype(float) for f in (fu, fv, fw)]
    p = np.broadcast_to(fp(T, X, Y, Z), shape).astype(float)
    t0 = grid.coords("t")[0]
    if trace is None:
        tr = [np.broadcast_to(f(t0, X[0], Y[0], Z[0]), shape[1:]) for f in (fu, fv, fw)]
    else:
        tr = [np.broadcast_to(f(X[0], Y[0], Z[0]), shape[1:]) for f in trace]

    kt = {
        0: kernel_matrix(grid.coords("t"), fg.coords("t"), r, 0, 0),
        1: kernel_matrix(grid.coords("t"), fg.coords("t"), r, 0, 1),
    }
    ks = [
        {m: kernel_matrix(grid.coords(ax), fg.coords(ax), r, anchor[i], m) for m in (0, 1, 2)}
        for i, ax in enumerate("xyz")
    ]

    def term(F, mult, timed):
        return _contract(F, [kt[1 if timed else 0]] + [ks[i][m] for i, m in enumerate(mult)])

    def slot(k, m):
        mult = [2, 2, 2]
        mult[k] = m
        return mult

    out = []
    for k in range(3):
        f = vel[k]
        acc = term(f - tr[k][None], (2, 2, 2), False)
        for j in range(3):
            acc += term(vel[j] * f, slot(j, 1), True)
        acc += term(p, slot(k, 1), True)
        for j in range(3):
            acc -= term(f, slot(j, 0), True)
        out.append(acc)
    div = sum(term(vel[j], slot(j, 1), True) for j in range(3))
    out.append(div)
    fields = [ScalarField(grid, a) for a in out]
    return OperatorOutput(*fields, m=int(round(t0)) + 1, anchor=tuple(anchor))


def nested_trapezoid(f, a: float, x: float, n: int) -> float:
    """Literal double trapezoid int_a^x int_a^{x1} f(b) db dx1 with ``n`` panels per level.

    Slow and scalar; only used to validate :func:`kernel_matrix`.
    """
    outer = np.linspace(a, x, n + 1)
    inner_vals = np.array([np.trapezoid(f(np.linspace(a, x1, n + 1)), np.linspace(a, x1, n + 1)) for x1 in outer])
    return float(np.trapezoid(inner_vals, outer))


def relative_error(computed: OperatorOutput, reference: OperatorOutput) -> tuple:
    """max|I_k - I_k^ref| / max|I_k^ref| per component (absolute when the reference is 0)."""
    errs = []
    for a, b in zip(computed.components, reference.components):
        scale = b.max_abs()
        diff = float(np.max(np.abs(a.values - b.values)))
        errs.append(diff / scale if scale > 0 else diff)
    return tuple(errs)


def polynomial_fields(seed: int = 0) -> tuple:
    """Four separable fields of degree <= 2 per spatial axis and <= 1 in t.

    Each is (c0 + c1 t) (1 + a x + b x^2)(1 + a' y + b' y^2)(1 + a'' z + b'' z^2)
    with coefficients drawn from ``seed``.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(4):
        c = rng.uniform(-1.0, 1.0, 8)

        def f(t, x, y, z, c=c):
            return (0.5 + 0.5 * c[0] * t) * (1 + c[1] * x + c[2] * x**2) * (1 + c[3] * y + c[4] * y**2) * (1 + c[5] * z + c[6] * z**2) * c[7]

        out.append(f)
    return tuple(out)


def smooth_fields(seed: int = 0) -> tuple:
    """Four smooth trigonometric-exponential fields with seeded coefficients."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(4):
        c = rng.uniform(0.5, 1.5, 6)

        def f(t, x, y, z, c=c):
            return c[0] * np.sin(c[1] * x + c[4] * t) * np.cos(c[2] * y + c[5]) * np.exp(0.3 * c[3] * z)

        out.append(f)
    return tuple(out)
