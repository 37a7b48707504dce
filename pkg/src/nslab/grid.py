"""Uniform 4-D (t, x, y, z) grids, scalar fields and the discrete calculus on them.

Everything here is second order: composite trapezoid for integrals, central
differences in the interior and one-sided three/four point stencils at the
ends of each axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import AnchorOutOfRange, DegenerateAxis, GridMismatch

AXES = ("t", "x", "y", "z")
SPATIAL_AXES = ("x", "y", "z")
MIN_NODES = 5

SNAPSHOT_FORMAT = "nslab-field"
SNAPSHOT_VERSION = 1


def axis_index(axis) -> int:
    if isinstance(axis, (int, np.integer)):
        if not 0 <= axis < 4:
            raise ValueError(f"axis index {axis} out of range")
        return int(axis)
    try:
        return AXES.index(axis)
    except ValueError:
        raise ValueError(f"unknown axis {axis!r}, expected one of {AXES}") from None


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid with uniform spacing on every axis.

    ``bounds`` holds four ``(lo, hi)`` pairs in t, x, y, z order and
    ``counts`` the matching node counts.
    """

    bounds: tuple
    counts: tuple

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        counts = tuple(int(n) for n in self.counts)
        if len(bounds) != 4 or len(counts) != 4:
            raise DegenerateAxis("a grid needs exactly four axes (t, x, y, z)")
        for name, (lo, hi), n in zip(AXES, bounds, counts):
            if n < MIN_NODES:
                raise DegenerateAxis(f"axis {name}: {n} nodes, need at least {MIN_NODES}")
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
                raise DegenerateAxis(f"axis {name}: bounds ({lo}, {hi}) are not a finite interval")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "counts", counts)

    @property
    def shape(self) -> tuple:
        return self.counts

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.bounds, self.counts))

    @property
    def h_t(self) -> float:
        return self.spacing[0]

    @property
    def h_x(self) -> float:
        return self.spacing[1]

    @property
    def h_y(self) -> float:
        return self.spacing[2]

    @property
    def h_z(self) -> float:
        return self.spacing[3]

    def coords(self, axis) -> np.ndarray:
        """Node coordinates ``lo + i*h`` along one axis."""
        k = axis_index(axis)
        lo, _ = self.bounds[k]
        h = self.spacing[k]
        return lo + h * np.arange(self.counts[k])

    def mesh(self, sparse: bool = True):
        """Coordinate arrays (T, X, Y, Z) broadcastable to ``shape``."""
        return np.meshgrid(*(self.coords(a) for a in AXES), indexing="ij", sparse=sparse)

    @property
    def spatial_measure(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.bounds[1:]]))

    def refine(self, factor: int = 2, axes=AXES) -> "Grid":
        """Same bounds, spacing divided by ``factor`` on the listed axes."""
        ks = {axis_index(a) for a in axes}
        counts = tuple(factor * (n - 1) + 1 if k in ks else n for k, n in enumerate(self.counts))
        return Grid(self.bounds, counts)

    def with_time(self, t_bounds, n_t=None) -> "Grid":
        n_t = self.counts[0] if n_t is None else n_t
        return Grid((tuple(t_bounds),) + self.bounds[1:], (n_t,) + self.counts[1:])

    def nearest_index(self, axis, value: float) -> int:
        k = axis_index(axis)
        lo, _ = self.bounds[k]
        i = int(round((value - lo) / self.spacing[k]))
        return min(max(i, 0), self.counts[k] - 1)


def make_uniform_grid(t_bounds, x_bounds, y_bounds, z_bounds, n_t, n_x, n_y, n_z) -> Grid:
    return Grid((t_bounds, x_bounds, y_bounds, z_bounds), (n_t, n_x, n_y, n_z))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One finite real value per grid node. Immutable."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != self.grid.shape:
            if vals.ndim == 0:
                vals = np.full(self.grid.shape, float(vals))
            else:
                vals = np.broadcast_to(vals, self.grid.shape).copy()
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ScalarField":
        """Sample ``func(t, x, y, z)`` (broadcasting arrays) on the grid."""
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.shape))

    @classmethod
    def from_spatial(cls, grid: Grid, values3d) -> "ScalarField":
        """Constant-in-time extension of a spatial array of shape ``grid.shape[1:]``."""
        values3d = np.asarray(values3d, dtype=float)
        if values3d.shape != grid.shape[1:]:
            raise GridMismatch(f"spatial shape {values3d.shape} != {grid.shape[1:]}")
        return cls(grid, np.broadcast_to(values3d, grid.shape))

    def time_slice(self, i: int) -> np.ndarray:
        return self.values[i]

    def _check(self, other: "ScalarField"):
        if self.grid != other.grid:
            raise GridMismatch("field arithmetic needs identical grids")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - float(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values * other.values)
        return ScalarField(self.grid, float(other) * self.values)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def allclose(self, other: "ScalarField", atol: float = 0.0, rtol: float = 0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.values, other.values, atol=atol, rtol=rtol))


def _check_field(f: ScalarField):
    if not isinstance(f, ScalarField):
        raise TypeError(f"expected ScalarField, got {type(f).__name__}")


def _first_difference(a: np.ndarray, h: float, k: int) -> np.ndarray:
    # np.gradient with edge_order=2 is exactly the central / one-sided O(h^2) pair
    return np.gradient(a, h, axis=k, edge_order=2)


def _second_difference(a: np.ndarray, h: float, k: int) -> np.ndarray:
    a = np.moveaxis(a, k, 0)
    out = np.empty_like(a)
    out[1:-1] = a[2:] - 2.0 * a[1:-1] + a[:-2]
    out[0] = 2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]
    out[-1] = 2.0 * a[-1] - 5.0 * a[-2] + 4.0 * a[-3] - a[-4]
    out /= h * h
    return np.moveaxis(out, 0, k)


def difference_array(a: np.ndarray, grid: Grid, axis, order: int) -> np.ndarray:
    """Array-level version of :func:`finite_difference` (no validation of finiteness)."""
    k = axis_index(axis)
    h = grid.spacing[k]
    if order == 1:
        return _first_difference(a, h, k)
    if order == 2:
        if k == 0:
            raise ValueError("second differences are only taken along spatial axes")
        return _second_difference(a, h, k)
    raise ValueError(f"order must be 1 or 2, got {order}")


def finite_difference(f: ScalarField, axis, order: int = 1) -> ScalarField:
    """Second-order accurate derivative of ``f`` along ``axis``.

    Interior nodes use central stencils, the first and last node of the axis
    one-sided stencils of the same order.  ``order=2`` is only allowed on
    x, y and z.
    """
    _check_field(f)
    return ScalarField(f.grid, difference_array(f.values, f.grid, axis, order))


def cumulative_array(a: np.ndarray, grid: Grid, axis, anchor: int, multiplicity: int = 1) -> np.ndarray:
    """Array-level anchored trapezoid antiderivative, see :func:`anchored_cumulative_integral`."""
    k = axis_index(axis)
    n = grid.counts[k]
    if not 0 <= anchor < n:
        raise AnchorOutOfRange(f"anchor {anchor} outside 0..{n - 1} on axis {AXES[k]}")
    if multiplicity not in (1, 2):
        raise ValueError(f"multiplicity must be 1 or 2, got {multiplicity}")
    h = grid.spacing[k]
    out = a
    for _ in range(multiplicity):
        c = cumulative_trapezoid(out, dx=h, axis=k, initial=0.0)
        out = c - np.take(c, [anchor], axis=k)
    return out


def anchored_cumulative_integral(f: ScalarField, axis, anchor: int, multiplicity: int = 1) -> ScalarField:
    """Iterated antiderivative from the node ``anchor`` along a spatial axis.

    ``multiplicity=1`` gives ``F(s) = int_{s_a}^{s} f`` by the composite
    trapezoid rule (negative orientation below the anchor); ``multiplicity=2``
    applies the same map twice, giving the double layer
    ``int_{s_a}^{s} int_{s_a}^{s_1} f``.  The result is exactly zero on the
    anchor hyperplane.
    """
    _check_field(f)
    if axis_index(axis) == 0:
        raise ValueError("use time_running_integral for the time axis")
    return ScalarField(f.grid, cumulative_array(f.values, f.grid, axis, anchor, multiplicity))


def time_running_integral(f: ScalarField, t_start: int = 0) -> ScalarField:
    """Running trapezoid integral in time, zero at node ``t_start``."""
    _check_field(f)
    return ScalarField(f.grid, cumulative_array(f.values, f.grid, "t", t_start, 1))


NORM_TERMS = (("t", 0), ("t", 1), ("x", 1), ("x", 2), ("y", 1), ("y", 2), ("z", 1), ("z", 2))


def norm_components(f: ScalarField) -> dict:
    """The eight sup-norms making up :func:`c1c2_norm`, keyed ``f``, ``f_t``, ``f_xx`` ..."""
    _check_field(f)
    out = {}
    for axis, order in NORM_TERMS:
        if order == 0:
            out["f"] = f.max_abs()
            continue
        name = "f_" + axis * order
        out[name] = float(np.max(np.abs(difference_array(f.values, f.grid, axis, order))))
    return out


def c1c2_norm(f: ScalarField, mode: str = "full") -> float:
    """Discrete C^1-in-time / C^2-in-space norm.

    ``full`` is the max of the sup-norms of f, f_t, f_x, f_xx, f_y, f_yy,
    f_z, f_zz; ``sup`` is just max|f|.
    """
    if mode == "sup":
        _check_field(f)
        return f.max_abs()
    if mode != "full":
        raise ValueError(f"mode must be 'full' or 'sup', got {mode!r}")
    return max(norm_components(f).values())


def trapezoid_weights(grid: Grid, axes=SPATIAL_AXES) -> np.ndarray:
    """Tensor-product trapezoid weights over ``axes`` (broadcastable to the grid)."""
    w = np.ones([1] * 4)
    for a in axes:
        k = axis_index(a)
        wk = np.full(grid.counts[k], grid.spacing[k])
        wk[0] = wk[-1] = 0.5 * grid.spacing[k]
        shape = [1] * 4
        shape[k] = grid.counts[k]
        w = w * wk.reshape(shape)
    return w


def save_field(path, f: ScalarField, name: str = "") -> Path:
    """Write a field snapshot (``.npz``); see the README for the layout."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(
        path,
        format=np.array(SNAPSHOT_FORMAT),
        version=np.array(SNAPSHOT_VERSION),
        name=np.array(name),
        bounds=np.array(f.grid.bounds, dtype=float),
        counts=np.array(f.grid.counts, dtype=np.int64),
        values=np.ascontiguousarray(f.values).ravel(order="C"),
    )
    return path if path.suffix == ".npz" else path.with_name(path.name + ".npz")


def load_field(path) -> ScalarField:
    with np.load(path, allow_pickle=False) as data:
        if str(data["format"]) != SNAPSHOT_FORMAT:
            raise ValueError(f"{path}: not a {SNAPSHOT_FORMAT} snapshot")
        if int(data["version"]) > SNAPSHOT_VERSION:
            raise ValueError(f"{path}: snapshot version {int(data['version'])} is newer than supported")
        grid = Grid(tuple(map(tuple, data["bounds"])), tuple(int(n) for n in data["counts"]))
        return ScalarField(grid, data["values"].reshape(grid.shape, order="C"))
