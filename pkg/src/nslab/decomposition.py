"""Finite partition of space into box cells, compactly supported initial data and their audits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audit import INFO, AuditReport
from .errors import InvalidIndex, InvalidMargin, InvalidSide
from .fixedpoint import compute_M
from .grid import Grid, ScalarField, difference_array

# multi-indices (a_x, a_y, a_z) of total order <= 2
MULTI_INDICES = (
    (0, 0, 0),
    (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (2, 0, 0), (0, 2, 0), (0, 0, 2),
    (1, 1, 0), (1, 0, 1), (0, 1, 1),
)


@dataclass(frozen=True)
class DomainCell:
    """One box D_j of the partition with its strictly interior support box D_jj.

    ``anchor_point`` is the physical (x0, y0, z0) used by the integral
    operators; :meth:`anchor` converts it to node indices on a grid.
    """

    j: int
    box: tuple
    inner_box: tuple
    M: float
    anchor_point: tuple

    def __post_init__(self):
        for (lo, hi), (ilo, ihi) in zip(self.box, self.inner_box):
            if not (lo < ilo < ihi < hi):
                raise InvalidMargin("inner box must sit strictly inside the cell")
            if hi - lo < 1.0:
                raise InvalidSide(f"cell sides must be >= 1, got {hi - lo}")
        for (lo, hi), a in zip(self.box, self.anchor_point):
            if not lo <= a <= hi:
                raise ValueError("anchor point must lie in the cell")

    @property
    def sides(self) -> tuple:
        return tuple(hi - lo for lo, hi in self.box)

    @property
    def mu(self) -> float:
        return float(np.prod(self.sides))

    def grid(self, n, m: int = 1, n_t: int | None = None) -> Grid:
        """Grid on [m-1, m] x box with ``n`` nodes per spatial axis (int or triple)."""
        ns = (n, n, n) if np.isscalar(n) else tuple(n)
        return Grid(((m - 1, m),) + tuple(self.box), ((ns[0] if n_t is None else n_t),) + ns)

    def anchor(self, grid: Grid) -> tuple:
        return tuple(grid.nearest_index(ax, a) for ax, a in zip("xyz", self.anchor_point))

    def contains(self, point) -> bool:
        """Half-open membership: a shared x-face belongs to the lower-indexed cell."""
        (x0, x1), (y0, y1), (z0, z1) = self.box
        x, y, z = point
        in_x = (x0 <= x <= x1) if self.j == 1 else (x0 < x <= x1)
        return in_x and y0 <= y <= y1 and z0 <= z <= z1

    def slice_measures(self) -> dict:
        """Measures of the 2-D and 1-D axis slices through any point of the box."""
        sx, sy, sz = self.sides
        return {"yz": sy * sz, "xz": sx * sz, "xy": sx * sy, "z": sz, "y": sy, "x": sx}


def make_partition(J: int, side: float = 1.0, margin: float = 0.1, m_variant: str = "step2", anchor: str = "corner") -> list:
    """``J`` cubes of edge ``side`` stacked along x; cell j covers x in [(j-1) side, j side].

    The inner box pulls every face in by ``margin * side``.  ``anchor`` is
    ``corner`` (lowest corner of the box) or ``center``.
    """
    if int(J) != J or J < 1:
        raise InvalidIndex(f"need at least one cell, got J={J}")
    if not side >= 1.0:
        raise InvalidSide(f"side must be >= 1, got {side}")
    if not 0.0 < margin < 0.5:
        raise InvalidMargin(f"margin must lie in (0, 0.5), got {margin}")
    if anchor not in ("corner", "center"):
        raise ValueError(f"anchor must be 'corner' or 'center', got {anchor!r}")
    cells = []
    d = margin * side
    for j in range(1, J + 1):
        box = (((j - 1) * side, j * side), (0.0, side), (0.0, side))
        inner = tuple((lo + d, hi - d) for lo, hi in box)
        point = tuple(lo for lo, _ in box) if anchor == "corner" else tuple(0.5 * (lo + hi) for lo, hi in box)
        cells.append(DomainCell(j=j, box=box, inner_box=inner, M=compute_M(j, side**3, m_variant), anchor_point=point))
    return cells


def partition_audit(cells) -> AuditReport:
    """Disjoint interiors, adjoining consecutive cells, slice-measure inequalities."""
    report = AuditReport("partition")
    overlap = 0.0
    for a in range(len(cells)):
        for b in range(a + 1, len(cells)):
            vol = 1.0
            for (lo1, hi1), (lo2, hi2) in zip(cells[a].box, cells[b].box):
                vol *= max(0.0, min(hi1, hi2) - max(lo1, lo2))
            overlap = max(overlap, vol)
    report.check("interior_overlap", overlap, 0.0)
    for c1, c2 in zip(cells, cells[1:]):
        face = c1.box[0][1] == c2.box[0][0] and c1.box[1:] == c2.box[1:]
        report.check(f"adjoining_{c1.j}_{c2.j}", 0.0 if face else 1.0, 0.0)
    for c in cells:
        worst = max(c.slice_measures().values())
        report.check(f"slice_measures_{c.j}", worst, c.mu)
    report.measure("measures", [c.mu for c in cells])
    report.measure("caps", [c.M for c in cells])
    return report


def spatial_mesh(grid: Grid) -> tuple:
    """Dense (X, Y, Z) node coordinates of shape ``grid.shape[1:]``."""
    return tuple(np.meshgrid(*(grid.coords(ax) for ax in "xyz"), indexing="ij"))


def _scaled_offsets(grid: Grid, inner_box):
    out = []
    for C, (lo, hi) in zip(spatial_mesh(grid), inner_box):
        half = 0.5 * (hi - lo)
        out.append(((C - 0.5 * (lo + hi)) / half, half))
    return out


def bump_profile(grid: Grid, inner_box) -> np.ndarray:
    """exp(1 - 1/(1 - r^2)) on the ellipsoid inscribed in ``inner_box``, 0 outside; spatial array."""
    offs = _scaled_offsets(grid, inner_box)
    r2 = sum(d**2 for d, _ in offs)
    out = np.zeros(r2.shape)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def bump_gradient(grid: Grid, inner_box) -> tuple:
    """Analytic (psi_x, psi_y, psi_z) of :func:`bump_profile`."""
    offs = _scaled_offsets(grid, inner_box)
    r2 = sum(d**2 for d, _ in offs)
    inside = r2 < 1.0
    q = 1.0 - r2[inside]
    # d psi / d(r^2) = -psi / (1 - r^2)^2
    factor = np.zeros(r2.shape)
    factor[inside] = -np.exp(1.0 - 1.0 / q) / q**2
    return tuple(factor * 2.0 * d / half for d, half in offs)


def _derivative(values: np.ndarray, grid: Grid, alpha) -> np.ndarray:
    out = values
    for ax, a in zip("xyz", alpha):
        if a == 2:
            out = difference_array(out, grid, ax, 2)
        elif a == 1:
            out = difference_array(out, grid, ax, 1)
    return out


def _weight(grid: Grid, k: float) -> np.ndarray:
    X, Y, Z = spatial_mesh(grid)
    return (1.0 + np.sqrt(X**2 + Y**2 + Z**2)) ** k


def decay_certificate(fields, k: float) -> float:
    """Smallest K with |d^a f| (1 + |x|)^k <= K at every node, |a| <= 2."""
    K = 0.0
    for f in fields:
        w = _weight(f.grid, k)
        for alpha in MULTI_INDICES:
            K = max(K, float(np.max(np.abs(_derivative(f.values, f.grid, alpha)) * w)))
    return K


def bump_initial_data(cell: DomainCell, grid: Grid, amplitude: float, decay_k: float = 2.0):
    """``amplitude * psi`` in each velocity component, with its decay certificate.

    Returns ``((u0, v0, w0), (K, k))``; the fields are constant-in-time
    extensions over ``grid``.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    psi = amplitude * bump_profile(grid, cell.inner_box)
    f = ScalarField.from_spatial(grid, psi)
    fields = (f, f, f)
    return fields, (decay_certificate(fields, decay_k), decay_k)


def divergence_free_bump(cell: DomainCell, grid: Grid, amplitude: float, decay_k: float = 2.0):
    """(u0, v0, w0) = curl(0, 0, amplitude psi) = (a psi_y, -a psi_x, 0), plus certificate."""
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    gx, gy, _ = bump_gradient(grid, cell.inner_box)
    fields = (
        ScalarField.from_spatial(grid, amplitude * gy),
        ScalarField.from_spatial(grid, -amplitude * gx),
        ScalarField.zeros(grid),
    )
    return fields, (decay_certificate(fields, decay_k), decay_k)


def decay_audit(fields, K: float, k: float) -> AuditReport:
    """Check |d^a f| <= K (1 + |x|)^(-k) for |a| <= 2 at every node.

    The comparison is done as |d^a f| (1 + |x|)^k <= K so a certificate
    produced by :func:`decay_certificate` passes exactly.
    """
    report = AuditReport("decay")
    worst, where = -np.inf, None
    for n, f in enumerate(fields):
        w = _weight(f.grid, k)
        for alpha in MULTI_INDICES:
            scaled = np.abs(_derivative(f.values, f.grid, alpha)) * w
            i = int(np.argmax(scaled))
            if scaled.flat[i] > worst:
                worst = float(scaled.flat[i])
                where = {"field": n, "alpha": list(alpha), "node": [int(x) for x in np.unravel_index(i, scaled.shape)]}
    worst = max(worst, 0.0)
    report.check("weighted_max", worst, K)
    report.measure("margin", K - worst)
    report.measure("worst_node", where)
    report.measure("K", K)
    report.measure("k", k)
    return report


def outside_mask(grid: Grid, inner_box) -> np.ndarray:
    """Spatial mask of the nodes not in the closed box ``inner_box``."""
    inside = np.ones(grid.shape[1:], dtype=bool)
    for C, (lo, hi) in zip(spatial_mesh(grid), inner_box):
        inside &= (C >= lo) & (C <= hi)
    return ~inside


def support_audit(f: ScalarField, inner_box, threshold: float = 0.0, assert_: bool = True) -> AuditReport:
    """max|f| over nodes outside ``inner_box``; passes iff it is <= ``threshold``."""
    report = AuditReport("support")
    mask = outside_mask(f.grid, inner_box)
    outside = float(np.max(np.abs(f.values[:, mask]))) if mask.any() else 0.0
    if assert_:
        report.check("outside_max", outside, threshold)
    else:
        report.check("outside_max", outside, threshold, status=INFO)
    return report
