import numpy as np
import pytest

from nslab.decomposition import (
    DomainCell,
    bump_initial_data,
    bump_profile,
    decay_audit,
    decay_certificate,
    divergence_free_bump,
    make_partition,
    partition_audit,
    support_audit,
)
from nslab.errors import InvalidIndex, InvalidMargin, InvalidSide
from nslab.fixedpoint import compute_M
from nslab.grid import ScalarField, c1c2_norm, finite_difference

from conftest import const


def test_three_cells():
    cells = make_partition(3, 1.0, 0.1)
    assert [c.box[0] for c in cells] == [(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]
    for c in cells:
        assert c.mu == 1.0
        assert all(hi - lo == pytest.approx(0.8) for lo, hi in c.inner_box)
        assert c.M == compute_M(c.j, 1.0)
    assert partition_audit(cells).status == "pass"


def test_single_cell_and_adjacency():
    (c,) = make_partition(1)
    assert partition_audit([c]).status == "pass"
    a, b = make_partition(2)
    assert a.box[0][1] == b.box[0][0]
    # the shared face belongs to the lower cell only
    assert a.contains((1.0, 0.5, 0.5)) and not b.contains((1.0, 0.5, 0.5))
    assert b.contains((1.5, 0.5, 0.5)) and not a.contains((1.5, 0.5, 0.5))


def test_partition_rejects_bad_parameters():
    with pytest.raises(InvalidIndex):
        make_partition(0)
    with pytest.raises(InvalidSide):
        make_partition(2, side=0.5)
    with pytest.raises(InvalidMargin):
        make_partition(2, margin=0.5)


def test_cell_invariants():
    box = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))
    with pytest.raises(InvalidMargin):
        DomainCell(1, box, box, 1.0, (0, 0, 0))
    with pytest.raises(ValueError):
        DomainCell(1, box, ((0.1, 0.9),) * 3, 1.0, (2.0, 0.0, 0.0))


def test_center_anchor():
    (c,) = make_partition(1, anchor="center")
    g = c.grid(9)
    assert c.anchor(g) == (4, 4, 4)


def test_zero_amplitude():
    (c,) = make_partition(1)
    (u, v, w), (K, k) = bump_initial_data(c, c.grid(8), 0.0)
    assert K == 0.0
    assert max(f.max_abs() for f in (u, v, w)) == 0.0
    fields, (K2, _) = divergence_free_bump(c, c.grid(8), 0.0)
    assert K2 == 0.0 and max(f.max_abs() for f in fields) == 0.0


def test_peak_is_amplitude():
    (c,) = make_partition(1)
    g = c.grid(9)
    (u, v, w), _ = bump_initial_data(c, g, 0.37)
    assert u.max_abs() == pytest.approx(0.37, rel=1e-15)
    assert u.values[0, 4, 4, 4] == u.max_abs()
    assert np.array_equal(u.values[0], u.values[-1])


def test_data_on_ball_boundary():
    (c,) = make_partition(1)
    g = c.grid(8)
    (u1, _, _), _ = bump_initial_data(c, g, 1.0)
    a = c.M / c1c2_norm(u1)
    (u, _, _), _ = bump_initial_data(c, g, a)
    assert c1c2_norm(u) == pytest.approx(c.M, rel=1e-13)


def test_profile_vanishes_outside_inner_box():
    (c,) = make_partition(1)
    psi = bump_profile(c.grid(21), c.inner_box)
    assert psi[0].max() == 0.0 and psi[:, 0].max() == 0.0 and psi[-1].max() == 0.0


def test_divergence_free_bump_second_order():
    (c,) = make_partition(1)
    errs = []
    for n in (257, 513):
        g = c.grid((n, n, 5), n_t=5)
        (u, v, w), _ = divergence_free_bump(c, g, 1.0)
        div = finite_difference(u, "x", 1).values[0] + finite_difference(v, "y", 1).values[0]
        errs.append(np.max(np.abs(div)))
        assert w.max_abs() == 0.0
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.3)


def test_constructed_data_support():
    (c,) = make_partition(1)
    g = c.grid(12)
    for make in (bump_initial_data, divergence_free_bump):
        fields, _ = make(c, g, 2.0)
        for f in fields:
            rep = support_audit(f, c.inner_box)
            assert rep.get("outside_max").value == 0.0
            assert rep.status == "pass"


def test_support_audit_constant():
    (c,) = make_partition(1)
    f = ScalarField.from_function(c.grid(8), const(1.0))
    rep = support_audit(f, c.inner_box)
    assert rep.status == "fail"
    assert rep.get("outside_max").value - rep.get("outside_max").threshold == 1.0
    assert support_audit(f, c.inner_box, assert_=False).status == "pass"


def test_decay_audit():
    (c,) = make_partition(2)[1:]
    g = c.grid(10)
    z = ScalarField.zeros(g)
    rep = decay_audit([z, z, z], 3.0, 2.0)
    assert rep.status == "pass" and rep.measured["margin"] == 3.0
    fields, (K, k) = bump_initial_data(c, g, 0.5, decay_k=3.0)
    assert K == decay_certificate(fields, k)
    good = decay_audit(fields, K, k)
    assert good.status == "pass" and good.measured["margin"] == 0.0
    bad = decay_audit(fields, K / 2, k)
    assert bad.status == "fail"
    node = bad.measured["worst_node"]
    assert node["alpha"] in [list(a) for a in ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1))]
    assert len(node["node"]) == 4  # (t, x, y, z) indices
    assert bad.get("weighted_max").value > K / 2
