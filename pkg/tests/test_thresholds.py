import math

import pytest

from psminlab import domains as dm
from psminlab import thresholds as th

G2 = 5.8545


def test_smooth_threshold():
    assert th.smooth_threshold(2, G2) == pytest.approx(2.9273, abs=1e-4)
    assert th.smooth_threshold(400, 7.0) == pytest.approx(7.0, rel=1e-2)
    with pytest.raises(ValueError):
        th.smooth_threshold(1, G2)


def test_corner_threshold_examples():
    tri = dm.corner_angles(dm.right_isosceles_triangle())
    assert th.corner_threshold(tri, G2) == pytest.approx(G2 / 8)
    assert th.corner_threshold(tri, G2) == pytest.approx(0.732, abs=1e-3)
    assert th.corner_threshold([math.pi / 2] * 4, G2) == pytest.approx(G2 / 4)
    assert th.corner_threshold([1.2 * math.pi, 1.9 * math.pi], G2) == pytest.approx(G2 / 2)
    assert th.corner_threshold([], G2) == pytest.approx(th.smooth_threshold(2, G2))
    with pytest.raises(ValueError):
        th.corner_threshold([0.0], G2)


def test_corner_threshold_monotone_and_capped():
    angles = [0.3 + 0.2 * k for k in range(30)]
    vals = [th.corner_threshold([a, 1.0], G2) for a in angles]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert max(vals) <= G2 / 2


def test_hypercube_test_values():
    assert th.hypercube_test_value(10) == pytest.approx(9.233, abs=1e-3)
    assert th.hypercube_test_value(11) == pytest.approx(9.293, abs=1e-3)
    assert th.hypercube_test_value(2) == pytest.approx(2 * math.pi ** 2 / 3, rel=1e-12)


def test_test_value_bounded_and_beta_form_agrees():
    for d in range(1, 65):
        t = th.hypercube_test_value(d)
        assert t <= math.pi ** 2
        assert t == pytest.approx(th.hypercube_test_value_beta(d), rel=1e-8)


def test_sobolev_constants():
    assert th.sobolev_lower_bound(11) / 4 == pytest.approx(10.246, abs=1e-3)
    assert th.sobolev_lower_bound(3) == pytest.approx(0.75 * (2 * math.pi ** 2) ** (2 / 3))
    s = [th.sobolev_lower_bound(d) for d in range(3, 65)]
    assert all(b > a for a, b in zip(s, s[1:]))
    with pytest.raises(ValueError):
        th.sobolev_lower_bound(2)


def test_chain_for_large_dimensions():
    assert all(th.hypercube_chain_holds(d) for d in range(11, 65))
    with pytest.raises(ValueError):
        th.hypercube_chain_holds(10)


def test_rectangle_critical_aspect():
    assert th.rectangle_critical_aspect(G2, 2 * math.pi ** 2 / 3) == pytest.approx(2.12, abs=1e-2)
    assert th.rectangle_critical_aspect(G2, 6.1622) == pytest.approx(2.052, abs=1e-3)
    assert th.rectangle_critical_aspect(G2, G2 / 4) == 1.0


def test_verdicts():
    v10 = th.hypercube_verdict(10)
    assert v10.exists and v10.threshold == pytest.approx(9.536) and v10.g_source == "literature"
    v11 = th.hypercube_verdict(11)
    assert v11.exists and v11.formula == "sobolev"
    tri = dm.right_isosceles_triangle()
    at = th.verdict(tri, G2 / 8)
    assert at.verdict == "inconclusive" and at.formula == "corner"
    assert th.verdict(tri, G2 / 8 - 2e-3).exists


def test_constants_provenance():
    c = th.Constants().with_value(2, 5.8504, "computed")
    assert c.G(2) == 5.8504 and c.source(2) == "computed"
    assert th.verdict(dm.hypercube(2), 1.0, c).g_source == "computed"
    with pytest.raises(KeyError):
        th.Constants().G(5)
    with pytest.raises(ValueError):
        th.verdict(dm.hypercube(1), 1.0)
