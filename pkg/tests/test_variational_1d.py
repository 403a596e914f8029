import math

import numpy as np
import pytest

from psminlab import variational_1d as v1

COS_VALUE = 2 * math.pi ** 2 / 3


def test_cosine_value():
    phi = v1.Profile1D.from_function(lambda x: np.cos(np.pi * x), 512)
    assert v1.quotient_1d(phi) == pytest.approx(COS_VALUE, abs=1e-4)
    assert v1.quotient_1d_linear(phi) == pytest.approx(COS_VALUE, abs=1e-4)


def test_second_harmonic():
    phi = v1.Profile1D.from_function(lambda x: np.cos(2 * np.pi * x), 512)
    assert v1.quotient_1d(phi) == pytest.approx(4 * COS_VALUE, rel=1e-6)


def test_homogeneity_and_reflection():
    phi = v1.Profile1D.from_function(lambda x: np.sin(3 * x) + x ** 2, 300)
    q = v1.quotient_1d(phi)
    assert v1.quotient_1d(v1.Profile1D(300, 3 * phi.values)) == pytest.approx(q, rel=1e-12)
    assert v1.quotient_1d(phi.reflected()) == pytest.approx(q, rel=1e-12)


def test_profile_invariants():
    with pytest.raises(ValueError):
        v1.Profile1D(64, np.ones(64))
    with pytest.raises(ValueError):
        v1.Profile1D(64, np.zeros(64))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_optimum_beats_published_bound(seed):
    prof, val, report = v1.optimize_1d(512, seed)
    assert val <= 6.1623 and val < COS_VALUE
    assert np.all(np.diff(report.history) <= 0)
    assert np.array_equal(prof.values, -prof.values[::-1])


def test_cosine_start_descends():
    x = np.linspace(0, 1, 512)
    prof, val, report = v1.optimize_1d(512, start=np.cos(np.pi * x))
    assert report.history[0] == pytest.approx(COS_VALUE, abs=1e-3)
    assert val <= 6.1623


def test_refinement_is_stable():
    (_, a), (_, b) = v1.refinement_study((512, 1024))
    assert abs(a - b) < 1e-3


def test_full_class_not_worse_than_antisymmetric():
    _, anti, _ = v1.optimize_1d(256, 0)
    _, full, _ = v1.optimize_1d(256, 0, antisymmetric=False)
    assert full <= anti + 1e-6


def test_small_grid_rejected():
    with pytest.raises(ValueError):
        v1.optimize_1d(32)


def test_csv_export(tmp_path):
    prof, _, _ = v1.optimize_1d(128, 0)
    prof.to_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "x,phi" and len(lines) == 129
