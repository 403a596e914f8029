import math

import numpy as np
import pytest

from psminlab import radial_gns as rg


def test_d1_matches_sech_soliton(profile):
    p = profile(1)
    exact = 3.0 ** 0.25 / np.sqrt(np.cosh(2.0 * p.r))
    assert p.f0 == pytest.approx(3.0 ** 0.25, rel=1e-8)
    assert np.max(np.abs(p.f - exact)) < 1e-6


def test_d1_constant_is_pi_squared_over_four(profile):
    assert rg.compute_G(profile(1)) == pytest.approx(math.pi ** 2 / 4, rel=1e-5)


def test_d1_l2_mass_closed_form(profile):
    # ∫_ℝ f² with f² = √3 sech(2r) is √3·π/2
    m = rg.ground_state_moments(profile(1))
    assert m.l2 == pytest.approx(math.sqrt(3) * math.pi / 2, rel=1e-8)
    assert math.isinf(m.l2_invx)


def test_G2_close_to_published(profile):
    assert rg.compute_G(profile(2)) == pytest.approx(5.8545, rel=5e-3)


def test_G10_close_to_published(profile):
    assert rg.compute_G(profile(10)) == pytest.approx(4 * 9.536, rel=1e-2)


@pytest.mark.parametrize("dim", [1, 2, 3, 4, 6, 10])
def test_profile_invariants_and_virial(profile, dim):
    p = profile(dim)
    assert p.r[0] == 0.0 and p.df[0] == 0.0
    assert np.all(np.diff(p.r) > 0)
    assert np.all(p.f > 0) and np.all(np.diff(p.f) < 0)
    assert p.f[-1] < 1e-8 * p.f0
    assert rg.ode_residual(dim, p.r, p.f, p.df) <= 1e-8 * p.f0
    m = rg.ground_state_moments(p)
    assert max(rg.virial_residuals(m, dim)) < 1e-5
    shortcut = dim / (dim + 2) * m.l2 ** (2 / dim)
    assert rg.compute_G(p) == pytest.approx(shortcut, rel=1e-6)


@pytest.mark.parametrize("dim", range(2, 11))
def test_curvature_coefficient_positive_both_routes(profile, dim):
    m = rg.ground_state_moments(profile(dim))
    direct = rg.curvature_coefficient(m, dim, verify=False)
    assert direct > 0
    assert direct == pytest.approx(rg.curvature_bracket_identity(m, dim), rel=1e-4)


def test_curvature_bracket_doubles_under_dilation(profile):
    p = profile(3)
    b1 = rg.curvature_coefficient(rg.ground_state_moments(p), 3, verify=False)
    b2 = rg.curvature_coefficient(rg.ground_state_moments(p.dilated(2.0)), 3, verify=False)
    assert b2 == pytest.approx(2 * b1, rel=1e-8)


@pytest.mark.parametrize("dim", [2, 3])
def test_perturbed_profile_breaks_virial_as_predicted(profile, dim):
    m = rg.ground_state_moments(profile(dim).scaled(1.1))
    first, _ = rg.virial_residuals(m, dim)
    assert first == pytest.approx(abs(1.1 ** (4 / dim) - 1), abs=1e-3)


def test_regridding_leaves_G_unchanged(profile):
    p = profile(2)
    assert rg.compute_G(p.resampled(2)) == pytest.approx(rg.compute_G(p), rel=1e-6)


def test_tail_decay_rates(profile):
    assert rg.tail_slope(profile(1)) == pytest.approx(-1.0, abs=0.05)
    for d in (1, 2, 3, 6, 10):
        assert 0.99 < profile(d).decay_rate <= 1.0 + 1e-6


def test_angular_constants():
    assert rg.angular_constant(2) == pytest.approx(1 / (2 * math.pi))
    assert rg.angular_constant(3) == pytest.approx(0.25)
    assert rg.angular_constant(4) == pytest.approx(1 / math.pi)
    with pytest.raises(ValueError):
        rg.angular_constant(1)


def test_zero_scaled_profile_rejected(profile):
    with pytest.raises(ValueError):
        profile(2).scaled(0.0)


def test_bad_tolerance_rejected():
    with pytest.raises(ValueError):
        rg.solve_ground_state(2, tol=1e-2)


def test_csv_round_trip(profile, tmp_path):
    p = profile(2)
    path = tmp_path / "gs.csv"
    p.to_csv(path)
    first = path.read_text().splitlines()[0]
    assert first.startswith("# dim=2 rmax=") and "decay=" in first
    meta, r, f = rg.read_profile_csv(path)
    assert int(meta["dim"]) == 2
    assert np.allclose(f, p.f, rtol=0, atol=1e-15)
