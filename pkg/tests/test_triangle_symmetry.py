import numpy as np
import pytest

from psminlab import domains as dm
from psminlab import triangle_symmetry as ts
from psminlab.quotient_solver import GridField, minimize, smooth_random_field


@pytest.fixture(scope="module")
def mesh():
    return dm.build_mesh(dm.right_isosceles_triangle(), 24)


def test_antisymmetric_field(mesh):
    x, y = mesh.nodes.T
    s = ts.split(GridField(mesh, (x - y) * (1 + x + y)))
    assert (s.alpha, s.beta, s.gamma, s.zeta) == pytest.approx((1, 1, 1, 0))
    assert ts.stationarity_gap(s) == pytest.approx(0, abs=1e-12)


def test_symmetric_field(mesh):
    x, y = mesh.nodes.T
    s = ts.split(GridField(mesh, x * y + (x + y)))  # bitwise symmetric under the swap
    assert (s.alpha, s.beta, s.gamma, s.zeta) == (0, 0, 0, 0)
    assert ts.stationarity_gap(s) == 0


@pytest.mark.parametrize("seed", range(4))
def test_random_field_identities(mesh, seed):
    u = smooth_random_field(mesh, seed) + np.random.default_rng(seed).normal(size=mesh.size)
    s = ts.split(GridField(mesh, u))
    u_A = s.u_A.values
    assert np.array_equal(u_A[mesh.reflection()], -u_A)
    assert np.max(np.abs(s.u_S.values + u_A - u)) <= 2 * np.finfo(float).eps * np.max(np.abs(u))
    ids = ts.split_identities(s)
    assert ids["pythagoras"] < 1e-10 and ids["orthogonality"] < 1e-10
    assert ids["quartic"] < 1e-10
    assert ids["cauchy_schwarz_slack"] >= 0
    assert s.zeta <= 0.125 + 1e-10
    assert all(0 <= v <= 1 for v in (s.alpha, s.beta, s.gamma))
    assert ts.stationarity_gap(s) > 0


def test_diagonal_values_of_antisymmetric_part_vanish(mesh):
    u = np.random.default_rng(7).normal(size=mesh.size)
    s = ts.split(GridField(mesh, u))
    diag = mesh.index[:, 0] == mesh.index[:, 1]
    assert np.all(s.u_A.values[diag] == 0)


def test_non_triangle_mesh_rejected():
    m = dm.build_mesh(dm.hypercube(2), 8)
    with pytest.raises(ValueError):
        ts.split(GridField(m, m.nodes[:, 0]))


def test_region_membership_examples():
    assert ts.region_membership(0.5, 0.5) == (True, True)
    assert ts.region_membership(1, 1)[0] is False
    assert ts.region_membership(0, 0)[0] is True
    with pytest.raises(ValueError):
        ts.region_membership(1.5, 0)


def test_region_grid_search_isolates_center():
    pts = ts.region_grid_search(1e-3)
    assert len(pts) >= 1
    assert np.max(np.hypot(pts[:, 0] - 0.5, pts[:, 1] - 0.5)) < 2e-3


def test_minimizer_diagnostics_are_reported():
    r = minimize(dm.right_isosceles_triangle(), 1.0, 16, seed=0)
    s = ts.split(r.field)
    assert 0 <= s.alpha <= 1 and 0 <= s.beta <= 1 and s.zeta <= 0.125 + 1e-10
