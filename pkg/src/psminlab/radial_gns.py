"""Radial ground state of -Δf + f - f^{1+4/d} = 0 and the whole-space GNS constant.

The ground state is found by shooting on f(0). Double precision only resolves
f(0) to about 1e-16, and the growing mode e^{r} amplifies that error, so a
single shot stays faithful only out to r ≈ 9. Past that point the solver
restarts: it keeps (f, f') from the lower bracket solution and bisects on the
slope, which gains another ~9 units of radius per segment until the tail is
below ``TAIL_LEVEL``·f(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly
from scipy.special import beta, gammaincc, kve

R_START = 1e-3
GRID_STEP = 0.01
TAIL_LEVEL = 1e-11
MAX_BISECTIONS = 200
MAX_SEGMENTS = 12
_RTOL = 1e-12
_R_END = 80.0
_SPLIT = 1e-8  # relative split between bracket solutions that ends a segment


class BracketError(RuntimeError):
    """No sign change of the shooting discriminant in the search interval."""


class ConvergenceError(RuntimeError):
    """Bisection hit its iteration cap or the profile misses the residual bound."""


def sphere_area(dim: int) -> float:
    """|S^{dim-1}|, the surface area of the unit sphere in R^dim."""
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled radial ground state on a uniform grid r = 0, h, ..., r_max.

    ``ddf`` carries f'' at the samples so the profile can be interpolated to
    sixth order without re-solving the equation.
    """

    dim: int
    r: np.ndarray
    f: np.ndarray
    df: np.ndarray
    ddf: np.ndarray
    r_max: float
    decay_rate: float
    _interp: BPoly = field(init=False, repr=False)

    def __post_init__(self) -> None:
        r, f, df = self.r, self.f, self.df
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not (r.shape == f.shape == df.shape == self.ddf.shape) or r.size < 4:
            raise ValueError("r, f, df, ddf must be equal-length arrays with >= 4 samples")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise ValueError("r must start at 0 and be strictly increasing")
        if not f[0] > 0:
            raise ValueError(f"profile must satisfy f(0) > 0, got f(0) = {f[0]!r}")
        if df[0] != 0.0:
            raise ValueError("profile must satisfy df(0) = 0")
        if np.any(f[:-1] <= 0):
            raise ValueError("ground state must be positive on [0, r_max)")
        if np.any(np.diff(f) >= 0):
            raise ValueError("profile must be strictly decreasing")
        if not f[-1] < 1e-8 * f[0]:
            raise ValueError("tail not negligible: need f(r_max) < 1e-8 f(0)")
        for a in (r, f, df, self.ddf):
            a.setflags(write=False)
        poly = BPoly.from_derivatives(r, np.column_stack([f, df, self.ddf]))
        object.__setattr__(self, "_interp", poly)

    @property
    def f0(self) -> float:
        return float(self.f[0])

    def __call__(self, r, nu: int = 0) -> np.ndarray:
        """Evaluate the interpolant (or its ``nu``-th derivative) inside [0, r_max]."""
        return self._interp(r, nu)

    def scaled(self, c: float) -> "RadialProfile":
        """The profile c·f (no longer a solution unless c = 1)."""
        return RadialProfile(self.dim, self.r, c * self.f, c * self.df, c * self.ddf,
                             self.r_max, self.decay_rate)

    def dilated(self, s: float) -> "RadialProfile":
        """The profile r -> f(r/s)."""
        return RadialProfile(self.dim, s * self.r, self.f, self.df / s, self.ddf / s**2,
                             s * self.r_max, self.decay_rate / s)

    def resampled(self, refine: int) -> "RadialProfile":
        """Same interpolant sampled on a grid ``refine`` times finer."""
        n = (self.r.size - 1) * refine + 1
        r = np.linspace(0.0, self.r_max, n)
        r[-1] = self.r_max
        vals = [self._interp(r, k) for k in range(3)]
        vals[1][0] = 0.0
        return RadialProfile(self.dim, r, vals[0], vals[1], vals[2], self.r_max,
                             self.decay_rate)

    def to_csv(self, path) -> None:
        header = f"# dim={self.dim} rmax={self.r_max:.10g} decay={self.decay_rate:.10g}\n"
        lines = [header, "r,f\n"]
        lines += [f"{ri:.10g},{fi:.17g}\n" for ri, fi in zip(self.r, self.f)]
        Path(path).write_text("".join(lines))


def read_profile_csv(path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Parse a file written by :meth:`RadialProfile.to_csv` into (meta, r, f)."""
    text = Path(path).read_text().splitlines()
    meta = {}
    for tok in text[0].lstrip("# ").split():
        k, v = tok.split("=")
        meta[k] = int(v) if k == "dim" else float(v)
    data = np.loadtxt(text[2:], delimiter=",", ndmin=2)
    return meta, data[:, 0], data[:, 1]


@dataclass(frozen=True)
class GroundStateMoments:
    """Whole-space integrals of the ground state; l2_invx is inf for dim = 1."""

    l2: float
    grad2: float
    lp: float
    l2_x: float
    grad2_x: float
    lp_x: float
    l2_invx: float


# -- shooting ---------------------------------------------------------------

def _rhs(dim: int):
    k = 4.0 / dim

    def rhs(r, y):
        f, g = y
        return [g, f - f * abs(f) ** k - (dim - 1) / r * g]

    return rhs


def _series_start(dim: int, a: float, r0: float) -> list[float]:
    # f = a + b r^2 + c r^4 + O(r^6) near the origin
    s = 1.0 + 4.0 / dim
    b = (a - a**s) / (2 * dim)
    c = b * (1.0 - s * a ** (s - 1)) / (4 * (dim + 2))
    return [a + b * r0**2 + c * r0**4, 2 * b * r0 + 4 * c * r0**3]


def _shoot(dim: int, r0: float, y0, scale: float):
    """Integrate outward; +1 if f hits zero (too much), -1 if f turns upward."""

    def hit_zero(r, y):
        return y[0]

    def turn(r, y):
        return y[1]

    hit_zero.terminal = turn.terminal = True
    hit_zero.direction, turn.direction = -1, 1
    sol = solve_ivp(_rhs(dim), (r0, _R_END), y0, method="DOP853", rtol=_RTOL,
                    atol=1e-15 * scale, events=(hit_zero, turn), dense_output=True)
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def _bisect(classify, lo: float, hi: float):
    """Bisect until lo, hi are adjacent floats; classify(lo) must be -1, classify(hi) +1."""
    sol_lo = sol_hi = None
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        side, sol = classify(mid)
        if side > 0:
            hi, sol_hi = mid, sol
        else:
            lo, sol_lo = mid, sol
    else:
        raise ConvergenceError("shooting bisection exceeded its iteration cap")
    if sol_lo is None:
        sol_lo = classify(lo)[1]
    if sol_hi is None:
        sol_hi = classify(hi)[1]
    return lo, sol_lo, sol_hi


def _split_radius(sol_lo, sol_hi, r0: float) -> float:
    """Largest radius up to which the two bracket solutions agree to _SPLIT."""
    r_end = min(sol_lo.t[-1], sol_hi.t[-1])
    rs = np.linspace(r0, r_end, 4000)
    f_lo, f_hi = sol_lo.sol(rs)[0], sol_hi.sol(rs)[0]
    bad = np.nonzero(np.abs(f_hi - f_lo) > _SPLIT * np.abs(f_lo))[0]
    if bad.size == 0:
        return float(rs[-1])
    return float(rs[max(bad[0] - 1, 1)])


def _find_f0_bracket(dim: int) -> tuple[float, float]:
    lo = 1.0 + 1e-9
    if _shoot(dim, R_START, _series_start(dim, lo, R_START), lo)[0] != -1:
        raise BracketError("lower end of the f(0) search interval does not undershoot")
    hi = 2.0
    while _shoot(dim, R_START, _series_start(dim, hi, R_START), hi)[0] != 1:
        hi *= 2.0
        if hi > 1e8:
            raise BracketError(f"no overshooting f(0) found below 1e8 for dim={dim}")
    return lo, hi


def solve_ground_state(dim: int, tol: float = 1e-8, h: float = GRID_STEP) -> RadialProfile:
    """Positive radial solution of f'' + (d-1)f'/r = f - f^{1+4/d}, f'(0)=0, f(∞)=0.

    Raises ``ConvergenceError`` when the sampled ODE residual exceeds tol·f(0).
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not 0 < tol <= 1e-4:
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")

    lo, hi = _find_f0_bracket(dim)
    f0, sol_lo, sol_hi = _bisect(
        lambda a: _shoot(dim, R_START, _series_start(dim, a, R_START), a), lo, hi)

    pieces = []
    r_c = _split_radius(sol_lo, sol_hi, R_START)
    pieces.append((R_START, r_c, sol_lo.sol))
    for _ in range(MAX_SEGMENTS):
        f_c, g_c = sol_lo.sol(r_c)
        if f_c < TAIL_LEVEL * f0:
            break

        def classify(g, r_c=r_c, f_c=f_c):
            return _shoot(dim, r_c, [f_c, g], f_c)

        w = 1e-6
        while True:
            g_steep, g_flat = g_c * (1 + w), g_c * (1 - w)
            if classify(g_steep)[0] == 1 and classify(g_flat)[0] == -1:
                break
            w *= 10
            if w > 1:
                raise BracketError(f"slope bracket failed at r={r_c:.3f}")
        # slope is negative: "hi" (overshoot) is the steeper one
        _, sol_lo, sol_hi = _bisect(lambda g: classify(-g), -g_flat, -g_steep)
        r_next = _split_radius(sol_lo, sol_hi, r_c)
        if r_next <= r_c + 1.0:
            raise ConvergenceError(f"tail continuation stalled at r={r_c:.3f}")
        pieces.append((r_c, r_next, sol_lo.sol))
        r_c = r_next
    else:
        raise ConvergenceError("tail did not reach the truncation level")

    n = int(math.floor(r_c / h))
    r = np.arange(n + 1) * h
    y = np.empty((2, r.size))
    near = r < R_START
    y[:, near] = _series_values(dim, f0, r[near])
    for a_, b_, dense in pieces:
        sel = (r >= a_) & (r <= b_)
        y[:, sel] = dense(r[sel])
    f, df = y
    df[0] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ddf = f - f * np.abs(f) ** (4.0 / dim) - np.where(r > 0, (dim - 1) / r * df, 0.0)
    ddf[0] = (f0 - f0 ** (1 + 4.0 / dim)) / dim
    f[0] = f0

    resid = ode_residual(dim, r, f, df)
    if resid > tol * f0:
        raise ConvergenceError(f"ODE residual {resid:.3e} exceeds tol*f(0) = {tol * f0:.3e}")

    return RadialProfile(dim, r, f, df, ddf, float(r[-1]), _fit_decay(dim, r, f))


def _series_values(dim: int, a: float, r: np.ndarray) -> np.ndarray:
    s = 1.0 + 4.0 / dim
    b = (a - a**s) / (2 * dim)
    c = b * (1.0 - s * a ** (s - 1)) / (4 * (dim + 2))
    return np.vstack([a + b * r**2 + c * r**4, 2 * b * r + 4 * c * r**3])


_D6 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])


def ode_residual(dim: int, r: np.ndarray, f: np.ndarray, df: np.ndarray) -> float:
    """max |f'' + (d-1)f'/r - f + f^{1+4/d}| on the interior of a uniform grid.

    f'' comes from a sixth-order central difference of the sampled f', so the
    check is independent of the right-hand side used by the integrator.
    """
    h = r[1] - r[0]
    ddf = np.convolve(df, _D6[::-1], mode="valid") / h
    ri, fi, dfi = r[3:-3], f[3:-3], df[3:-3]
    res = ddf + (dim - 1) / ri * dfi - fi + fi * np.abs(fi) ** (4.0 / dim)
    return float(np.max(np.abs(res)))


def _fit_decay(dim: int, r: np.ndarray, f: np.ndarray) -> float:
    # Far out the equation is linear, -Δf + f = 0, whose decaying radial solution is
    # r^{1-d/2} K_{d/2-1}(r). Divide that shape out and fit the remaining exponential.
    sel = r >= r[-1] / 2
    rs = r[sel]
    shape = (1.0 - 0.5 * dim) * np.log(rs) + np.log(kve(0.5 * dim - 1.0, rs)) - rs
    slope = np.polyfit(rs, np.log(f[sel]) - shape, 1)[0]
    return float(1.0 - slope)


def tail_slope(profile: RadialProfile) -> float:
    """Raw slope of log f on [r_max/2, r_max] (no prefactor removed)."""
    sel = profile.r >= profile.r_max / 2
    return float(np.polyfit(profile.r[sel], np.log(profile.f[sel]), 1)[0])


# -- moments ----------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _tail_integral(q: float, m: float, R: float) -> float:
    """∫_R^∞ e^{-q(r-R)} r^m dr."""
    a = m + 1.0
    return math.exp(q * R + math.lgamma(a) - a * math.log(q)) * gammaincc(a, q * R)


def ground_state_moments(profile: RadialProfile) -> GroundStateMoments:
    """Radial integrals over R^d by composite 8-point Gauss–Legendre per grid cell."""
    d = profile.dim
    r = profile.r
    lo, hi = r[:-1, None], r[1:, None]
    x = (0.5 * (lo + hi) + 0.5 * (hi - lo) * _GL_X).ravel()
    w = (0.5 * (hi - lo) * _GL_W).ravel()
    f = profile(x)
    g2 = profile(x, 1) ** 2
    f2 = f * f
    fp = np.abs(f) ** (2.0 + 4.0 / d)
    jac = x ** (d - 1)
    area = sphere_area(d)

    def integrate(vals, extra_power, q, amp):
        inner = np.sum(w * vals * jac * x**extra_power)
        tail = amp * _tail_integral(q, d - 1 + extra_power, profile.r_max)
        return area * (inner + tail)

    fR = profile.f[-1]
    sp = 2.0 + 4.0 / d
    l2 = integrate(f2, 0, 2.0, fR**2)
    grad2 = integrate(g2, 0, 2.0, fR**2)
    lp = integrate(fp, 0, sp, fR**sp)
    l2_x = integrate(f2, 1, 2.0, fR**2)
    grad2_x = integrate(g2, 1, 2.0, fR**2)
    lp_x = integrate(fp, 1, sp, fR**sp)
    l2_invx = integrate(f2, -1, 2.0, fR**2) if d >= 2 else math.inf
    return GroundStateMoments(l2, grad2, lp, l2_x, grad2_x, lp_x, l2_invx)


def compute_G(profile: RadialProfile, check: bool = True) -> float:
    """Quotient ∫|∇f|² (∫f²)^{2/d} / ∫f^{2+4/d} at the ground state.

    With ``check`` the result must match the virial shortcut (d/(d+2))(∫f²)^{2/d}
    to 1e-6 relative.
    """
    m = ground_state_moments(profile)
    d = profile.dim
    G = m.grad2 * m.l2 ** (2.0 / d) / m.lp
    if check:
        shortcut = d / (d + 2.0) * m.l2 ** (2.0 / d)
        if abs(G / shortcut - 1.0) > 1e-6:
            raise ConvergenceError(
                f"G={G:.10g} disagrees with virial shortcut {shortcut:.10g}")
    return G


def virial_residuals(m: GroundStateMoments, dim: int) -> tuple[float, float]:
    d = dim
    return (abs(m.lp * d / ((d + 2) * m.grad2) - 1.0),
            abs(m.lp * 2 / ((d + 2) * m.l2) - 1.0))


def curvature_bracket_identity(m: GroundStateMoments, dim: int) -> float:
    """Right-hand form of the bracket after the |x|·f multiplier identity."""
    d = dim
    return (2.0 / d * m.lp_x + (d + 2) * (d - 1) / (2.0 * d) * m.l2_invx) / m.lp


def curvature_coefficient(m: GroundStateMoments, dim: int, verify: bool = True) -> float:
    """grad2_x/grad2 + (2/d)·l2_x/l2 − lp_x/lp, the sign of the O(ε) boundary term.

    ``verify`` cross-checks against :func:`curvature_bracket_identity` to 1e-4
    relative; only meaningful for a converged ground state.
    """
    if dim < 2:
        raise ValueError("curvature coefficient needs dim >= 2")
    d = dim
    bracket = m.grad2_x / m.grad2 + 2.0 / d * m.l2_x / m.l2 - m.lp_x / m.lp
    if verify:
        other = curvature_bracket_identity(m, d)
        if abs(bracket / other - 1.0) > 1e-4:
            raise ConvergenceError(
                f"bracket {bracket:.8g} disagrees with identity form {other:.8g}")
    return bracket


def angular_constant(dim: int) -> float:
    """C_d of the boundary-cap expansion; 1/(2π) in the plane."""
    if dim < 2:
        raise ValueError(f"angular constant needs dim >= 2, got {dim}")
    if dim == 2:
        return 1.0 / (2.0 * math.pi)
    return (dim - 2) * (dim - 1) / (4.0 * math.pi) * beta(dim / 2 - 1, 1.5)


def gns_constant(dim: int, tol: float = 1e-8) -> float:
    """G(dim) computed from a freshly solved ground state."""
    return compute_G(solve_ground_state(dim, tol))


__all__ = [
    "BracketError", "ConvergenceError", "RadialProfile", "GroundStateMoments",
    "solve_ground_state", "compute_G", "ground_state_moments", "virial_residuals",
    "curvature_coefficient", "curvature_bracket_identity", "angular_constant",
    "gns_constant", "ode_residual", "sphere_area", "read_profile_csv", "tail_slope",
]
