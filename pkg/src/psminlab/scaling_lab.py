"""Dilation behaviour of the quotient and the subcritical explosion bound.

For a zero-average bump φ supported in the unit ball, u_λ(x) = φ(λ(x - c))
has quotient λ^{2-pd} Q(φ). Supercritical powers (p > 2/d) therefore drive the
infimum to zero. The bump used is φ = ∂₁Ψ with Ψ(x) = exp(-1/(1 - |x|²)),
whose average is exactly zero because it is a derivative of a compactly
supported function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize, special

from .domains import Mesh, build_mesh, hypercube
from .quotient_solver import quotient_parts

MIN_NODES_ACROSS = 8


def bump(x: np.ndarray) -> np.ndarray:
    """φ(x) = ∂₁ exp(-1/(1 - |x|²)) for points ``x`` of shape (N, d)."""
    r2 = np.einsum("ij,ij->i", x, x)
    out = np.zeros(x.shape[0])
    inside = r2 < 1.0
    s = 1.0 - r2[inside]
    out[inside] = -2.0 * x[inside, 0] / s**2 * np.exp(-1.0 / s)
    return out


@dataclass(frozen=True)
class ScalingRun:
    p: float
    dim: int
    lambdas: tuple[float, ...]
    quotients: tuple[float, ...]
    fitted_exponent: float
    n: int

    @property
    def expected_exponent(self) -> float:
        return 2.0 - self.p * self.dim

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.lambdas, self.quotients))


@lru_cache(maxsize=4)
def _cube_mesh(dim: int, n: int) -> Mesh:
    return build_mesh(hypercube(dim), n)


def default_resolution(dim: int) -> int:
    return {1: 4096, 2: 512, 3: 64}.get(dim, 16)


def fit_exponent(lambdas: Sequence[float], quotients: Sequence[float]) -> float:
    """Least-squares slope of log Q against log λ over the upper half of the λ range."""
    lam = np.asarray(lambdas, float)
    q = np.asarray(quotients, float)
    k = lam.size // 2
    sel = slice(k, None) if lam.size - k >= 2 else slice(None)
    return float(np.polyfit(np.log(lam[sel]), np.log(q[sel]), 1)[0])


def scaling_sweep(p: float, dim: int, lambdas: Sequence[float], n: int | None = None,
                  ) -> ScalingRun:
    """Quotient of φ(λ(x - c)) on the unit cube for each λ, and the fitted exponent."""
    lam = tuple(float(v) for v in lambdas)
    if len(lam) < 2 or any(b <= a for a, b in zip(lam, lam[1:])):
        raise ValueError("lambdas must be strictly increasing with at least two entries")
    if lam[0] < 2.0:
        raise ValueError("lambda must be >= 2 so the bump fits inside the unit cube")
    if p < 0:
        raise ValueError("p must be non-negative")
    n = n or default_resolution(dim)
    across = 2.0 * n / lam[-1]
    if across < MIN_NODES_ACROSS:
        raise ValueError(f"only {across:.1f} mesh cells across the bump at lambda={lam[-1]}; "
                         f"need {MIN_NODES_ACROSS} (raise n or lower lambda)")
    mesh = _cube_mesh(dim, n)
    c = np.full(dim, 0.5)
    qs = []
    for L in lam:
        u = bump(L * (mesh.nodes - c))
        qs.append(quotient_parts(mesh, u, p)[3])
    return ScalingRun(p, dim, lam, tuple(qs), fit_exponent(lam, qs), n)


def geometric_lambdas(lo: float, hi: float, count: int) -> list[float]:
    return list(np.geomspace(lo, hi, count))


def ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


def bessel_zero(order: float) -> float:
    """First positive zero of J_order, by bracketing on a grid then Brent's method."""
    if order > -1 and float(order).is_integer():
        return float(special.jn_zeros(int(order), 1)[0])
    xs = np.linspace(1e-3, order + 10.0, 4000)
    vals = special.jv(order, xs)
    k = int(np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0])
    return optimize.brentq(lambda x: special.jv(order, x), xs[k], xs[k + 1], xtol=1e-15)


def dirichlet_eigenvalue_ball(dim: int) -> float:
    """First Dirichlet eigenvalue of the unit ball, j_{d/2-1,1}²."""
    return bessel_zero(dim / 2.0 - 1.0) ** 2


def explosion_constants(p: float, dim: int, G_d: float, L: float) -> tuple[float, float]:
    """(interior constant, boundary-adjusted constant)."""
    if not 0.0 <= p < 2.0 / dim:
        raise ValueError(f"p must lie in [0, 2/dim) = [0, {2.0 / dim:g})")
    if L < 0:
        raise ValueError("Lipschitz constant must be non-negative")
    if not G_d > 0:
        raise ValueError("G_d must be positive")
    mu = dirichlet_eigenvalue_ball(dim)
    interior = (mu / ball_volume(dim)) ** ((2.0 - p * dim) / (2.0 + dim)) \
        * G_d ** ((1.0 + p) / (1.0 + 2.0 / dim))
    boundary = interior / (2.0 + 2.0 * L) ** 2 * 2.0 ** (-p)
    return interior, boundary


def explosion_constant(p: float, dim: int, G_d: float, L: float) -> float:
    """C_{p,Ω}: the smaller of the interior and boundary constants."""
    return min(explosion_constants(p, dim, G_d, L))


def explosion_bound(p: float, dim: int, G_d: float, L: float, delta: float) -> float:
    """Lower bound C δ^{dp-2} for the quotient of functions concentrated at scale δ."""
    return explosion_constant(p, dim, G_d, L) * delta ** (dim * p - 2.0)
