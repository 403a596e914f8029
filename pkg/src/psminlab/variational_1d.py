"""One-dimensional zero-average quotient ∫(φ')² ∫φ² / ∫φ⁴ on [0, 1].

Profiles are nodal values on a uniform grid. The descent runs on the
piecewise-linear interpolant (cheap, exact gradients); reported values are
the quotient of the not-a-knot cubic spline through the same nodes,
integrated exactly by Gauss–Legendre on every cell. Either interpolant is an
H¹ function, so both values are genuine upper bounds for the 1-D infimum; the
spline one is far closer to it near a smooth minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .domains import Mesh, build_mesh, hypercube
from .quotient_solver import QuotientReport, descend, quotient_parts

MIN_NODES = 64
MEAN_TOL = 1e-12


@lru_cache(maxsize=8)
def interval_mesh(n: int) -> Mesh:
    """Mesh of [0, 1] with ``n`` uniformly spaced nodes."""
    return build_mesh(hypercube(1), n - 1)


@dataclass(frozen=True, eq=False)
class Profile1D:
    n: int
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"expected {self.n} values, got shape {v.shape}")
        if self.n < 4:
            raise ValueError("need at least 4 nodes")
        if not np.all(np.isfinite(v)) or not np.any(v):
            raise ValueError("profile must be finite and not identically zero")
        mesh = interval_mesh(self.n)
        mean = mesh.integrate(v)
        if abs(mean) > MEAN_TOL * max(1.0, float(np.max(np.abs(v)))):
            raise ValueError(f"profile average {mean:.3e} is not zero")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    @classmethod
    def from_function(cls, fn, n: int) -> "Profile1D":
        x = np.linspace(0.0, 1.0, n)
        v = fn(x)
        v = v - interval_mesh(n).integrate(v)
        return cls(n, v)

    def reflected(self) -> "Profile1D":
        return Profile1D(self.n, self.values[::-1])

    def to_csv(self, path: str | Path) -> None:
        x = self.x
        lines = ["x,phi"] + [f"{a:.17g},{b:.17g}" for a, b in zip(x, self.values)]
        Path(path).write_text("\n".join(lines) + "\n")


_GAUSS = np.polynomial.legendre.leggauss(8)  # exact for the degree-12 quartic term


def spline_integrals(values: np.ndarray) -> tuple[float, float, float]:
    """(∫(φ')², ∫(φ-φ̄)², ∫(φ-φ̄)⁴) for the cubic spline through uniform nodes on [0, 1]."""
    n = values.size
    x = np.linspace(0.0, 1.0, n)
    cs = CubicSpline(x, values, bc_type="not-a-knot")
    t, w = _GAUSS
    h = 1.0 / (n - 1)
    pts = (x[:-1, None] + 0.5 * h * (t[None, :] + 1.0)).ravel()
    wts = np.tile(0.5 * h * w, n - 1)
    v = cs(pts)
    v = v - wts @ v
    return float(wts @ cs(pts, 1) ** 2), float(wts @ v**2), float(wts @ v**4)


def quotient_1d(phi: Profile1D) -> float:
    """∫(φ')² ∫φ² / ∫φ⁴ of the spline interpolant; +inf if ∫φ⁴ vanishes."""
    e, l2, q4 = spline_integrals(phi.values)
    return math.inf if q4 == 0.0 else e * l2 / q4


def quotient_1d_linear(phi: Profile1D) -> float:
    """The same quotient for the piecewise-linear interpolant (what the descent sees)."""
    return quotient_parts(interval_mesh(phi.n), phi.values, 1.0)[3]


def antisymmetrize(v: np.ndarray) -> np.ndarray:
    """Projection onto φ(1 - x) = -φ(x); the midpoint node (odd n) is set to 0."""
    return 0.5 * (v - v[::-1])


def optimize_1d(n: int = 512, seed: int = 0, max_iter: int = 4000,
                antisymmetric: bool = True, start: np.ndarray | None = None,
                ) -> tuple[Profile1D, float, QuotientReport]:
    """Minimize the 1-D quotient by projected H¹ descent.

    The default start is a seeded smooth random field; ``start`` overrides it.
    With ``antisymmetric=False`` the full zero-average class is explored.
    """
    if n < MIN_NODES:
        raise ValueError(f"need n >= {MIN_NODES}, got {n}")
    mesh = interval_mesh(n)
    if start is None:
        rng = np.random.default_rng(seed)
        x = mesh.nodes[:, 0]
        # random low modes; an odd-about-1/2 sum is kept when antisymmetric
        k = np.arange(1, 9)
        c = rng.standard_normal(k.size) / k**2
        start = np.cos(np.pi * np.outer(x, k)) @ c
    sym = antisymmetrize if antisymmetric else None
    report = descend(mesh, np.asarray(start, dtype=float), 1.0, max_iter, symmetry=sym)
    u = report.field.values
    if antisymmetric:
        u = antisymmetrize(u)  # remove round-off asymmetry from the normalisation
    prof = Profile1D(n, u)
    return prof, quotient_1d(prof), report


def refinement_study(ns=(256, 512, 1024), seed: int = 0) -> list[tuple[int, float]]:
    return [(n, optimize_1d(n, seed)[1]) for n in ns]
