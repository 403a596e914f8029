"""Closed-form compactness thresholds, comparison constants and existence verdicts.

A minimizer of the quotient on Ω is guaranteed once some admissible test
function beats the relevant loss-of-compactness level:

* smooth boundary, any d ≥ 2:   G(d) / 2^{2/d}
* planar domain with corners:   G(2) · min(π, α_1, …, α_N) / (2π)

The comparison values used for hypercubes come from the one-dimensional cosine
competitor T(d) and from the sharp Sobolev constant S_d ≤ G(d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from scipy import integrate, special

from .domains import DomainSpec, corner_angles

DEFAULT_MARGIN = 1e-3

# Reference values of G(d) quoted in the literature: G(2) directly, G(10) as 4 × 9.536.
LITERATURE_G = {2: 5.8545, 10: 4 * 9.536}


@dataclass(frozen=True)
class Constants:
    """Values of G(d) available to verdicts, each tagged with where it came from."""

    values: dict[int, float] = field(default_factory=lambda: dict(LITERATURE_G))
    sources: dict[int, str] = field(
        default_factory=lambda: {d: "literature" for d in LITERATURE_G})
    margin: float = DEFAULT_MARGIN

    def G(self, dim: int) -> float:
        try:
            return self.values[dim]
        except KeyError:
            raise KeyError(f"no value of G({dim}) configured; compute it with radial_gns") from None

    def with_value(self, dim: int, value: float, source: str) -> "Constants":
        if not value > 0:
            raise ValueError(f"G({dim}) must be positive, got {value}")
        vals, srcs = dict(self.values), dict(self.sources)
        vals[dim], srcs[dim] = float(value), source
        return Constants(vals, srcs, self.margin)

    def source(self, dim: int) -> str:
        return self.sources.get(dim, "unknown")


@dataclass(frozen=True)
class ThresholdVerdict:
    domain: DomainSpec
    threshold: float
    formula: str
    estimate: float
    verdict: str
    margin: float
    g_source: str

    @property
    def exists(self) -> bool:
        return self.verdict == "exists"

    def as_dict(self) -> dict:
        return {"domain": self.domain.kind, "dim": self.domain.dim,
                "threshold": self.threshold, "formula": self.formula,
                "estimate": self.estimate, "verdict": self.verdict,
                "margin": self.margin, "g_source": self.g_source}


def smooth_threshold(dim: int, G_d: float) -> float:
    if dim < 2:
        raise ValueError("the smooth-boundary threshold needs dim >= 2")
    if not G_d > 0:
        raise ValueError(f"G_d must be positive, got {G_d}")
    return G_d / 2.0 ** (2.0 / dim)


def corner_threshold(angles: Sequence[float], G_2: float) -> float:
    """G_2 · min(π, angles) / (2π); an empty list means a smooth planar boundary."""
    if not G_2 > 0:
        raise ValueError(f"G_2 must be positive, got {G_2}")
    for a in angles:
        if not 0.0 < a <= 2.0 * math.pi:
            raise ValueError(f"corner angle {a} outside (0, 2π]")
    return G_2 * min([math.pi, *angles]) / (2.0 * math.pi)


def _cos_moment(q: float) -> float:
    # ∫_0^1 |cos πx|^q dx, split at the zero for an accurate quadrature
    f = lambda x: abs(math.cos(math.pi * x)) ** q
    a = integrate.quad(f, 0.0, 0.5, epsabs=0, epsrel=1e-13, limit=200)[0]
    b = integrate.quad(f, 0.5, 1.0, epsabs=0, epsrel=1e-13, limit=200)[0]
    return a + b


def hypercube_test_value(dim: int) -> float:
    """T(d): the quotient of cos(πx₁) on the unit cube at the critical power p = 2/d."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    e = 2.0 / dim
    return math.pi ** 2 * _cos_moment(2.0) ** (1.0 + e) / _cos_moment(2.0 + 2.0 * e)


def hypercube_test_value_beta(dim: int) -> float:
    """Closed form of T(d) through the Beta function (cross-check)."""
    e = 2.0 / dim
    return math.pi ** 3 / (2.0 ** (1.0 + e) * special.beta(1.5 + e, 0.5))


def sphere_measure(n: int) -> float:
    """|S^n|, the area of the unit sphere in ℝ^{n+1}."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def sobolev_lower_bound(dim: int) -> float:
    """Sharp Sobolev constant S_d = d(d-2)/4 · |S^d|^{2/d}, a lower bound for G(d)."""
    if dim < 3:
        raise ValueError("the Sobolev constant is defined for dim >= 3")
    return dim * (dim - 2) / 4.0 * sphere_measure(dim) ** (2.0 / dim)


def hypercube_chain_holds(dim: int) -> bool:
    """T(d) ≤ π² < (11·9/16)|S^11|^{2/11} ≤ (d(d-2)/16)|S^d|^{2/d}, for dim ≥ 11."""
    if dim < 11:
        raise ValueError("the chain is stated for dim >= 11")
    s11 = sobolev_lower_bound(11) / 4.0
    sd = sobolev_lower_bound(dim) / 4.0
    return hypercube_test_value(dim) <= math.pi ** 2 < s11 <= sd


def rectangle_critical_aspect(G_2: float, one_d_value: float) -> float:
    """Aspect ratio b above which the 1-D competitor beats G(2)/4 on [0,1/b]×[0,b]."""
    if not (G_2 > 0 and one_d_value > 0):
        raise ValueError("G_2 and one_d_value must be positive")
    return math.sqrt(one_d_value / (G_2 / 4.0))


def domain_threshold(spec: DomainSpec, constants: Constants) -> tuple[float, str, str]:
    """(threshold, formula tag, G source) for the domain."""
    d = spec.dim
    if d == 1:
        raise ValueError("no compactness threshold in dimension 1 (minimizers never exist)")
    if d == 2 and spec.kind != "ball":
        G2 = constants.G(2)
        return corner_threshold(corner_angles(spec), G2), "corner", constants.source(2)
    Gd = constants.G(d)
    if spec.kind == "hypercube":
        # square corners at every edge: the flat-corner level G(d)/4 is what the cube tests use
        return Gd / 4.0, "hypercube", constants.source(d)
    return smooth_threshold(d, Gd), "smooth", constants.source(d)


def verdict(spec: DomainSpec, estimate: float, constants: Constants | None = None,
            threshold: float | None = None, formula: str | None = None) -> ThresholdVerdict:
    """Strict comparison of an upper bound against the domain's threshold.

    ``threshold`` overrides the domain's own level; this is how the Sobolev route
    for large hypercubes is expressed (threshold S_d/4 ≤ G(d)/4).
    """
    constants = constants or Constants()
    if not math.isfinite(estimate) or estimate <= 0:
        raise ValueError(f"estimate must be a positive finite number, got {estimate}")
    if threshold is None:
        threshold, formula, source = domain_threshold(spec, constants)
    else:
        source = "explicit"
        formula = formula or "explicit"
    status = "exists" if estimate < threshold - constants.margin else "inconclusive"
    return ThresholdVerdict(spec, float(threshold), formula, float(estimate), status,
                            constants.margin, source)


def hypercube_verdict(dim: int, constants: Constants | None = None) -> ThresholdVerdict:
    """Verdict for the unit cube using the cosine competitor T(d).

    Uses G(d)/4 when G(d) is configured, else the Sobolev floor S_d/4 (dim ≥ 3).
    """
    from .domains import hypercube

    constants = constants or Constants()
    spec = hypercube(dim)
    est = hypercube_test_value(dim)
    if dim in constants.values:
        return verdict(spec, est, constants)
    return verdict(spec, est, constants, threshold=sobolev_lower_bound(dim) / 4.0,
                   formula="sobolev")


def sweep_table(dims: Sequence[int]) -> list[dict]:
    """Rows of T(d), S_d and the smooth threshold with G(d) replaced by S_d."""
    rows = []
    for d in dims:
        row = {"dim": d, "T": hypercube_test_value(d)}
        if d >= 3:
            s = sobolev_lower_bound(d)
            row.update(S=s, S_over_4=s / 4.0, smooth_floor=smooth_threshold(d, s))
        else:
            row.update(S=math.nan, S_over_4=math.nan, smooth_floor=math.nan)
        rows.append(row)
    return rows
