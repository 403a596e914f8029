"""Discrete Poincaré–Sobolev quotient and its normalized gradient flow.

    Q_p(u) = ∫|∇u|² (∫u²)^p / ∫|u - ū|^{2+2p}

The flow works on the manifold {ū = 0, ∫u² = 1}. Descent directions are
H¹ Riesz representatives, (S + M)⁻¹ ∇Q, so the step size does not have to
shrink with the mesh spacing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .domains import DomainSpec, Mesh, build_mesh, distance_to_boundary

MASS_FRACTION = 0.9
STEP_START = 0.1
STEP_MAX = 1.0
STEP_MIN = 1e-14
CHANGE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GridField:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.size,):
            raise ValueError(f"field has shape {v.shape}, mesh has {self.mesh.size} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def to_csv(self, path) -> None:
        d = self.mesh.dim
        header = ",".join([f"x{i + 1}" for i in range(d)] + ["u"])
        data = np.column_stack([self.mesh.nodes, self.values])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


@dataclass
class QuotientReport:
    p: float
    grad2: float
    l2: float
    denom: float
    quotient: float
    history: list[float] = field(default_factory=list)
    concentration: tuple[float, float] = (math.nan, math.nan)
    converged: bool = True
    iterations: int = 0
    field: Optional[GridField] = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "p": self.p, "grad2": self.grad2, "l2": self.l2, "denom": self.denom,
            "quotient": self.quotient, "iterations": self.iterations,
            "converged": self.converged,
            "concentration_norm": self.concentration[0],
            "concentration_mass_radius": self.concentration[1],
        }

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.summary().items())

    def to_json(self) -> str:
        doc = self.summary()
        doc["history"] = list(self.history)
        return json.dumps(doc, sort_keys=True, allow_nan=True)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def admissible_p(p: float, dim: int) -> bool:
    if p < 0:
        return False
    return dim <= 2 or p <= 2.0 / (dim - 2)


def _check_p(p: float, dim: int) -> None:
    if not admissible_p(p, dim):
        cap = "inf" if dim <= 2 else f"{2.0 / (dim - 2):g}"
        raise ValueError(f"p={p} outside the admissible range [0, {cap}] for dim={dim}")


def abs_pow(v: np.ndarray, q: float) -> np.ndarray:
    """|v|^q with |v| < 1e-300 sent to 0."""
    a = np.abs(v)
    out = np.zeros_like(a)
    ok = a >= 1e-300
    out[ok] = np.exp(q * np.log(a[ok]))
    return out


def quotient_parts(mesh: Mesh, u: np.ndarray, p: float) -> tuple[float, float, float, float]:
    """(∫|∇u|², ∫u², ∫|u-ū|^{2+2p}, quotient); quotient is +inf if the denominator is 0."""
    w, B, Wq = mesh.weights, mesh.qp_matrix, mesh.qp_weights
    grad2 = float(u @ (mesh.stiffness @ u))
    Bu = B @ u
    l2 = float(Wq @ (Bu * Bu))
    denom = float(Wq @ abs_pow(Bu - (w @ u) / w.sum(), 2.0 + 2.0 * p))
    if denom == 0.0:
        return grad2, l2, denom, math.inf
    return grad2, l2, denom, grad2 * l2**p / denom


def quotient_gradient(mesh: Mesh, u: np.ndarray, p: float) -> tuple[float, np.ndarray]:
    """Quotient value and its gradient with respect to the nodal values."""
    w, B, Wq = mesh.weights, mesh.qp_matrix, mesh.qp_weights
    q = 2.0 + 2.0 * p
    Su = mesh.stiffness @ u
    E = float(u @ Su)
    Bu = B @ u
    L = float(Wq @ (Bu * Bu))
    v = Bu - (w @ u) / w.sum()
    phi = Wq * abs_pow(v, q - 2.0) * v
    D = float(phi @ v)
    Q = E * L**p / D
    dL = 2.0 * (B.T @ (Wq * Bu))
    dD = q * (B.T @ phi - w * phi.sum() / w.sum())
    return Q, Q * (2.0 * Su / E + p * dL / L - dD / D)


def mass_radius(mesh: Mesh, u: np.ndarray, center: np.ndarray,
                fraction: float = MASS_FRACTION) -> float:
    """Smallest radius around ``center`` holding ``fraction`` of ∫u²."""
    dist = np.linalg.norm(mesh.nodes - center, axis=1)
    order = np.argsort(dist, kind="stable")
    mass = (mesh.weights * u * u)[order]
    cum = np.cumsum(mass)
    k = int(np.searchsorted(cum, fraction * cum[-1]))
    return float(dist[order][min(k, len(order) - 1)])


def _concentration(mesh: Mesh, u: np.ndarray, p: float) -> tuple[float, float]:
    w = mesh.weights
    v = u - (w @ u) / w.sum()
    nrm = math.sqrt(mesh.integrate_fn(np.square, v))
    if nrm == 0.0:
        return (0.0, math.nan)
    v = v / nrm
    q = 2.0 + 2.0 * p
    lq = mesh.integrate_fn(lambda z: abs_pow(z, q), v) ** (1.0 / q)
    center = mesh.nodes[int(np.argmax(np.abs(v)))]
    return lq, mass_radius(mesh, v, center)


def evaluate_quotient(u: GridField, p: float) -> QuotientReport:
    mesh = u.mesh
    _check_p(p, mesh.dim)
    grad2, l2, denom, Q = quotient_parts(mesh, u.values, p)
    conc = _concentration(mesh, u.values, p) if denom > 0 else (0.0, math.nan)
    return QuotientReport(p, grad2, l2, denom, Q, [Q], conc, True, 0, u)


def concentration_diagnostics(report: QuotientReport) -> tuple[float, float]:
    """(90% mass radius around the |u| argmax, distance of that argmax to ∂Ω)."""
    if report.field is None:
        raise ValueError("report carries no field")
    mesh, u = report.field.mesh, report.field.values
    k = int(np.argmax(np.abs(u)))  # first maximal node on ties
    center = mesh.nodes[k]
    radius = mass_radius(mesh, u, center)
    bdist = float(distance_to_boundary(mesh.spec, center[None, :])[0])
    return radius, bdist


# -- descent ----------------------------------------------------------------

def _project(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    w = mesh.weights
    u = u - (w @ u) / w.sum()
    return u / math.sqrt(mesh.integrate_fn(np.square, u))


def smooth_random_field(mesh: Mesh, seed: int, passes: int = 2) -> np.ndarray:
    """Seeded Gaussian noise smoothed by ``passes`` solves with S + M."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(mesh.size)
    solve = splu(_h1_matrix(mesh)).solve
    for _ in range(passes):
        u = solve(mesh.weights * u)
    return u


def _h1_matrix(mesh: Mesh) -> sp.csc_matrix:
    return (mesh.stiffness + mesh.mass).tocsc()


def descend(mesh: Mesh, u0: np.ndarray, p: float, max_iter: int,
            symmetry: Optional[Callable[[np.ndarray], np.ndarray]] = None,
            callback: Optional[Callable[[int, np.ndarray, float], None]] = None,
            ) -> QuotientReport:
    """Projected H¹-gradient descent with backtracking; ``symmetry`` projects onto a class."""
    _check_p(p, mesh.dim)

    def constrain(v):
        if symmetry is not None:
            v = symmetry(v)
        return _project(mesh, v)

    H = _h1_matrix(mesh)
    solve = splu(H).solve
    u = constrain(np.asarray(u0, dtype=float))
    Q, grad = quotient_gradient(mesh, u, p)
    history = [Q]
    tau = STEP_START / 2  # first trial step is STEP_START
    change = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = solve(grad)
        if symmetry is not None:
            g = symmetry(g)
        gnorm = math.sqrt(abs(float(g @ (H @ g))))
        if gnorm == 0.0:
            change = 0.0
            break
        unorm = math.sqrt(float(u @ (H @ u)))
        direction = g * (unorm / gnorm)
        step = min(STEP_MAX, 2.0 * tau)
        while step >= STEP_MIN:
            trial = constrain(u - step * direction)
            Qt = quotient_parts(mesh, trial, p)[3]
            if Qt < Q:
                break
            step *= 0.5
        else:
            change = 0.0  # no decrease representable at this step size
            break
        tau = step
        change = (Q - Qt) / Q
        u = trial
        Q, grad = quotient_gradient(mesh, u, p)
        history.append(Q)
        if callback is not None:
            callback(it, u, Q)
        if change < 1e-2 * CHANGE_TOL:
            break

    grad2, l2, denom, Qf = quotient_parts(mesh, u, p)
    return QuotientReport(p, grad2, l2, denom, Qf, history, _concentration(mesh, u, p),
                          change <= CHANGE_TOL, it, GridField(mesh, u))


def minimize(spec: DomainSpec, p: float, n: int, seed: int = 0, max_iter: int = 2000,
             mesh: Optional[Mesh] = None, callback=None) -> QuotientReport:
    """Minimize the discrete quotient on ``spec`` from a seeded random start.

    All integrals are exact for the piecewise-linear interpolant, so every
    reported value is the quotient of an actual H¹ function: an upper bound
    for the continuum infimum, not merely an approximation of it.
    """
    if mesh is None:
        mesh = build_mesh(spec, n)
    _check_p(p, mesh.dim)
    u0 = smooth_random_field(mesh, seed)
    return descend(mesh, u0, p, max_iter, callback=callback)


# -- IMS partition ------------------------------------------------------------

def smooth_ramp(t: np.ndarray) -> np.ndarray:
    """C^∞ monotone ramp from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.asarray(t, dtype=float)
    a = _sigma(t)
    b = _sigma(1.0 - t)
    return a / (a + b)


def _sigma(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def cutoff(x: np.ndarray) -> np.ndarray:
    """φ with φ = 1 on (-∞, -1/2], 0 on [1/2, ∞) and φ(x)² + φ(-x)² = 1.

    Written as sin(π/2 · S(1/2 - x)), equal to cos(π/2 · S(x + 1/2)), so the
    flat parts are exactly 0 and 1 in floating point.
    """
    return np.sin(0.5 * math.pi * smooth_ramp(0.5 - np.asarray(x, dtype=float)))


def ims_chi(x: np.ndarray, delta: float, eta: float) -> np.ndarray:
    """χ(x) = Π_i φ((|x_i| - δ)/η) for points x of shape (N, d)."""
    return np.prod(cutoff((np.abs(x) - delta) / eta), axis=1)


def ims_partition_sum(delta: float, eta: float, sample_points) -> np.ndarray:
    """Σ_k χ²(x - 2δk) over the lattice shifts k that can touch each point."""
    x = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if x.ndim != 2:
        raise ValueError("sample points must have shape (N, d)")
    d = x.shape[1]
    base = np.floor(x / (2 * delta)).astype(int)
    total = np.zeros(x.shape[0])
    offsets = np.array(np.meshgrid(*[np.arange(-1, 3)] * d, indexing="ij")).reshape(d, -1).T
    for off in offsets:
        k = base + off
        total += ims_chi(x - 2 * delta * k, delta, eta) ** 2
    return total


def ims_partition_check(delta: float, eta: float, sample_points) -> float:
    """max |Σ_k χ²(x - 2δk) - 1| over the sample points."""
    if not delta > eta > 0:
        raise ValueError(f"need delta > eta > 0, got delta={delta}, eta={eta}")
    return float(np.max(np.abs(ims_partition_sum(delta, eta, sample_points) - 1.0)))
