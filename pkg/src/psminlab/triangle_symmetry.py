"""Symmetric / antisymmetric split across the diagonal of the right isosceles triangle.

The triangle has its right angle at the origin, so the diagonal x₁ = x₂ is a
symmetry axis and the reflection R(x₁, x₂) = (x₂, x₁) permutes mesh nodes.
For u = u_S + u_A with u_S = (u + u∘R)/2 and u_A = (u - u∘R)/2:

    α = ∫|∇u_A|² / ∫|∇u|²      β = ∫u_A² / ∫u²
    γ = (∫u_A⁴ + 3∫u_A²u_S²) / ∫u⁴      ζ = ∫u_A²u_S² / ∫u⁴

Every integral is taken with the mesh's reflection-invariant quadrature, so
cross terms with an odd power of u_A vanish up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quotient_solver import GridField

GRID_STEP = 1e-3


@dataclass(frozen=True, eq=False)
class SymmetrySplit:
    u_S: GridField
    u_A: GridField
    alpha: float
    beta: float
    gamma: float
    zeta: float
    # raw integrals, kept for the identity checks
    moments: dict

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta,
                "gamma": self.gamma, "zeta": self.zeta}


def split(u: GridField) -> SymmetrySplit:
    mesh = u.mesh
    perm = mesh.reflection()  # raises unless the mesh is reflection-closed
    v = u.values
    vr = v[perm]
    # u_A is exactly antisymmetric (and exactly 0 on the diagonal, where vr = v);
    # u_S = u - u_A then reproduces u to a single rounding.
    uA = 0.5 * (v - vr)
    uS = v - uA
    S, B, W = mesh.stiffness, mesh.qp_matrix, mesh.qp_weights
    bs, ba = B @ uS, B @ uA
    bu = bs + ba
    m = {
        "grad": float(v @ (S @ v)),
        "grad_A": float(uA @ (S @ uA)),
        "grad_S": float(uS @ (S @ uS)),
        "l2": float(W @ bu**2),
        "l2_S": float(W @ bs**2),
        "l2_A": float(W @ ba**2),
        "cross": float(W @ (bs * ba)),
        "l4": float(W @ bu**4),
        "l4_S": float(W @ bs**4),
        "l4_A": float(W @ ba**4),
        "l4_SA": float(W @ (bs**2 * ba**2)),
    }
    if m["grad"] <= 0 or m["l4"] <= 0:
        raise ValueError("field must be non-constant")
    alpha = m["grad_A"] / m["grad"]
    beta = m["l2_A"] / m["l2"]
    gamma = (m["l4_A"] + 3.0 * m["l4_SA"]) / m["l4"]
    zeta = m["l4_SA"] / m["l4"]
    return SymmetrySplit(GridField(mesh, uS), GridField(mesh, uA),
                         alpha, beta, gamma, zeta, m)


def stationarity_gap(s: SymmetrySplit) -> float:
    """|γ - (α + β)/2|, which vanishes at a minimizer."""
    return abs(s.gamma - 0.5 * (s.alpha + s.beta))


def region_membership(alpha: float, beta: float) -> tuple[bool, bool]:
    """(α + β - 3/4 ≤ αβ, (1-α) + (1-β) - 3/4 ≤ (1-α)(1-β))."""
    if not (0.0 <= alpha <= 1.0 and 0.0 <= beta <= 1.0):
        raise ValueError("alpha and beta must lie in [0, 1]")
    first = alpha + beta - 0.75 <= alpha * beta
    a, b = 1.0 - alpha, 1.0 - beta
    second = a + b - 0.75 <= a * b
    return first, second


def region_grid_search(step: float = GRID_STEP) -> np.ndarray:
    """Grid points of [0,1]² satisfying both inequalities (vectorised)."""
    k = int(round(1.0 / step))
    g = np.arange(k + 1) / k
    A, Bt = np.meshgrid(g, g, indexing="ij")
    # equivalently (1-α)(1-β) ≥ 1/4 and αβ ≥ 1/4
    first = A + Bt - 0.75 <= A * Bt
    second = (1 - A) + (1 - Bt) - 0.75 <= (1 - A) * (1 - Bt)
    mask = first & second
    return np.column_stack([A[mask], Bt[mask]])


def split_identities(s: SymmetrySplit) -> dict:
    """Relative residuals of the identities the split must satisfy."""
    m = s.moments
    return {
        "pythagoras": abs(m["l2"] - m["l2_S"] - m["l2_A"]) / m["l2"],
        "orthogonality": abs(m["cross"]) / m["l2"],
        "quartic": abs(m["l4"] - m["l4_S"] - 6.0 * m["l4_SA"] - m["l4_A"]) / m["l4"],
        "cauchy_schwarz_slack": (m["l4_A"] + m["l4_S"] - 2.0 * m["l4_SA"]) / m["l4"],
        "zeta_slack": 0.125 - s.zeta,
    }
