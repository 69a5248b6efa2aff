"""Element-wise positivity-preserving flux limiter.

Given the first-order stage prediction U1 (admissible by construction) and
the high-order prediction Up at the same points, the limited state lies on
the mixing line U(theta) = U1 + theta (Up - U1).  The density constraint is
linear in theta and the internal-energy constraint quadratic (internal
energy is concave along the line), so both admit closed-form theta's.  The
element factor theta_f = min over points is what the scheme layer feeds
into the conservative flux-level blend.
"""
from __future__ import annotations

import numpy as np

from . import thermo
from .thermo import GasModel

__all__ = [
    "ALEPH_FLOOR", "compute_aleph", "compute_bounds", "theta_rho",
    "theta_ie", "element_theta",
]

ALEPH_FLOOR = 1e-8


def compute_aleph(Sn: np.ndarray, max_rel_pjump: np.ndarray) -> np.ndarray:
    """Element bound fraction aleph = max(1e-8, Sn * max |dP| / (2 P_avg)).

    max_rel_pjump is the element max of |P_R - P_L| / (P_L + P_R) over
    neighboring point pairs (interface-adjacent pairs included), which is
    strictly below 1 for admissible states.
    """
    return np.maximum(ALEPH_FLOOR, Sn * max_rel_pjump)


def compute_bounds(U1: np.ndarray, aleph: np.ndarray, gas: GasModel):
    """Pointwise lower bounds (eps_rho, eps_ie) from the first-order
    prediction; aleph broadcasts per element over the point axes."""
    thermo.check_admissible(U1, "first-order stage prediction")
    a = np.asarray(aleph)
    while a.ndim < U1.ndim - 1:
        a = a[..., None]
    return a * U1[..., 0], a * thermo.internal_energy(U1)


def theta_rho(rho1: np.ndarray, rho_p: np.ndarray,
              eps_rho: np.ndarray) -> np.ndarray:
    """Largest theta in [0, 1] with rho(theta) >= eps_rho on the mixing
    line (closed interval: rho_p == eps gives exactly 1)."""
    rho1 = np.asarray(rho1, dtype=float)
    if np.any(rho1 <= eps_rho):
        raise ValueError("first-order density at or below its lower bound")
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rho1 - eps_rho) / (rho1 - rho_p)
    return np.where(rho_p >= eps_rho, 1.0, t)


def _ie_on_line(U1, dU, theta):
    U = U1 + theta[..., None] * dU
    return thermo.internal_energy(U)


def theta_ie(U1: np.ndarray, Up: np.ndarray, t_rho: np.ndarray,
             eps_ie: np.ndarray, gas: GasModel,
             resid_tol: float = 1e-9) -> np.ndarray:
    """Largest theta in [0, t_rho] with IE(U(theta)) >= eps_ie.

    rho(theta) * (IE(theta) - eps) is a quadratic in theta with a strictly
    positive value at 0, so when IE(U(t_rho)) < eps the crossing in
    (0, t_rho) is a quadratic root; solved in the cancellation-safe form
    and verified by residual, with a bisection fallback.
    """
    dU = Up - U1
    drho, dm, dE = dU[..., 0], dU[..., 1:4], dU[..., 4]
    rho1, m1, E1 = U1[..., 0], U1[..., 1:4], U1[..., 4]
    A = drho * dE - 0.5 * np.einsum("...m,...m->...", dm, dm)
    B = rho1 * dE + drho * E1 - np.einsum("...m,...m->...", m1, dm) \
        - eps_ie * drho
    C = rho1 * (thermo.internal_energy(U1) - eps_ie)

    need = _ie_on_line(U1, dU, np.asarray(t_rho, dtype=float)) < eps_ie
    out = np.array(np.broadcast_to(t_rho, need.shape), dtype=float, copy=True)
    if not np.any(need):
        return out

    disc = np.maximum(B * B - 4.0 * A * C, 0.0)
    sq = np.sqrt(disc)
    q = -0.5 * (B + np.where(B >= 0.0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(A != 0.0, q / np.where(A == 0.0, 1.0, A), np.inf)
        r2 = np.where(q != 0.0, C / np.where(q == 0.0, 1.0, q), np.inf)
    cand = np.stack([r1, r2], axis=-1)
    ok = (cand > 0.0) & (cand <= np.asarray(t_rho)[..., None] * (1 + 1e-14))
    cand = np.where(ok, cand, np.inf)
    root = np.minimum(cand[..., 0], cand[..., 1])
    root = np.where(np.isfinite(root), root, 0.0)

    # residual check, bisection rescue where the quadratic is ill-conditioned
    resid = np.abs(_ie_on_line(U1, dU, root) - eps_ie) \
        / np.maximum(np.abs(eps_ie), 1e-300)
    bad = need & (resid > resid_tol)
    if np.any(bad):
        lo = np.zeros_like(root)
        hi = np.array(np.broadcast_to(t_rho, root.shape), dtype=float)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            below = _ie_on_line(U1, dU, mid) < eps_ie
            hi = np.where(below, mid, hi)
            lo = np.where(below, lo, mid)
        root = np.where(bad, lo, root)
    out = np.where(need, root, out)
    return out


def element_theta(theta_pointwise: np.ndarray) -> np.ndarray:
    """Element limiter theta_f = min over the element's solution points.
    theta_pointwise: (E, N, N, N)."""
    return theta_pointwise.reshape(theta_pointwise.shape[0], -1).min(axis=1)
