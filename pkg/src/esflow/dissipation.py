"""Viscous and artificial-dissipation fluxes in entropy-variable form.

Physical Navier-Stokes fluxes and their Brenner-regularized counterpart
(mass diffusion added) are written as f_{x^m} = sum_j c_{m,j} Theta_{x^j}
where Theta are discrete gradients of the entropy variables.  The full
15x15 coefficient tensor is symmetric positive semi-definite for both
kinds, which makes every dissipation term entropy-dissipative by
construction.

Gradients are computed with an LDG-style scheme: interior derivatives by
the collocation derivative matrix plus one-sided interface jump penalties.
"""
from __future__ import annotations

import numpy as np

from . import thermo
from .operators import TensorOps
from .thermo import GasModel

__all__ = [
    "C_RHO", "grad_vt_from_w", "viscous_flux_cartesian", "coeff_tensor",
    "ldg_gradient", "low_order_mass_diffusion", "low_order_brenner_flux",
]

# Brenner mass-diffusion constants: sigma = C_RHO * mu_AD / rho and
# kappa_AD = C_RHO * c_p / gamma * mu_AD
C_RHO = 0.9


def c_t(gas: GasModel) -> float:
    return C_RHO * gas.c_p / gas.gamma


def grad_vt_from_w(U: np.ndarray, gas: GasModel) -> np.ndarray:
    """Jacobian G = d(V1,V2,V3,T)/dw, shape (..., 4, 5).

    From the closed forms V_i = -w_{1+i}/w_5 and T = -1/w_5 (both
    independent of w_1)."""
    rho, V, P, T, *_ = thermo.primitive(U, gas, check=False)
    G = np.zeros(U.shape[:-1] + (4, 5))
    for i in range(3):
        G[..., i, 1 + i] = T
        G[..., i, 4] = V[..., i] * T
    G[..., 3, 4] = T * T
    return G


def viscous_flux_cartesian(U: np.ndarray, Theta: np.ndarray, gas: GasModel,
                           mu: np.ndarray, kappa: np.ndarray,
                           sigma: np.ndarray | float = 0.0) -> np.ndarray:
    """Cartesian dissipative fluxes f_{x^m} = sum_j c_{m,j} Theta_{x^j}.

    Theta: (..., 3, 5) entropy-variable gradients (axis -2 = direction j).
    mu, kappa, sigma broadcast against the state's leading axes.
    Returns (..., 3, 5) with axis -2 the flux direction m.  sigma > 0
    selects the Brenner kind (adds the mass-diffusion row/column).
    """
    rho, V, P, T, *_ = thermo.primitive(U, gas, check=False)
    G = grad_vt_from_w(U, gas)
    # q[..., j, a]: gradients of (V1,V2,V3,T) in direction x_j
    q = np.einsum("...ab,...jb->...ja", G, Theta)
    gradV = q[..., :3]          # (..., j, i) = dV_i/dx_j
    gradT = q[..., 3]           # (..., j)
    divV = np.einsum("...ii->...", gradV)
    mu = np.asarray(mu)[..., None, None]
    tau = mu * (gradV + np.swapaxes(gradV, -1, -2))
    idx = np.arange(3)
    tau[..., idx, idx] -= (2.0 / 3.0) * mu[..., 0] * divV[..., None]
    # tau[..., m, i] = tau_{i m}
    f = np.zeros(np.broadcast(U[..., None, :],
                              Theta).shape)
    f[..., 1:4] = tau
    f[..., 4] = np.einsum("...mi,...i->...m", tau, V) \
        + np.asarray(kappa)[..., None] * gradT
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma != 0.0):
        # d(rho)/dx_m = (drho/dw) . Theta_m, drho/dw = [rho, rho V, Et]/R
        drho_dw = np.concatenate(
            (rho[..., None], rho[..., None] * V, U[..., 4:5]),
            axis=-1) / gas.R
        drho = np.einsum("...b,...jb->...j", drho_dw, Theta)
        b = np.concatenate((np.ones_like(rho)[..., None], V,
                            (U[..., 4] / rho)[..., None]), axis=-1)
        f += (sigma[..., None] * drho)[..., None] * b[..., None, :]
    return f


def coeff_tensor(U: np.ndarray, gas: GasModel, mu, kappa,
                 sigma=0.0) -> np.ndarray:
    """Full (..., 15, 15) coefficient tensor assembled column by column
    (mainly for symmetry / positive-semidefiniteness testing)."""
    shape = U.shape[:-1]
    C = np.zeros(shape + (15, 15))
    for j in range(3):
        for b in range(5):
            Theta = np.zeros(shape + (3, 5))
            Theta[..., j, b] = 1.0
            col = viscous_flux_cartesian(U, Theta, gas, mu, kappa, sigma)
            C[..., :, 5 * j + b] = col.reshape(shape + (15,))
    return C


def ldg_gradient(w: np.ndarray, ahat: np.ndarray, J: np.ndarray,
                 tops: TensorOps, traces) -> np.ndarray:
    """Discrete gradients Theta_{x^j} of the entropy variables.

    Theta_{x^j} = sum_l (ahat^l_j / J) (D_{xi_l} w + P^-1_{xi_l} g_l)
    with jump penalties g_l = +-(1/2)(w_neighbor - w_own) at the two face
    node layers of direction l (BR1-symmetric one-sided averaging).

    w      : (E, N, N, N, 5)
    traces : sequence of 3 pairs (w_minus, w_plus), each (E, N, N, 5) —
             the neighbor (or ghost) face values across the minus/plus
             faces of each reference direction.
    Returns (E, N, N, N, 3, 5).
    """
    N = tops.base.N
    Pw = tops.base.P
    inner = np.zeros(w.shape[:-1] + (3, 5))
    for l in (1, 2, 3):
        dw = tops.apply_derivative(l, w)
        wm, wp = traces[l - 1]
        ax = w.ndim + (l - 5)
        sl0 = [slice(None)] * w.ndim
        slN = [slice(None)] * w.ndim
        sl0[ax], slN[ax] = 0, N - 1
        own0 = w[tuple(sl0)]
        ownN = w[tuple(slN)]
        dw[tuple(sl0)] += -0.5 * (wm - own0) / Pw[0]
        dw[tuple(slN)] += +0.5 * (wp - ownN) / Pw[-1]
        inner[..., l - 1, :] = dw
    # Theta_j = sum_l ahat[l, j] / J * inner_l
    return np.einsum("eijklm,eijklc->eijkmc", ahat, inner) \
        / J[..., None, None]


def low_order_mass_diffusion(UL: np.ndarray, UR: np.ndarray, gas: GasModel,
                             sigma_bar, area, dist) -> np.ndarray:
    """Two-point Brenner mass-diffusion flux at a flux point:
    sigma_bar * (rho_R - rho_L)/dist * [1, Vbar, Ebar]^T * area."""
    rL = UL[..., 0]
    rR = UR[..., 0]
    Vb = 0.5 * (UL[..., 1:4] / rL[..., None] + UR[..., 1:4] / rR[..., None])
    Eb = 0.5 * (UL[..., 4] / rL + UR[..., 4] / rR)
    b = np.concatenate((np.ones_like(rL)[..., None], Vb, Eb[..., None]),
                       axis=-1)
    amp = np.asarray(sigma_bar) * (rR - rL) / np.asarray(dist) \
        * np.asarray(area)
    return amp[..., None] * b


def low_order_brenner_flux(UL: np.ndarray, UR: np.ndarray, gas: GasModel,
                           mu_bar, nvec, dist, sigma_bar=None) -> np.ndarray:
    """First-order Brenner dissipation flux at a flux point.

    Uses the normal-normal coefficient block at the arithmetic-average
    state applied to the entropy-variable jump divided by the point
    spacing: f = |nvec| * c_nn(Ubar) (w_R - w_L) / dist.  Entropy
    dissipative because c_nn is a SPSD contraction of the full tensor.
    sigma_bar defaults to C_RHO * mu_bar / sqrt(rho_L rho_R) but may be
    floored externally (limited-element mass-diffusion floor).
    """
    Ub = 0.5 * (UL + UR)
    amag = np.linalg.norm(nvec, axis=-1)
    nhat = nvec / np.where(amag[..., None] == 0.0, 1.0, amag[..., None])
    dw = thermo.entropy_vars(UR, gas, check=False) \
        - thermo.entropy_vars(UL, gas, check=False)
    # rank-one gradient Theta_j = nhat_j * (dw / dist)
    Theta = nhat[..., :, None] * (dw / np.asarray(dist)[..., None])[..., None, :]
    mu_bar = np.asarray(mu_bar)
    if sigma_bar is None:
        sigma_bar = C_RHO * mu_bar / np.sqrt(UL[..., 0] * UR[..., 0])
    f = viscous_flux_cartesian(Ub, Theta, gas, mu_bar, c_t(gas) * mu_bar,
                               sigma_bar)
    fn = np.einsum("...m,...mc->...c", nhat, f)
    # robustness cap: the coefficient tensor at the arithmetic-average
    # state applied to the entropy-variable jump can exceed the physical
    # difference by orders of magnitude across very strong jumps (the
    # temperature block scales like Tbar^2 / (T_L T_R)).  Rescale per flux
    # point so the magnitude never exceeds the local-Lax-Friedrichs level
    # 0.5 lam_max |dU|; a positive scalar keeps the term dissipative.
    rL, VL, PL = thermo.rho_v_p(UL, gas)
    rR, VR, PR = thermo.rho_v_p(UR, gas)
    lam = np.maximum(
        np.abs(np.einsum("...m,...m->...", VL, nhat))
        + np.sqrt(gas.gamma * PL / rL),
        np.abs(np.einsum("...m,...m->...", VR, nhat))
        + np.sqrt(gas.gamma * PR / rR))
    cap = 0.5 * lam * np.linalg.norm(UR - UL, axis=-1)
    mag = np.linalg.norm(fn, axis=-1)
    alpha = np.where(mag > cap, cap / np.maximum(mag, 1e-300), 1.0)
    return (amag * alpha)[..., None] * fn
