"""Viscous/artificial dissipation operators in entropy-variable form."""
import numpy as np
import pytest

from esflow import dissipation, thermo
from esflow.dissipation import (C_RHO, coeff_tensor, ldg_gradient,
                                low_order_brenner_flux,
                                low_order_mass_diffusion,
                                viscous_flux_cartesian)
from esflow.mesh import GridSpec, build_box_mesh

from conftest import random_states


@pytest.mark.parametrize("sigma", [0.0, 0.3])
def test_coeff_tensor_symmetric_psd(gas, sigma):
    U = random_states(20, gas, seed=1)
    C = coeff_tensor(U, gas, mu=0.7, kappa=1.1, sigma=sigma)
    assert np.abs(C - np.swapaxes(C, -1, -2)).max() < 1e-10 * np.abs(C).max()
    ev = np.linalg.eigvalsh(C)
    assert ev.min() > -1e-10 * np.abs(ev).max()


def test_viscous_flux_entropy_dissipative(gas):
    # Theta : C Theta >= 0 for arbitrary gradients
    U = random_states(200, gas, seed=2)
    rng = np.random.default_rng(2)
    Theta = rng.normal(size=(200, 3, 5))
    f = viscous_flux_cartesian(U, Theta, gas, mu=0.4, kappa=0.9, sigma=0.2)
    prod = np.einsum("...jc,...jc->...", Theta, f)
    assert prod.min() > -1e-12 * np.abs(prod).max()


def test_viscous_flux_shear_hand_check(gas):
    # pure dV1/dx2 shear: tau_12 = mu dV1/dx2, all normal stresses zero
    U = thermo.conservative_from_primitive(
        np.array([1.3]), np.zeros((1, 3)), np.array([0.8]), gas)
    T = float(thermo.temperature(U, gas)[0])
    # at rest, dV_i/dx_j = T * Theta_{j, 1+i}; pick Theta so dV1/dx2 = 0.25
    Theta = np.zeros((1, 3, 5))
    Theta[0, 1, 1] = 0.25 / T
    f = viscous_flux_cartesian(U, Theta, gas, mu=0.5, kappa=0.0)
    tau = f[..., 1:4]                 # (1, m, i) = tau_{i m}
    assert abs(tau[0, 1, 0] - 0.5 * 0.25) < 1e-12
    assert abs(tau[0, 0, 1] - 0.5 * 0.25) < 1e-12
    idx = np.arange(3)
    assert np.abs(tau[0, idx, idx]).max() < 1e-12
    # with V = 0 the energy flux is conduction only (kappa = 0 here)
    assert np.abs(f[..., 4]).max() < 1e-12


def _self_traces(w, N):
    """Zero-jump traces: each face sees the element's own face values."""
    out = []
    for ax in (1, 2, 3):
        out.append((np.take(w, 0, axis=ax), np.take(w, N - 1, axis=ax)))
    return out


def test_ldg_gradient_exact_on_linear_field(gas):
    m = build_box_mesh(GridSpec(K=(2, 2, 1), p=3, alpha=0.1, seed=3))
    N = m.ops.base.N
    b = np.array([[0.3, -0.2, 0.5], [1.0, 0.7, -0.4], [0.0, 0.1, 0.2],
                  [-0.6, 0.0, 0.9], [0.2, 0.2, -0.2]])   # (5, 3) slopes
    w = np.einsum("cm,eijkm->eijkc", b, m.X)
    Theta = ldg_gradient(w, m.ahat, m.J, m.ops, _self_traces(w, N))
    ref = np.broadcast_to(b.T, Theta.shape)   # (..., j, c) = b[c, j]
    assert np.abs(Theta - ref).max() < 1e-11


def test_ldg_gradient_jump_penalty_is_local(gas):
    m = build_box_mesh(GridSpec(K=(1, 1, 1), p=4))
    N = m.ops.base.N
    w = np.ones((1, N, N, N, 5))
    traces = _self_traces(w, N)
    # introduce a jump of +2 on the minus-x face only
    traces[0] = (traces[0][0] + 2.0, traces[0][1])
    Theta = ldg_gradient(w, m.ahat, m.J, m.ops, traces)
    # nonzero only at the first node layer of direction 1
    assert np.abs(Theta[:, 0]).max() > 0.0
    assert np.abs(Theta[:, 1:]).max() < 1e-14
    # sign and magnitude: -(1/2)(jump)/P0 * ahat_11 / J
    P0 = m.ops.base.P[0]
    expect = -0.5 * 2.0 / P0 * m.ahat[0, 0, 0, 0, 0, 0] / m.J[0, 0, 0, 0]
    assert abs(Theta[0, 0, 0, 0, 0, 0] - expect) < 1e-13


def test_low_order_mass_diffusion_formula(gas):
    UL = random_states(50, gas, seed=4)
    UR = random_states(50, gas, seed=5)
    f = low_order_mass_diffusion(UL, UR, gas, sigma_bar=0.7, area=1.3,
                                 dist=0.2)
    rL, rR = UL[..., 0], UR[..., 0]
    amp = 0.7 * (rR - rL) / 0.2 * 1.3
    assert np.abs(f[..., 0] - amp).max() < 1e-12 * np.abs(amp).max()
    Vb = 0.5 * (UL[..., 1:4] / rL[..., None] + UR[..., 1:4] / rR[..., None])
    assert np.abs(f[..., 1:4] - amp[..., None] * Vb).max() \
        < 1e-11 * np.abs(f).max()


def test_brenner_flux_zero_at_equal_states(gas):
    U = random_states(60, gas, seed=6)
    n = np.random.default_rng(6).normal(size=(60, 3))
    f = low_order_brenner_flux(U, U, gas, 0.5, n, 0.1)
    assert np.abs(f).max() < 1e-13


def test_brenner_flux_entropy_dissipative(gas):
    UL = random_states(20000, gas, seed=7, rho_range=(-3, 3), p_range=(-3, 3))
    UR = random_states(20000, gas, seed=8, rho_range=(-3, 3), p_range=(-3, 3))
    n = np.random.default_rng(7).normal(size=(20000, 3))
    f = low_order_brenner_flux(UL, UR, gas, 0.5, n, 0.1)
    dw = thermo.entropy_vars(UR, gas) - thermo.entropy_vars(UL, gas)
    assert np.einsum("ic,ic->i", dw, f).min() >= 0.0


def test_brenner_flux_magnitude_capped(gas):
    UL = random_states(3000, gas, seed=9, rho_range=(-4, 4), p_range=(-4, 4))
    UR = random_states(3000, gas, seed=10, rho_range=(-4, 4), p_range=(-4, 4))
    n = np.random.default_rng(8).normal(size=(3000, 3))
    f = low_order_brenner_flux(UL, UR, gas, 2.0, n, 0.05)
    amag = np.linalg.norm(n, axis=-1)
    nhat = n / amag[:, None]
    rL, VL, PL = thermo.rho_v_p(UL, gas)
    rR, VR, PR = thermo.rho_v_p(UR, gas)
    lam = np.maximum(
        np.abs(np.einsum("im,im->i", VL, nhat)) + np.sqrt(gas.gamma * PL / rL),
        np.abs(np.einsum("im,im->i", VR, nhat)) + np.sqrt(gas.gamma * PR / rR))
    cap = 0.5 * lam * amag * np.linalg.norm(UR - UL, axis=-1)
    assert np.all(np.linalg.norm(f, axis=-1) <= cap * (1 + 1e-12) + 1e-300)
