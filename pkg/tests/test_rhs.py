"""Semidiscrete operator: freestream exactness, conservation, entropy."""
import numpy as np
import pytest

from esflow import rhs, thermo
from esflow.cases import freestream_state, isentropic_vortex
from esflow.harness import conservation_theta_residual
from esflow.mesh import GridSpec, build_box_mesh
from esflow.rhs import Solver
from esflow.sensors import AVConfig


def _vortex(gas, K=3, p=3, alpha=0.0, scheme="ppesad"):
    m = build_box_mesh(GridSpec(K=(K, K, 1), p=p, lo=(-5.0, -5.0, -1.0),
                                hi=(5.0, 5.0, 1.0), alpha=alpha, seed=3,
                                periodic=(True,) * 3))
    U = isentropic_vortex(m.X, 0.0, gas)
    return Solver(m, gas, scheme=scheme, inviscid=True), U


def test_unknown_scheme_rejected(gas):
    m = build_box_mesh(GridSpec(K=(1, 1, 1), p=1))
    with pytest.raises(ValueError):
        Solver(m, gas, scheme="upwind")


@pytest.mark.parametrize("scheme", ["essc", "ppes", "ppesad"])
def test_freestream_annihilated_cartesian(gas, scheme):
    m = build_box_mesh(GridSpec(K=(2, 2, 2), p=3, lo=(0.0,) * 3,
                                hi=(2.0,) * 3, periodic=(True,) * 3))
    U = freestream_state(m.X, 0.0, gas, Ma=3.5)
    solver = Solver(m, gas, scheme=scheme, inviscid=False)
    parts = solver.compute(U, 0.0)
    scale = np.abs(U).max() / 2.0       # flux magnitude over element size
    assert np.abs(parts.high).max() < 1e-12 * scale
    if parts.low is not None:
        assert np.abs(parts.low).max() < 1e-12 * scale
    assert parts.Sn.max() == 0.0


def test_freestream_annihilated_perturbed_mesh(gas):
    m = build_box_mesh(GridSpec(K=(2, 2, 2), p=4, lo=(0.0,) * 3,
                                hi=(2.0,) * 3, alpha=0.1, seed=11,
                                periodic=(True,) * 3))
    U = freestream_state(m.X, 0.0, gas, Ma=3.5)
    parts = Solver(m, gas, scheme="ppesad", inviscid=False).compute(U, 0.0)
    scale = np.abs(U).max() / 2.0
    assert np.abs(parts.high).max() < 1e-11 * scale
    assert np.abs(parts.low).max() < 1e-11 * scale


@pytest.mark.parametrize("scheme", ["ppes", "ppesad"])
def test_global_totals_independent_of_theta(gas, scheme):
    solver, U = _vortex(gas, alpha=0.08, scheme=scheme)
    assert conservation_theta_residual(solver, U, seed=1) <= 1e-11


def test_both_branches_conserve_mass_and_energy(gas):
    solver, U = _vortex(gas, alpha=0.08)
    parts = solver.compute(U, 0.0, chi=np.ones(solver.mesh.n_elem))
    w3 = solver.mesh.ops.weights3
    J = solver.mesh.J
    scale = max(abs(float(np.einsum("ijk,eijk->", w3,
                                    U[..., 4] * J))), 1.0)
    for r in (parts.high, parts.low):
        tot = np.einsum("ijk,eijkc->c", w3, r * J[..., None])
        assert np.abs(tot[[0, 4]]).max() < 1e-12 * scale


def test_entropy_balance_of_branches(gas):
    # high branch on a periodic mesh: entropy conservative up to the
    # interface dissipation (production <= 0 contribution to dS/dt means
    # sum w . rhs <= 0); low branch with chi = 1 strictly dissipative
    solver, U = _vortex(gas, K=3, p=4, alpha=0.06)
    parts = solver.compute(U, 0.0, chi=np.ones(solver.mesh.n_elem))
    w = thermo.entropy_vars(U, gas)
    w3 = solver.mesh.ops.weights3
    J = solver.mesh.J

    def production(r):
        return float(np.einsum("ijk,eijk->", w3,
                               np.einsum("...c,...c->...", w, r) * J))

    # scale: typical |w||rhs| magnitude
    scale = float(np.einsum("ijk,eijk->", w3, np.linalg.norm(w, axis=-1)
                            * np.linalg.norm(parts.high, axis=-1) * J))
    assert production(parts.high) <= 1e-12 * scale
    assert production(parts.low) <= 1e-12 * scale


def test_essc_has_no_low_branch(gas):
    solver, U = _vortex(gas, scheme="essc")
    parts = solver.compute(U, 0.0)
    assert parts.low is None
    assert parts.aleph is None


def test_smooth_vortex_keeps_sensor_silent(gas):
    solver, U = _vortex(gas, K=4, p=4)
    parts = solver.compute(U, 0.0)
    assert parts.Sn.max() == 0.0


def test_chi_turns_on_rescue_dissipation(gas):
    solver, U = _vortex(gas, K=3, p=3)
    p0 = solver.compute(U, 0.0, chi=np.zeros(solver.mesh.n_elem))
    p1 = solver.compute(U, 0.0, chi=np.ones(solver.mesh.n_elem))
    # the low branch gains the rescue mass diffusion
    assert np.abs(p1.low - p0.low).max() > 0.0
    # the shared face dissipation (common to both branches so the blend
    # stays conservative) keeps the totals exact
    w3 = solver.mesh.ops.weights3
    J = solver.mesh.J
    for r in (p1.high, p1.low):
        tot = np.einsum("ijk,eijkc->c", w3, r * J[..., None])
        assert np.abs(tot[[0, 4]]).max() < 1e-12
