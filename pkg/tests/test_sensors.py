"""Shock sensor, artificial-viscosity magnitudes and their smoothing."""
import numpy as np
import pytest

from esflow import sensors, thermo
from esflow.mesh import GridSpec, build_box_mesh
from esflow.sensors import (element_mu_max, flux_point_average,
                            interpolate_vertex_field,
                            normalized_entropy_residual,
                            sensor_from_residual, vertex_smooth)


def test_sensor_threshold_and_exponent():
    r = np.array([0.0, 0.1, 0.3, 0.9, 1.0])
    sn = sensor_from_residual(r, p=4)
    expo = 3.0 / 2.5
    ref = r ** expo
    assert np.all(sn[ref < 0.2] == 0.0)
    keep = ref >= 0.2
    assert np.allclose(sn[keep], ref[keep])
    # p = 1 falls back to the identity exponent
    assert np.allclose(sensor_from_residual(np.array([0.5]), p=1), 0.5)
    # raising the extra threshold zeroes more of the range
    assert sensor_from_residual(np.array([0.7]), p=4, delta=0.8)[0] == 0.0


def test_normalized_residual_hand_formula(gas):
    rng = np.random.default_rng(1)
    E, N = 2, 3
    rho = 1.0 + rng.random((E, N, N, N))
    P = 1.0 + rng.random((E, N, N, N))
    V = rng.normal(size=(E, N, N, N, 3))
    U = thermo.conservative_from_primitive(rho, V, P, gas)
    resid = rng.normal(size=(E, N, N, N))
    h = np.array([0.1, 0.2])
    out = normalized_entropy_residual(U, resid, gas, h)
    S = rho * gas.R * gas.gamma / (gas.gamma - 1.0)
    c = np.sqrt(gas.gamma * P / rho)
    scale = S * (np.linalg.norm(V, axis=-1) + c) / h[:, None, None, None]
    ref = np.clip(np.abs(resid) / (scale + 1e-30), 0.0, 1.0)
    assert np.abs(out - ref).max() < 1e-14
    assert out.max() <= 1.0 and out.min() >= 0.0


def test_element_mu_max_uniform_state_is_zero(gas):
    m = build_box_mesh(GridSpec(K=(2, 1, 1), p=3))
    N = m.ops.base.N
    U = thermo.conservative_from_primitive(
        np.ones((2, N, N, N)), np.zeros((2, N, N, N, 3)),
        np.ones((2, N, N, N)), gas)
    assert np.abs(element_mu_max(U, m.X, m.h, gas)).max() == 0.0


def test_element_mu_max_single_jump_hand_value(gas):
    m = build_box_mesh(GridSpec(K=(1, 1, 1), p=1))
    N = m.ops.base.N  # 2
    rho = np.ones((1, N, N, N))
    P = np.ones((1, N, N, N))
    V = np.zeros((1, N, N, N, 3))
    V[0, 1, :, :, 0] = 0.4          # x-velocity jump across the x pair
    P[0, 1] = 1.5                   # pressure jump too
    U = thermo.conservative_from_primitive(rho, V, P, gas)
    mu = element_mu_max(U, m.X, m.h, gas, c_av=0.5)
    cL = np.sqrt(gas.gamma * 1.0)
    cR = np.sqrt(gas.gamma * 1.5)
    expect = 0.5 * m.h[0] * (1.0 * 0.4 + 0.5 / (0.5 * (cL + cR)))
    assert abs(mu[0] - expect) < 1e-13


def test_vertex_smooth_takes_incident_max():
    m = build_box_mesh(GridSpec(K=(2, 1, 1), p=1))
    mu_e = np.array([1.0, 3.0])
    mv = vertex_smooth(m, mu_e)
    # the shared-face vertices carry the larger of the two values
    shared = m.vertex_ids[0][[1, 3, 5, 7]]
    only0 = m.vertex_ids[0][[0, 2, 4, 6]]
    assert np.all(mv[shared] == 3.0)
    assert np.all(mv[only0] == 1.0)


def test_interpolation_continuous_and_exact_at_corners():
    m = build_box_mesh(GridSpec(K=(2, 1, 1), p=3, alpha=0.05, seed=1))
    rng = np.random.default_rng(2)
    mv = rng.random(m.n_vertices)
    out = interpolate_vertex_field(m, mv)
    N = m.ops.base.N
    # corner values reproduced exactly
    assert abs(out[0, 0, 0, 0] - mv[m.vertex_ids[0, 0]]) < 1e-13
    assert abs(out[1, N - 1, N - 1, N - 1] - mv[m.vertex_ids[1, 7]]) < 1e-13
    # continuity: shared face values agree between the two elements
    assert np.abs(out[0, N - 1] - out[1, 0]).max() < 1e-13
    # constant input stays constant
    const = interpolate_vertex_field(m, np.full(m.n_vertices, 0.7))
    assert np.abs(const - 0.7).max() < 1e-13


@pytest.mark.parametrize("direction", [1, 2, 3])
def test_flux_point_average_structure(direction):
    rng = np.random.default_rng(3)
    E, N = 2, 4
    mu = rng.random((E, N, N, N))
    mu_p = 0.5 * mu
    out = flux_point_average(mu, mu_p, direction)
    rem = mu - mu_p
    assert out.shape[direction] == N + 1
    a = np.take(out, 0, axis=direction)
    b = np.take(rem, 0, axis=direction)
    assert np.abs(a - b).max() < 1e-15
    mid = np.take(out, 2, axis=direction)
    ref = 0.5 * (np.take(rem, 1, axis=direction)
                 + np.take(rem, 2, axis=direction))
    assert np.abs(mid - ref).max() < 1e-15
    # negative remainders are clipped
    out2 = flux_point_average(mu, 2.0 * mu, direction)
    assert out2.min() == 0.0 and out2.max() == 0.0
