"""Algebraic properties of the collocation operators."""
import numpy as np
import pytest

from esflow import operators
from esflow.operators import build_lgl, get_ops, telescope


@pytest.mark.parametrize("p", range(1, 9))
def test_sbp_property(p):
    ops = build_lgl(p)
    Q = ops.Q
    assert np.abs(Q + Q.T - ops.B).max() <= 1e-13


@pytest.mark.parametrize("p", range(1, 9))
def test_derivative_exact_on_polynomials(p):
    ops = build_lgl(p)
    x = ops.nodes
    for k in range(p + 1):
        d = ops.D @ x ** k
        exact = k * x ** (k - 1) if k > 0 else np.zeros_like(x)
        assert np.abs(d - exact).max() <= 1e-10, (p, k)


@pytest.mark.parametrize("p", range(1, 9))
def test_flux_node_spacings_are_quadrature_weights(p):
    ops = build_lgl(p)
    assert np.abs(np.diff(ops.flux_nodes) - ops.P).max() <= 1e-14


@pytest.mark.parametrize("p", [1, 3, 6])
def test_quadrature_exactness(p):
    # LGL quadrature is exact for polynomials up to degree 2p - 1
    ops = build_lgl(p)
    for k in range(2 * p):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(ops.P @ ops.nodes ** k - exact) < 1e-13


def test_weights_sum_to_interval_length():
    for p in range(1, 9):
        assert abs(build_lgl(p).P.sum() - 2.0) < 1e-13


def test_telescope_matches_matrix_form():
    ops = build_lgl(4)
    rng = np.random.default_rng(3)
    fbar = rng.normal(size=(7, ops.N + 1))
    out = telescope(ops, fbar)
    ref = (ops.Delta @ fbar[..., None])[..., 0] / ops.P
    assert np.abs(out - ref).max() < 1e-14


def test_telescope_rejects_wrong_length():
    ops = build_lgl(2)
    with pytest.raises(ValueError):
        telescope(ops, np.zeros(5))


@pytest.mark.parametrize("direction", [1, 2, 3])
def test_tensor_derivative_matches_1d(direction):
    tops = get_ops(3)
    N = tops.base.N
    rng = np.random.default_rng(1)
    fld = rng.normal(size=(2, N, N, N, 5))
    out = tops.apply_derivative(direction, fld)
    ref = np.moveaxis(
        np.tensordot(fld, tops.base.D, axes=([direction], [1])),
        -1, direction)
    assert np.abs(out - ref).max() < 1e-13


def test_tensor_telescope_each_direction():
    tops = get_ops(2)
    N = tops.base.N
    rng = np.random.default_rng(2)
    for d in (1, 2, 3):
        shp = [3, N, N, N, 5]
        shp[d] = N + 1
        fbar = rng.normal(size=shp)
        out = tops.telescope(d, fbar)
        diff = np.diff(fbar, axis=d)
        w = tops.base.P.reshape([N if a == d else 1 for a in range(5)])
        assert np.abs(out - diff / w).max() < 1e-14


def test_volume_quadrature_is_tensor_weight_sum():
    tops = get_ops(3)
    N = tops.base.N
    rng = np.random.default_rng(4)
    fld = rng.normal(size=(2, N, N, N, 2))
    out = tops.volume_quadrature(fld)
    ref = np.einsum("i,j,k,eijkc->ec", tops.base.P, tops.base.P,
                    tops.base.P, fld)
    assert np.abs(out - ref).max() < 1e-14
    # constant field integrates to the reference-cube volume 8
    const = np.ones((1, N, N, N, 1))
    assert abs(tops.volume_quadrature(const)[0, 0] - 8.0) < 1e-13


def test_operator_registry_is_shared():
    assert get_ops(4) is get_ops(4)


def test_order_out_of_range_rejected():
    with pytest.raises(operators.ConfigurationError):
        build_lgl(0)
    with pytest.raises(operators.ConfigurationError):
        build_lgl(13)
