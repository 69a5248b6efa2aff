"""Diagonal-norm SBP operators on Legendre-Gauss-Lobatto points.

One-dimensional operators (nodes, quadrature weights P, stiffness Q,
derivative D, boundary matrix B, two-point backward difference Delta and
the complementary flux-point grid) plus tensor-product applicators for
fields stored as (..., N, N, N, ncomp) arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = ["OperatorSet", "TensorOps", "build_lgl", "telescope", "get_ops"]

_P_MAX = 12


class ConfigurationError(ValueError):
    pass


def _legendre_deriv(p: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Legendre polynomial L_p and its derivative at x (recurrence)."""
    L0 = np.ones_like(x)
    L1 = x.copy()
    if p == 0:
        return L0, np.zeros_like(x)
    for k in range(1, p):
        L0, L1 = L1, ((2 * k + 1) * x * L1 - k * L0) / (k + 1)
    denom = x * x - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        dL = p * (x * L1 - L0) / denom
    end = denom == 0.0
    if np.any(end):
        dL = np.where(end, np.sign(x) ** (p - 1) * p * (p + 1) / 2.0, dL)
    return L1, dL


def _lgl_nodes(p: int) -> np.ndarray:
    """Roots of (1-x^2) L'_p(x) by Newton iteration, Chebyshev initial guess."""
    N = p + 1
    if p == 1:
        return np.array([-1.0, 1.0])
    x = -np.cos(np.pi * np.arange(N) / p)
    interior = slice(1, N - 1)
    xi = x[interior].copy()
    for _ in range(100):
        # g = L'_p, g' = L''_p from the Legendre ODE:
        # (1-x^2) L'' = 2x L' - p(p+1) L
        L, dL = _legendre_deriv(p, xi)
        d2L = (2 * xi * dL - p * (p + 1) * L) / (1 - xi * xi)
        dx = dL / d2L
        xi -= dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    x[interior] = xi
    x[0], x[-1] = -1.0, 1.0
    return x


def _lagrange_diff_matrix(x: np.ndarray) -> np.ndarray:
    """Exact differentiation matrix of the Lagrange basis on nodes x."""
    N = x.size
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    # barycentric weights
    w = 1.0 / diff.prod(axis=1)
    D = np.empty((N, N))
    for i in range(N):
        D[i] = w / (w[i] * diff[i])
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True)
class OperatorSet:
    """1-D SBP operator collection for polynomial order p on LGL points."""

    p: int
    nodes: np.ndarray        # (N,)
    P: np.ndarray            # (N,) diagonal quadrature weights
    Q: np.ndarray            # (N, N)
    D: np.ndarray            # (N, N)
    B: np.ndarray            # (N, N) diag(-1, 0, ..., 0, 1)
    Delta: np.ndarray        # (N, N+1) two-point backward difference
    flux_nodes: np.ndarray   # (N+1,) complementary grid

    @property
    def N(self) -> int:
        return self.p + 1


def build_lgl(p: int) -> OperatorSet:
    """Build the diagonal-norm LGL SBP operator set for order p."""
    if not (1 <= p <= _P_MAX):
        raise ConfigurationError(f"polynomial order must be in [1, {_P_MAX}], got {p}")
    x = _lgl_nodes(p)
    N = p + 1
    L, _ = _legendre_deriv(p, x)
    wts = 2.0 / (p * (p + 1) * L * L)
    D = _lagrange_diff_matrix(x)
    Q = wts[:, None] * D
    B = np.zeros((N, N))
    B[0, 0], B[-1, -1] = -1.0, 1.0
    Delta = np.zeros((N, N + 1))
    for i in range(N):
        Delta[i, i] = -1.0
        Delta[i, i + 1] = 1.0
    flux = np.concatenate(([-1.0], -1.0 + np.cumsum(wts)))
    flux[-1] = 1.0
    ops = OperatorSet(p=p, nodes=x, P=wts, Q=Q, D=D, B=B, Delta=Delta,
                      flux_nodes=flux)
    for a in (ops.nodes, ops.P, ops.Q, ops.D, ops.B, ops.Delta, ops.flux_nodes):
        a.setflags(write=False)
    return ops


def telescope(ops: OperatorSet, fbar: np.ndarray) -> np.ndarray:
    """Apply P^-1 Delta to flux-point values (last axis has N+1 entries)."""
    if fbar.shape[-1] != ops.N + 1:
        raise ValueError(f"expected {ops.N + 1} flux-point values, got {fbar.shape[-1]}")
    return (fbar[..., 1:] - fbar[..., :-1]) / ops.P


@dataclass(frozen=True)
class TensorOps:
    """Tensor-product views of a 1-D operator set for (..., N,N,N, c) fields."""

    base: OperatorSet
    weights3: np.ndarray = field(init=False)  # (N,N,N) P_i P_j P_k

    def __post_init__(self):
        w = self.base.P
        w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
        w3.setflags(write=False)
        object.__setattr__(self, "weights3", w3)

    def _axis(self, direction: int) -> int:
        if direction not in (1, 2, 3):
            raise ValueError(f"direction must be 1, 2 or 3, got {direction}")
        return direction - 5  # axes (-4, -3, -2) of (..., N,N,N, c)

    def apply_derivative(self, direction: int, fld: np.ndarray) -> np.ndarray:
        """D_{xi^dir} applied along one reference axis of an element field."""
        N = self.base.N
        if fld.ndim < 4 or fld.shape[-4:-1] != (N, N, N):
            raise ValueError(f"field must be shaped (..., {N},{N},{N}, c)")
        ax = self._axis(direction)
        out = np.tensordot(fld, self.base.D, axes=([ax], [1]))
        return np.moveaxis(out, -1, ax)

    def telescope(self, direction: int, fbar: np.ndarray) -> np.ndarray:
        """P^-1 Delta along a direction; fbar has N+1 entries on that axis."""
        ax = self._axis(direction)
        ax = fbar.ndim + ax if ax < 0 else ax
        lo = [slice(None)] * fbar.ndim
        hi = [slice(None)] * fbar.ndim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        diff = fbar[tuple(hi)] - fbar[tuple(lo)]
        shape = [1] * fbar.ndim
        shape[ax] = self.base.N
        return diff / self.base.P.reshape(shape)

    def volume_quadrature(self, fld: np.ndarray) -> np.ndarray:
        """1^T Phat applied pointwise: sum over the element of P_ijk * field."""
        return np.einsum("ijk,...ijkc->...c", self.weights3, fld)


@lru_cache(maxsize=None)
def get_ops(p: int) -> TensorOps:
    """Shared immutable operator registry, one entry per polynomial order."""
    return TensorOps(base=build_lgl(p))
