"""Gas model, variable conversions, entropy pair and admissibility checks.

Conservative states are arrays whose last axis holds
(rho, rho*V1, rho*V2, rho*V3, rho*E); all routines are vectorized over
leading axes.

Entropy convention used throughout: thermodynamic entropy
s = ln(P rho^-gamma), entropy function S = -rho s R/(gamma-1), entropy
variables w = dS/dU and flux potentials psi_m = R rho V_m.  This
normalization makes the two-point entropy-conservation condition
(w1 - w2)^T fbar = psi1 - psi2 hold exactly for the flux in
:mod:`esflow.fluxes`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GasModel", "InadmissibleStateError", "primitive", "pressure",
    "temperature", "internal_energy", "entropy", "entropy_vars",
    "conservative_from_entropy_vars", "entropy_potential", "du_dw",
    "entropy_vars_from_packed", "entropy_from_packed",
    "hessian_bounds", "is_admissible", "check_admissible", "sound_speed",
    "conservative_from_primitive",
]


class InadmissibleStateError(ValueError):
    """Raised when a state has non-positive density or internal energy."""

    def __init__(self, msg, where=None, state=None):
        super().__init__(msg)
        self.where = where
        self.state = state


@dataclass(frozen=True)
class GasModel:
    """Calorically perfect gas with nondimensional transport coefficients."""

    gamma: float = 1.4
    R: float = 1.0
    Pr: float = 0.72
    Re: float = 1.0
    mu_ref: float = 1.0
    viscosity_law: str = "constant"   # "constant" | "sutherland"
    T_ref: float = 1.0
    S_const: float = 0.4

    def __post_init__(self):
        if self.gamma <= 1 or self.R <= 0 or self.Pr <= 0 or self.Re <= 0:
            raise ValueError("require gamma > 1, R > 0, Pr > 0, Re > 0")

    @property
    def c_p(self) -> float:
        return self.gamma * self.R / (self.gamma - 1.0)

    def viscosity(self, T: np.ndarray) -> np.ndarray:
        """Dynamic viscosity mu(T), already divided by Re."""
        if self.viscosity_law == "sutherland":
            mu = self.mu_ref * (T / self.T_ref) ** 1.5 * \
                (self.T_ref + self.S_const) / (T + self.S_const)
        else:
            mu = self.mu_ref * np.ones_like(T)
        return mu / self.Re

    def conductivity(self, T: np.ndarray) -> np.ndarray:
        return self.viscosity(T) * self.c_p / self.Pr


def is_admissible(U: np.ndarray) -> np.ndarray:
    rho = U[..., 0]
    ie = U[..., 4] - 0.5 * np.einsum("...m,...m->...", U[..., 1:4], U[..., 1:4]) / rho
    return (rho > 0) & (ie > 0)


def check_admissible(U: np.ndarray, context: str = "") -> None:
    ok = is_admissible(U)
    if not np.all(ok):
        bad = np.argwhere(~ok)
        first = tuple(bad[0])
        raise InadmissibleStateError(
            f"inadmissible state{' in ' + context if context else ''}: "
            f"{bad.shape[0]} point(s), first at index {first}, U={U[first]}",
            where=first, state=np.array(U[first]))


def primitive(U: np.ndarray, gas: GasModel, check: bool = True):
    """Return (rho, V, P, T, IE, KE, H); V has a trailing axis of 3."""
    if check:
        check_admissible(U)
    rho = U[..., 0]
    V = U[..., 1:4] / rho[..., None]
    KE = 0.5 * rho * np.einsum("...m,...m->...", V, V)
    IE = U[..., 4] - KE
    P = (gas.gamma - 1.0) * IE
    T = P / (rho * gas.R)
    H = (U[..., 4] + P) / rho
    return rho, V, P, T, IE, KE, H


def rho_v_p(U: np.ndarray, gas: GasModel):
    """Lean (rho, V, P) extraction for flux hot loops (no admissibility
    check, no derived quantities)."""
    rho = U[..., 0]
    V = U[..., 1:4] / rho[..., None]
    v2 = (V[..., 0] * V[..., 0] + V[..., 1] * V[..., 1]
          + V[..., 2] * V[..., 2])
    P = (gas.gamma - 1.0) * (U[..., 4] - 0.5 * rho * v2)
    return rho, V, P


def entropy_vars_from_packed(comp: np.ndarray, gas: GasModel) -> np.ndarray:
    """Entropy variables from channel-packed primitives
    (rho, beta, log rho, log beta, V1, V2, V3); avoids recomputing logs.
    s = ln(P rho^-gamma) = (1 - gamma) ln rho - ln 2 - ln beta."""
    g = gas.gamma
    beta = comp[..., 1]
    V = comp[..., 4:7]
    s = (1.0 - g) * comp[..., 2] - np.log(2.0) - comp[..., 3]
    w = np.empty(comp.shape[:-1] + (5,))
    w[..., 0] = gas.R * ((g - s) / (g - 1.0)
                         - beta * (V[..., 0] * V[..., 0]
                                   + V[..., 1] * V[..., 1]
                                   + V[..., 2] * V[..., 2]))
    w[..., 1:4] = 2.0 * gas.R * beta[..., None] * V
    w[..., 4] = -2.0 * gas.R * beta
    return w


def entropy_from_packed(comp: np.ndarray, gas: GasModel) -> np.ndarray:
    """Entropy function S from channel-packed primitives."""
    g = gas.gamma
    s = (1.0 - g) * comp[..., 2] - np.log(2.0) - comp[..., 3]
    return -comp[..., 0] * s * gas.R / (g - 1.0)


def pressure(U: np.ndarray, gas: GasModel) -> np.ndarray:
    rho = U[..., 0]
    KE = 0.5 * np.einsum("...m,...m->...", U[..., 1:4], U[..., 1:4]) / rho
    return (gas.gamma - 1.0) * (U[..., 4] - KE)


def temperature(U: np.ndarray, gas: GasModel) -> np.ndarray:
    return pressure(U, gas) / (U[..., 0] * gas.R)


def internal_energy(U: np.ndarray) -> np.ndarray:
    rho = U[..., 0]
    return U[..., 4] - 0.5 * np.einsum("...m,...m->...", U[..., 1:4], U[..., 1:4]) / rho


def sound_speed(U: np.ndarray, gas: GasModel) -> np.ndarray:
    return np.sqrt(gas.gamma * pressure(U, gas) / U[..., 0])


def conservative_from_primitive(rho, V, P, gas: GasModel) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    V = np.asarray(V, dtype=float)
    P = np.asarray(P, dtype=float)
    Et = P / (gas.gamma - 1.0) + 0.5 * rho * np.einsum("...m,...m->...", V, V)
    return np.concatenate(
        (rho[..., None], rho[..., None] * V, Et[..., None]), axis=-1)


def entropy(U: np.ndarray, gas: GasModel) -> np.ndarray:
    """Convex entropy function S = -rho s R/(gamma-1)."""
    rho = U[..., 0]
    P = pressure(U, gas)
    s = np.log(P) - gas.gamma * np.log(rho)
    return -rho * s * gas.R / (gas.gamma - 1.0)


def entropy_vars(U: np.ndarray, gas: GasModel, check: bool = True) -> np.ndarray:
    """Entropy variables w = dS/dU, last axis of length 5."""
    if check:
        check_admissible(U)
    rho = U[..., 0]
    V = U[..., 1:4] / rho[..., None]
    P = pressure(U, gas)
    s = np.log(P) - gas.gamma * np.log(rho)
    beta = rho / (2.0 * P)
    g = gas.gamma
    w = np.empty_like(U)
    w[..., 0] = gas.R * ((g - s) / (g - 1.0)
                         - beta * np.einsum("...m,...m->...", V, V))
    w[..., 1:4] = 2.0 * gas.R * beta[..., None] * V
    w[..., 4] = -2.0 * gas.R * beta
    return w


def conservative_from_entropy_vars(w: np.ndarray, gas: GasModel) -> np.ndarray:
    g = gas.gamma
    beta = -w[..., 4] / (2.0 * gas.R)
    V = w[..., 1:4] / (2.0 * gas.R * beta[..., None])
    T = 1.0 / (2.0 * gas.R * beta)
    s = g - (g - 1.0) * (w[..., 0] / gas.R
                         + beta * np.einsum("...m,...m->...", V, V))
    rho = (np.exp(s) / (gas.R * T)) ** (1.0 / (1.0 - g))
    P = rho * gas.R * T
    return conservative_from_primitive(rho, V, P, gas)


def entropy_potential(U: np.ndarray, gas: GasModel) -> np.ndarray:
    """Flux potentials psi_m = R rho V_m (trailing axis of 3)."""
    return gas.R * U[..., 1:4]


def du_dw(U: np.ndarray, gas: GasModel) -> np.ndarray:
    """Jacobian dU/dw (inverse entropy Hessian), shape (..., 5, 5)."""
    rho, V, P, T, IE, KE, Hs = primitive(U, gas, check=False)
    Et = U[..., 4]
    out = np.zeros(U.shape[:-1] + (5, 5))
    out[..., 0, 0] = rho
    out[..., 0, 1:4] = out[..., 1:4, 0] = rho[..., None] * V
    out[..., 0, 4] = out[..., 4, 0] = Et
    out[..., 1:4, 1:4] = rho[..., None, None] * V[..., :, None] * V[..., None, :]
    for i in range(3):
        out[..., 1 + i, 1 + i] += P
    out[..., 1:4, 4] = out[..., 4, 1:4] = (Et + P)[..., None] * V
    a2 = gas.gamma * P / rho
    out[..., 4, 4] = rho * Hs * Hs - a2 * P / (gas.gamma - 1.0)
    return out / gas.R


def hessian_bounds(U: np.ndarray, gas: GasModel):
    """Cholesky-derived lower-bound denominators (b1..b5) for the entropy
    Hessian quadratic form."""
    check_admissible(U)
    rho, V, P, *_ = primitive(U, gas, check=False)
    V2 = np.einsum("...m,...m->...", V, V)
    R, g = gas.R, gas.gamma
    b1 = rho / R
    b234 = (P[..., None] + rho[..., None] * V * V) / R
    b5 = (P * P * g + P * rho * V2 * g + (rho * V2 / 2.0) ** 2) / (R * rho)
    return b1, b234[..., 0], b234[..., 1], b234[..., 2], b5
