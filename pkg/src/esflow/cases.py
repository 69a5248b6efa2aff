"""Benchmark flow cases: initial data and, where available, exact solutions.

All cases return conservative-variable fields evaluated on arbitrary point
arrays X (..., 3), so the same callables serve as initial conditions,
Dirichlet boundary states and error references.
"""
from __future__ import annotations

import numpy as np

from . import thermo
from .thermo import GasModel

__all__ = [
    "ViscousShock", "isentropic_vortex", "vortex_gas", "freestream_state",
    "tgv_state", "tgv_gas", "blast_1d_state",
]


class ViscousShock:
    """Steady Navier-Stokes shock profile at Pr = 3/4, optionally traveling.

    At Pr = 3/4 the total enthalpy is constant through the shock, which
    collapses the steady equations to one ODE for the normal velocity u:

        (4/3) mu du/dxi = mdot (gamma+1)/(2 gamma) (u - uL)(u - uR) / u

    whose implicit solution xi(u) is inverted pointwise by bisection.  The
    profile moves with speed ``speed`` along the unit direction ``n``; the
    default speed -(uL+uR)/2 puts the lab-frame center velocity at zero.
    """

    def __init__(self, gas: GasModel, Ma: float = 2.5, n=(1.0, 1.0, 1.0),
                 speed: float | None = None, rho_up: float = 1.0,
                 T_up: float = 1.0):
        if abs(gas.Pr - 0.75) > 1e-12:
            raise ValueError("exact viscous shock requires Pr = 3/4")
        if gas.viscosity_law != "constant":
            raise ValueError("exact viscous shock requires constant viscosity")
        g = gas.gamma
        self.gas = gas
        self.n = np.asarray(n, dtype=float)
        self.n /= np.linalg.norm(self.n)
        cL = np.sqrt(g * gas.R * T_up)
        self.uL = Ma * cL
        self.uR = self.uL * ((g - 1.0) * Ma ** 2 + 2.0) / ((g + 1.0) * Ma ** 2)
        self.rhoL = rho_up
        self.mdot = rho_up * self.uL
        self.H0 = gas.c_p * T_up + 0.5 * self.uL ** 2
        self.mu = float(gas.viscosity(np.asarray(T_up)))
        a = (g + 1.0) / (2.0 * g)
        self.kappa = 4.0 * self.mu / (3.0 * self.mdot * a)
        self.speed = -(self.uL + self.uR) / 2.0 if speed is None else speed
        # place u = (uL+uR)/2 at xi = 0
        self._off = 0.0
        self._off = -self._xi_of_u(0.5 * (self.uL + self.uR))

    def _xi_of_u(self, u):
        uL, uR = self.uL, self.uR
        du = uL - uR
        return self.kappa / du * (
            uL * np.log((uL - u) / du) - uR * np.log((u - uR) / du)
        ) + self._off

    def _u_of_xi(self, xi):
        """Invert xi(u) by bisection (xi is strictly decreasing in u)."""
        xi = np.asarray(xi, dtype=float)
        eps = 1e-15 * (self.uL - self.uR)
        lo = np.full(xi.shape, self.uR + eps)
        hi = np.full(xi.shape, self.uL - eps)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            left_of_target = self._xi_of_u(mid) > xi   # u below the root
            lo = np.where(left_of_target, mid, lo)
            hi = np.where(left_of_target, hi, mid)
        u = 0.5 * (lo + hi)
        if not np.all(np.isfinite(u)):
            raise RuntimeError("viscous-shock profile inversion failed")
        return u

    def state(self, X, t=0.0):
        """Conservative state at points X (..., 3) and time t."""
        X = np.asarray(X, dtype=float)
        xi = X @ self.n - self.speed * t
        u = self._u_of_xi(xi)
        rho = self.mdot / u
        T = (self.H0 - 0.5 * u ** 2) / self.gas.c_p
        P = rho * self.gas.R * T
        V = (u + self.speed)[..., None] * self.n
        return thermo.conservative_from_primitive(rho, V, P, self.gas)

    def __call__(self, X, t=0.0):
        return self.state(X, t)


def vortex_gas(Re: float = 1.0, inviscid: bool = True) -> GasModel:
    return GasModel(gamma=1.4, R=1.0, Pr=0.72, Re=Re)


def isentropic_vortex(X, t, gas: GasModel, Ma: float = 0.3,
                      beta: float = 5.0, L: float = 10.0,
                      V_inf: float = 0.5):
    """Isentropic vortex advecting along x in a periodic box of side L.

    Background T_inf is set from the advection speed and Mach number
    (c = V_inf / Ma), so with V_inf = 0.5 and L = 10 the vortex returns to
    its starting point at t = 20.  Exact solution: pure translation.
    """
    g = gas.gamma
    T_inf = (V_inf / Ma) ** 2 / (g * gas.R)
    X = np.asarray(X, dtype=float)
    # wrap the advected center back into the box
    x = (X[..., 0] - V_inf * t + 0.5 * L) % L - 0.5 * L
    y = X[..., 1]
    r2 = x ** 2 + y ** 2
    phi = beta / (2.0 * np.pi) * np.exp(0.5 * (1.0 - r2))
    dT = -(g - 1.0) * beta ** 2 / (8.0 * g * np.pi ** 2) * np.exp(1.0 - r2)
    T = T_inf + dT / gas.R
    rho = (T / T_inf) ** (1.0 / (g - 1.0))
    V = np.zeros(X.shape)
    V[..., 0] = V_inf - phi * y
    V[..., 1] = phi * x
    P = rho * gas.R * T
    return thermo.conservative_from_primitive(rho, V, P, gas)


def freestream_state(X, t, gas: GasModel, Ma: float = 3.5,
                     angle_deg: float = 10.0):
    """Uniform flow rho = 1, T = 1, velocity Ma*c at angle_deg in the
    x-y plane."""
    X = np.asarray(X, dtype=float)
    c = np.sqrt(gas.gamma * gas.R)
    th = np.deg2rad(angle_deg)
    V = np.zeros(X.shape)
    V[..., 0] = Ma * c * np.cos(th)
    V[..., 1] = Ma * c * np.sin(th)
    rho = np.ones(X.shape[:-1])
    return thermo.conservative_from_primitive(rho, V, rho * gas.R, gas)


def tgv_gas(Ma: float = 2.0, Re: float = 400.0) -> GasModel:
    """Gas constant chosen so the unit velocity amplitude is Mach Ma at
    T = 1."""
    return GasModel(gamma=1.4, R=1.0 / (1.4 * Ma ** 2), Pr=0.7, Re=Re)


def tgv_state(X, gas: GasModel):
    """Taylor-Green vortex initial data on the periodic cube [-pi, pi]^3:
    rho = 1 + (cos2x + cos2y)(cos2z + 2)/16, V = (sin x cos y cos z,
    -cos x sin y cos z, 0), T = 1."""
    X = np.asarray(X, dtype=float)
    x, y, z = X[..., 0], X[..., 1], X[..., 2]
    rho = 1.0 + (np.cos(2 * x) + np.cos(2 * y)) * (np.cos(2 * z) + 2.0) / 16.0
    V = np.zeros(X.shape)
    V[..., 0] = np.sin(x) * np.cos(y) * np.cos(z)
    V[..., 1] = -np.cos(x) * np.sin(y) * np.cos(z)
    P = rho * gas.R
    return thermo.conservative_from_primitive(rho, V, P, gas)


def blast_1d_state(X, gas: GasModel, x_jump: float = 0.5,
                   p_ratio: float = 1e5, p_right: float = 1e-2):
    """1-D blast initial data: unit density at rest with a pressure jump
    of ratio p_ratio at x = x_jump."""
    X = np.asarray(X, dtype=float)
    rho = np.ones(X.shape[:-1])
    V = np.zeros(X.shape)
    P = np.where(X[..., 0] < x_jump, p_right * p_ratio, p_right)
    return thermo.conservative_from_primitive(rho, V, P, gas)
