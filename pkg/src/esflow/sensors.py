"""Shock sensing and artificial-viscosity construction.

The sensor is a normalized pointwise entropy residual of the inviscid
high-order operator: spectrally small on resolved smooth flow, O(1) at
discontinuities.  Element viscosity magnitudes are smoothed by a
vertex-max gather followed by tri-linear interpolation, which yields a
globally continuous viscosity field, and then split into a high-order
(solution-point) part and a first-order (flux-point) remainder.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import thermo
from .mesh import Mesh
from .thermo import GasModel

__all__ = [
    "AVConfig", "sensor_from_residual", "element_mu_max",
    "vertex_smooth", "interpolate_vertex_field", "flux_point_average",
]


@dataclass(frozen=True)
class AVConfig:
    c_av: float = 0.5      # element viscosity magnitude constant
    delta: float = 0.0     # extra sensor threshold (effective max(0.2, delta))
    enabled: bool = True


def sensor_from_residual(r_max: np.ndarray, p: int,
                         delta: float = 0.0) -> np.ndarray:
    """Element sensor Sn from the max normalized residual.

    Sn0 = r_max^max(1, (p-1)/(p-1.5)); values below max(0.2, delta) are
    zeroed (hard on/off branching).
    """
    expo = max(1.0, (p - 1.0) / (p - 1.5)) if p > 1.5 else 1.0
    sn0 = np.clip(r_max, 0.0, 1.0) ** expo
    return np.where(sn0 >= max(0.2, delta), sn0, 0.0)


def normalized_entropy_residual(U: np.ndarray, resid: np.ndarray,
                                gas: GasModel, h: np.ndarray,
                                prims=None) -> np.ndarray:
    """Pointwise residual |resid| / (rho R gamma/(gamma-1) (|V|+c) / h),
    both factors taken at the same point so strong local variation within
    an element cannot drown the signal.

    resid is the raw pointwise entropy residual (w^T inviscid RHS plus the
    discrete entropy-flux divergence).  Returns values clamped to [0, 1].
    prims optionally supplies precomputed (rho, V, P, S).
    """
    if prims is None:
        rho, V, P, *_ = thermo.primitive(U, gas, check=False)
    else:
        rho, V, P, _ = prims
    # entropy-density magnitude scale rho R gamma/(gamma-1); the entropy
    # itself is not part of the scale because its zero point is arbitrary
    # (s = ln(P rho^-gamma) shifts with the unit system), so |S| would
    # inflate the normalization exactly where the state is most extreme
    S = rho * gas.R * gas.gamma / (gas.gamma - 1.0)
    speed = np.linalg.norm(V, axis=-1) + np.sqrt(gas.gamma * P / rho)
    scale = S * speed / h[:, None, None, None] + 1e-30
    return np.clip(np.abs(resid) / scale, 0.0, 1.0)


def element_mu_max(U: np.ndarray, X: np.ndarray, h: np.ndarray,
                   gas: GasModel, c_av: float = 0.5,
                   face_pairs=None) -> np.ndarray:
    """Per-element viscosity magnitude from velocity/pressure jumps between
    neighboring solution points:

        mu_max = c_av * h * max over pairs of (rho_bar |dV . nhat| + |dP| / c_bar)

    with nhat the unit vector between the two points.  face_pairs optionally
    supplies (U_own_face, U_neighbor_trace, face unit normal) tuples so the
    collocated interface-adjacent jumps are scanned too (using the face
    normal as the pair direction).
    """
    rho, V, P, *_ = thermo.primitive(U, gas, check=False)
    c = thermo.sound_speed(U, gas)
    best = np.zeros(U.shape[0])

    def scan(rA, rB, VA, VB, PA, PB, cA, cB, nhat):
        dvn = np.abs(np.einsum("...m,...m->...", VB - VA, nhat))
        val = 0.5 * (rA + rB) * dvn + np.abs(PB - PA) / (0.5 * (cA + cB))
        return val.reshape(val.shape[0], -1).max(axis=1)

    for ax in (1, 2, 3):
        sl_a = [slice(None)] * 4
        sl_b = [slice(None)] * 4
        sl_a[ax] = slice(0, -1)
        sl_b[ax] = slice(1, None)
        a, b = tuple(sl_a), tuple(sl_b)
        dX = X[tuple(sl_b) + (slice(None),)] - X[tuple(sl_a) + (slice(None),)]
        dn = np.linalg.norm(dX, axis=-1)
        nhat = dX / np.where(dn[..., None] == 0.0, 1.0, dn[..., None])
        best = np.maximum(best, scan(
            rho[a], rho[b], V[tuple(sl_a) + (slice(None),)],
            V[tuple(sl_b) + (slice(None),)], P[a], P[b],
            np.sqrt(gas.gamma * P[a] / rho[a]),
            np.sqrt(gas.gamma * P[b] / rho[b]), nhat))

    if face_pairs is not None:
        for Ua, Ub, nhat in face_pairs:
            ra, Va, Pa, *_ = thermo.primitive(Ua, gas, check=False)
            rb, Vb, Pb, *_ = thermo.primitive(Ub, gas, check=False)
            best = np.maximum(best, scan(
                ra, rb, Va, Vb, Pa, Pb,
                np.sqrt(gas.gamma * Pa / ra), np.sqrt(gas.gamma * Pb / rb),
                nhat))
    return c_av * h * best


def vertex_smooth(mesh: Mesh, elem_value: np.ndarray) -> np.ndarray:
    """Per-vertex max over incident elements; returns (n_vertices,)."""
    mu_ver = np.zeros(mesh.n_vertices)
    np.maximum.at(mu_ver, mesh.vertex_ids.ravel(),
                  np.repeat(elem_value, 8))
    return mu_ver


def interpolate_vertex_field(mesh: Mesh, vertex_value: np.ndarray) -> np.ndarray:
    """Tri-linear interpolation of vertex scalars to the solution points;
    continuous across conforming interfaces.  Returns (E, N, N, N)."""
    tops = mesh.ops
    x = tops.base.nodes
    t = 0.5 * (x + 1.0)
    N = x.size
    T1, T2, T3 = np.meshgrid(t, t, t, indexing="ij")
    corner = vertex_value[mesh.vertex_ids]    # (E, 8)
    out = np.zeros((mesh.n_elem, N, N, N))
    for c in range(8):
        w1 = T1 if (c & 1) else 1.0 - T1
        w2 = T2 if (c & 2) else 1.0 - T2
        w3 = T3 if (c & 4) else 1.0 - T3
        out += corner[:, c, None, None, None] * (w1 * w2 * w3)
    return out


def flux_point_average(mu: np.ndarray, mu_p: np.ndarray, direction: int):
    """First-order flux-point viscosity along one reference direction:
    interior flux points get half-sums of the two adjacent solution-point
    remainders (mu - mu_p); boundary flux points carry the endpoint value.
    mu, mu_p: (E, N, N, N).  Returns an array with N+1 entries on that axis.
    """
    rem = np.maximum(mu - mu_p, 0.0)
    ax = direction  # axes 1..3 of (E, N, N, N)
    N = mu.shape[ax]
    shp = list(rem.shape)
    shp[ax] = N + 1
    out = np.zeros(shp)
    sl = lambda i: tuple(slice(None) if a != ax else i
                         for a in range(rem.ndim))
    out[sl(slice(1, N))] = 0.5 * (rem[sl(slice(0, N - 1))]
                                  + rem[sl(slice(1, N))])
    out[sl(0)] = rem[sl(0)]
    out[sl(N)] = rem[sl(N - 1)]
    return out
