"""Semi-discrete right-hand-side assembly.

Produces the two RHS branches of the limited scheme:

    dU/dt = theta_f * rhs_high + (1 - theta_f) * rhs_low

rhs_high combines the telescoped high-order entropy-conservative volume
flux with viscous terms and the shared artificial dissipation; rhs_low
replaces the volume flux by first-order entropy-dissipative two-point
fluxes on the same points and adds a mass-diffusion rescue term on flagged
elements.  Both branches see identical single-valued interface fluxes, so
the blend is conservative for any per-element theta_f in [0, 1].

Interface and interior Roe-type dissipation is scaled per element by
s = max(sensor, limited-flag) (face values take the max of the two sides):
zero on smooth resolved flow, where the scheme is then entropy
conservative up to boundary terms, and one at shocks.

The first-order fluxes use GCL-compatible flux-point metric lines built by
cumulative integration of the metric derivative, which makes the low-order
branch freestream-preserving on curvilinear meshes and keeps its entropy
contraction exact (the leftover geometric terms cancel pointwise through
the metric GCL).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dissipation, fluxes, limiter, sensors, thermo
from .mesh import BC_DIRICHLET, BC_WALL, Mesh
from .sensors import AVConfig
from .thermo import GasModel

__all__ = ["RhsParts", "Solver", "SCHEMES"]

SCHEMES = ("essc", "ppes", "ppesad")


@dataclass
class RhsParts:
    high: np.ndarray              # theta = 1 branch, (E, N, N, N, 5)
    low: np.ndarray | None        # theta = 0 branch
    Sn: np.ndarray                # (E,) sensor
    aleph: np.ndarray | None      # (E,) limiter bound fraction
    mu_max: np.ndarray            # (E,)
    diag: dict = field(default_factory=dict)


def _sl(ndim, ax, idx):
    s = [slice(None)] * ndim
    s[ax] = idx
    return tuple(s)


def _pair_wavespeed(Ua, Ub, nhat, gas):
    la = np.abs(np.einsum("...m,...m->...", Ua[..., 1:4] / Ua[..., 0:1], nhat))
    lb = np.abs(np.einsum("...m,...m->...", Ub[..., 1:4] / Ub[..., 0:1], nhat))
    return np.maximum(la, lb) + np.maximum(thermo.sound_speed(Ua, gas),
                                           thermo.sound_speed(Ub, gas))


class Solver:
    """Assembles RHS branches for one mesh/gas/scheme combination.

    bc_state: callable (X, t) -> conservative states, used for Dirichlet
    ghost values.
    """

    def __init__(self, mesh: Mesh, gas: GasModel, scheme: str = "ppesad",
                 av: AVConfig = AVConfig(), bc_state=None,
                 inviscid: bool = False):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; pick from {SCHEMES}")
        self.mesh = mesh
        self.gas = gas
        self.scheme = scheme
        self.av = av
        self.bc_state = bc_state
        self.inviscid = inviscid
        self.tops = mesh.ops
        N = self.tops.base.N
        self.N = N
        P1 = self.tops.base.P

        # per direction: flux-point metric lines (cumulative integral of
        # the metric derivative; endpoints land exactly on the face metric
        # rows), interior point spacings, outward face unit normals and
        # first interior spacings at each face
        self._volws = fluxes.VolumeFluxWorkspace(mesh.ahat, self.tops)
        # flat gather indices for the interior adjacent-pair slabs
        base = np.arange(N ** 3).reshape(N, N, N)
        self._low_idx_a = np.concatenate(
            [base[_sl(3, d, slice(0, N - 1))].ravel() for d in range(3)])
        self._low_idx_b = np.concatenate(
            [base[_sl(3, d, slice(1, N))].ravel() for d in range(3)])

        self.nbar, self.dist = [], []
        self.face_unit_normal, self.face_first_dist = [], []
        for d in range(3):
            ax = 1 + d
            am = mesh.ahat[..., d, :]                     # (E,N,N,N,3)
            dam = self.tops.apply_derivative(d + 1, am)
            inc = np.moveaxis(dam, ax, -2) * P1[:, None]  # (..., N, 3)
            shp = list(am.shape)
            shp[ax] = N + 1
            nb = np.zeros(shp)
            base0 = np.moveaxis(am, ax, -2)[..., 0:1, :]
            cum = np.concatenate(
                (base0, base0 + np.cumsum(inc, axis=-2)), axis=-2)
            self.nbar.append(np.moveaxis(cum, -2, ax))
            dX = np.diff(mesh.X, axis=ax)
            self.dist.append(np.linalg.norm(dX, axis=-1))  # (E, .. N-1 ..)
            nm = am[_sl(5, ax, 0)]
            npl = am[_sl(5, ax, N - 1)]
            self.face_unit_normal.append((
                -nm / np.linalg.norm(nm, axis=-1, keepdims=True),
                npl / np.linalg.norm(npl, axis=-1, keepdims=True)))
            self.face_first_dist.append((
                self.dist[d][_sl(4, ax, 0)],
                self.dist[d][_sl(4, ax, N - 2)]))
        self._nv_low = np.concatenate(
            [self.nbar[d][_sl(5, 1 + d, slice(1, N))].reshape(
                mesh.n_elem, -1, 3) for d in range(3)], axis=1)
        self._iface_n = np.stack(
            [mesh.ahat[_sl(6, 1 + d, i)][..., d, :]
             for d in range(3) for i in (0, N - 1)])   # (6, E, N, N, 3)

    # ------------------------------------------------------------------
    def _ghost(self, tags, U_own, X, t):
        gas = self.gas
        U_g = U_own.copy()
        wall = tags == BC_WALL
        if np.any(wall):
            # no-slip adiabatic wall: mirror the velocity, keep rho and P
            U_g[wall, ..., 1:4] = -U_own[wall, ..., 1:4]
        dirich = tags == BC_DIRICHLET
        if np.any(dirich):
            if self.bc_state is None:
                raise ValueError("Dirichlet faces present but no bc_state set")
            U_g[dirich] = self.bc_state(X[dirich], t)
        return U_g

    def _gather_traces(self, U, t):
        """Per direction: (trace across minus face, trace across plus face),
        each (E, N, N, 5) index-aligned with the owner's face layer."""
        mesh = self.mesh
        N = self.N
        out = []
        for d in range(3):
            ax = 1 + d
            own_m = U[_sl(5, ax, 0)]
            own_p = U[_sl(5, ax, N - 1)]
            res = []
            for side, own in ((0, own_m), (1, own_p)):
                f = 2 * d + side
                nb = mesh.neighbors[:, f]
                opp = own_p if side == 0 else own_m
                tr = np.where((nb >= 0)[:, None, None, None], opp[nb], own)
                tags = mesh.bc[:, f]
                bdry = tags > 0
                if np.any(bdry):
                    Xf = mesh.X[_sl(5, ax, 0 if side == 0 else N - 1)]
                    tr = tr.copy()
                    tr[bdry] = self._ghost(tags[bdry], own[bdry],
                                           Xf[bdry], t)
                res.append(tr)
            out.append(tuple(res))
        return out

    # ------------------------------------------------------------------
    def compute(self, U, t=0.0, chi=None, need_low=True,
                mu_point_override=None, mu1_override=None) -> RhsParts:
        mesh, gas, tops = self.mesh, self.gas, self.tops
        N, E = self.N, mesh.n_elem
        P1 = tops.base.P
        thermo.check_admissible(U, "rhs input")
        if chi is None:
            chi = np.zeros(E)
        use_limiter = self.scheme != "essc"
        need_low = need_low and use_limiter
        chi_any = use_limiter and bool(np.any(chi > 0.0))

        comp = fluxes._pack_prims(U, gas)
        rho = comp[..., 0]
        V = comp[..., 4:7]
        P = rho / (2.0 * comp[..., 1])
        T = P / (rho * gas.R)
        w = thermo.entropy_vars_from_packed(comp, gas)

        traces = self._gather_traces(U, t)
        tr_stack = np.stack([tr for pair in traces for tr in pair])
        comp_tr = fluxes._pack_prims(tr_stack, gas)
        w_tr = thermo.entropy_vars_from_packed(comp_tr, gas)
        w_traces = [(w_tr[2 * d], w_tr[2 * d + 1]) for d in range(3)]

        # ---------- high-order volume fluxes and entropy-residual sensor
        fbars = self._volws.fbars(U, gas, comp)
        inv_vol0 = sum(tops.telescope(d + 1, fbars[d]) for d in range(3))
        S_ent = thermo.entropy_from_packed(comp, gas)
        divFS = 0.0
        for d in range(3):
            FS = S_ent[..., None] * np.einsum(
                "...m,...m->...", V, mesh.ahat[..., d, :])[..., None]
            divFS = divFS + tops.apply_derivative(d + 1, FS)[..., 0]
        resid = (-np.einsum("...c,...c->...", w, inv_vol0) + divFS) / mesh.J
        r = sensors.normalized_entropy_residual(U, resid, gas, mesh.h,
                                                prims=(rho, V, P, S_ent))
        Sn = sensors.sensor_from_residual(
            r.reshape(E, -1).max(axis=1), mesh.p, self.av.delta)
        s_elem = np.maximum(Sn, chi) if use_limiter else Sn

        # ---------- artificial viscosity fields
        if self.av.enabled and self.scheme == "ppesad":
            face_pairs = []
            for d in range(3):
                for side in (0, 1):
                    slc = _sl(5, 1 + d, 0 if side == 0 else N - 1)
                    tr = traces[d][side]
                    nrm = np.broadcast_to(self.face_unit_normal[d][side],
                                          tr.shape[:-1] + (3,))
                    face_pairs.append((U[slc], tr, nrm))
            mu_max = sensors.element_mu_max(U, mesh.X, mesh.h, gas,
                                            self.av.c_av, face_pairs)
            mu_ver = sensors.vertex_smooth(mesh, Sn * mu_max)
            mu_field = sensors.interpolate_vertex_field(mesh, mu_ver)
            mu_ver_p = np.where(
                sensors.vertex_smooth(mesh, chi) > 0.0, 0.0, mu_ver)
            mu_p = sensors.interpolate_vertex_field(mesh, mu_ver_p)
        else:
            mu_max = np.zeros(E)
            mu_field = np.zeros((E, N, N, N))
            mu_p = np.zeros((E, N, N, N))
        if mu_point_override is not None:
            mu_p = mu_point_override
            mu_field = np.maximum(mu_field, mu_p)
        mu1_list = [sensors.flux_point_average(mu_field, mu_p, 1 + d)
                    if mu1_override is None else mu1_override[d]
                    for d in range(3)]

        # ---------- gradients, pointwise viscous + high-order AD fluxes
        has_mu_p = bool(np.any(mu_p > 0.0))
        has_point_visc = (not self.inviscid) or has_mu_p
        fvhat = None
        if has_point_visc:
            Theta = dissipation.ldg_gradient(w, mesh.ahat, mesh.J, tops,
                                             w_traces)
            if self.inviscid:
                fv_cart = 0.0
            else:
                fv_cart = dissipation.viscous_flux_cartesian(
                    U, Theta, gas, gas.viscosity(T), gas.conductivity(T), 0.0)
            if has_mu_p:
                fv_cart = fv_cart + dissipation.viscous_flux_cartesian(
                    U, Theta, gas, mu_p, dissipation.c_t(gas) * mu_p,
                    dissipation.C_RHO * mu_p / rho)
            fvhat = np.einsum("...lm,...mc->...lc", mesh.ahat, fv_cart)
            visc = sum(tops.apply_derivative(d + 1, fvhat[..., d, :])
                       for d in range(3))
        else:
            visc = np.zeros_like(U)

        # ---------- per-direction interface and first-order terms
        inv_vol = np.zeros_like(U)
        inv_vol_low = np.zeros_like(U) if need_low else None
        ad_low = np.zeros_like(U)
        pj_elem = np.zeros(E)

        # all six interface fluxes in one batched call (minus faces oriented
        # as (neighbor -> own), plus faces as (own -> neighbor))
        cflat = comp.reshape(E, N ** 3, 7)
        comp_own = np.moveaxis(
            np.take(cflat, self._volws.bidx, axis=1).reshape(
                E, 6, N, N, 7), 1, 0)
        comp_L = np.where(
            (np.arange(6) % 2 == 0)[:, None, None, None, None],
            comp_tr, comp_own)
        comp_R = np.where(
            (np.arange(6) % 2 == 0)[:, None, None, None, None],
            comp_own, comp_tr)
        s_f_all, chi_f_all = [], []
        for d in range(3):
            for side in (0, 1):
                nb = mesh.neighbors[:, 2 * d + side]
                s_f_all.append(np.maximum(
                    s_elem, np.where(nb >= 0, s_elem[nb], 1.0))[:, None, None])
                chi_f_all.append(np.maximum(
                    chi, np.where(nb >= 0, chi[nb], chi))[:, None, None])
        fstars = fluxes._ec_flux_packed(comp_L, comp_R, gas, self._iface_n)
        sf_stack = np.stack(s_f_all)
        if np.any(sf_stack > 0.0):
            own_stack = np.stack(
                [U[_sl(5, 1 + d, i)] for d in range(3) for i in (0, N - 1)])
            UL = np.where((np.arange(6) % 2 == 0)[:, None, None, None, None],
                          tr_stack, own_stack)
            UR = np.where((np.arange(6) % 2 == 0)[:, None, None, None, None],
                          own_stack, tr_stack)
            ed = fluxes.mr_dissipation(UL, UR, gas, self._iface_n)
            fstars = fstars - sf_stack[..., None] * ed

        # first-order interior fluxes of all directions, one flattened call
        flows = None
        if need_low:
            nint = (N - 1) * N * N
            if fluxes._njit is not None:
                flowF = np.empty((E, 3 * nint, 5))
                fluxes._pair_flux_kernel(cflat, self._nv_low,
                                         self._low_idx_a, self._low_idx_b,
                                         gas.gamma, flowF)
            else:
                cLa = np.take(cflat, self._low_idx_a, axis=1)
                cLb = np.take(cflat, self._low_idx_b, axis=1)
                flowF = fluxes._ec_flux_packed(cLa, cLb, gas, self._nv_low)
            if np.any(s_elem > 0.0):
                Uflat = U.reshape(E, N ** 3, 5)
                ed = fluxes.mr_dissipation(
                    np.take(Uflat, self._low_idx_a, axis=1),
                    np.take(Uflat, self._low_idx_b, axis=1),
                    gas, self._nv_low)
                flowF = flowF - s_elem[:, None, None] * ed
            flows = []
            for k in range(3):
                shp = list(U.shape)
                shp[1 + k] = N - 1
                flows.append(
                    flowF[:, k * nint:(k + 1) * nint].reshape(shp))

        for d in range(3):
            ax = 1 + d
            fbar = fbars[d]
            Um, Up_ = traces[d]
            own_m = U[_sl(5, ax, 0)]
            own_p = U[_sl(5, ax, N - 1)]
            nm = self._iface_n[2 * d]
            npl = self._iface_n[2 * d + 1]
            chi_f = chi_f_all[2 * d:2 * d + 2]
            fstar_m = fstars[2 * d]
            fstar_p = fstars[2 * d + 1]
            fbar[_sl(5, ax, 0)] = fstar_m
            fbar[_sl(5, ax, N)] = fstar_p
            inv_vol += tops.telescope(d + 1, fbar)

            # symmetric viscous interface penalty
            if fvhat is not None:
                fv_own_m = fvhat[_sl(6, ax, 0)][..., d, :]
                fv_own_p = fvhat[_sl(6, ax, N - 1)][..., d, :]
                for side, fv_own in ((0, fv_own_m), (1, fv_own_p)):
                    nb = mesh.neighbors[:, 2 * d + side]
                    fv_opp = fv_own_p if side == 0 else fv_own_m
                    fv_nbr = np.where((nb >= 0)[:, None, None, None],
                                      fv_opp[nb], fv_own)
                    pen = 0.5 * (fv_nbr - fv_own)
                    if side == 0:
                        visc[_sl(5, ax, 0)] += -pen / P1[0]
                    else:
                        visc[_sl(5, ax, N - 1)] += pen / P1[-1]

            # pressure-jump scan for the limiter bounds
            if use_limiter:
                jin = np.abs(np.diff(P, axis=ax)) / (
                    P[_sl(4, ax, slice(0, N - 1))]
                    + P[_sl(4, ax, slice(1, N))])
                Pm = thermo.pressure(Um, gas)
                Pp = thermo.pressure(Up_, gas)
                jm = np.abs(Pm - P[_sl(4, ax, 0)]) / (Pm + P[_sl(4, ax, 0)])
                jp = np.abs(Pp - P[_sl(4, ax, N - 1)]) \
                    / (Pp + P[_sl(4, ax, N - 1)])
                pj_elem = np.maximum.reduce([
                    pj_elem, jin.reshape(E, -1).max(axis=1),
                    jm.reshape(E, -1).max(axis=1),
                    jp.reshape(E, -1).max(axis=1)])

            # first-order inviscid branch (same interface fluxes)
            Ua = U[_sl(5, ax, slice(0, N - 1))]
            Ub = U[_sl(5, ax, slice(1, N))]
            nv_int = self.nbar[d][_sl(5, ax, slice(1, N))]
            if need_low:
                flow = np.zeros_like(fbar)
                flow[_sl(5, ax, slice(1, N))] = flows[d]
                flow[_sl(5, ax, 0)] = fstar_m
                flow[_sl(5, ax, N)] = fstar_p
                inv_vol_low += tops.telescope(d + 1, flow)

            # first-order artificial dissipation at flux points
            mu1 = mu1_list[d]
            if not (np.any(mu1 > 0.0) or chi_any):
                continue
            fad1 = np.zeros_like(fbar)
            m1 = mu1[_sl(4, ax, slice(1, N))]
            if np.any(m1 > 0.0):
                dd = self.dist[d]
                sig = dissipation.C_RHO * m1 / np.sqrt(Ua[..., 0] * Ub[..., 0])
                fad1[_sl(5, ax, slice(1, N))] = \
                    dissipation.low_order_brenner_flux(
                        Ua, Ub, gas, m1, nv_int, dd, sigma_bar=sig)
            # boundary flux points: symmetric face term with the continuous
            # face viscosity; sigma floored at sigma_min on flagged faces
            rem = np.maximum(mu_field - mu_p, 0.0)
            for side in (0, 1):
                idx_n = 0 if side == 0 else N - 1
                idx_f = 0 if side == 0 else N
                Uown = own_m if side == 0 else own_p
                Unbr = Um if side == 0 else Up_
                mface = rem[_sl(4, ax, idx_n)]
                nvf = nm if side == 0 else npl
                nhat = nvf / np.linalg.norm(nvf, axis=-1, keepdims=True)
                nbr = mesh.neighbors[:, 2 * d + side]
                dd_o = self.face_first_dist[d][side]
                dd_n = self.face_first_dist[d][1 - side]
                ddf = 0.5 * (dd_o + np.where((nbr >= 0)[:, None, None],
                                             dd_n[nbr], dd_o))
                sig = dissipation.C_RHO * mface / np.sqrt(
                    Uown[..., 0] * Unbr[..., 0])
                if chi_any:
                    lam = _pair_wavespeed(Uown, Unbr, nhat, gas)
                    sig = np.maximum(sig, chi_f[side] * 0.5 * lam * ddf)
                if not np.any((mface > 0) | (sig > 0)):
                    continue
                UL = Unbr if side == 0 else Uown
                UR = Uown if side == 0 else Unbr
                fad1[_sl(5, ax, idx_f)] += dissipation.low_order_brenner_flux(
                    UL, UR, gas, mface, nvf, ddf, sigma_bar=sig)
            ad_low += tops.telescope(d + 1, fad1)

        # mass-diffusion rescue on flagged elements (interior points only,
        # enters the theta = 0 branch)
        sigma_rescue = 0.0
        if need_low and chi_any:
            sigma_rescue = self._sigma_rescue(U, chi, mu1_list)

        Jinv = 1.0 / mesh.J[..., None]
        rhs_high = (-inv_vol + visc + ad_low) * Jinv
        rhs_low = None
        if need_low:
            rhs_low = (-inv_vol_low + visc + ad_low + sigma_rescue) * Jinv

        aleph = limiter.compute_aleph(Sn, pj_elem) if use_limiter else None
        return RhsParts(high=rhs_high, low=rhs_low, Sn=Sn, aleph=aleph,
                        mu_max=mu_max,
                        diag={"r_max": float(r.max()),
                              "mu_field_max": float(mu_field.max())})

    # ------------------------------------------------------------------
    def _sigma_rescue(self, U, chi, mu1_list):
        """sigma_hat = max(sigma_min - sigma_AD1, 0) mass diffusion at the
        interior flux points of flagged elements."""
        mesh, gas, tops = self.mesh, self.gas, self.tops
        N = self.N
        out = np.zeros_like(U)
        for d in range(3):
            ax = 1 + d
            fb = np.zeros(U.shape[:ax] + (N + 1,) + U.shape[ax + 1:])
            Ua = U[_sl(5, ax, slice(0, N - 1))]
            Ub = U[_sl(5, ax, slice(1, N))]
            nv = self.nbar[d][_sl(5, ax, slice(1, N))]
            dd = self.dist[d]
            amag = np.linalg.norm(nv, axis=-1)
            nhat = nv / amag[..., None]
            lam = _pair_wavespeed(Ua, Ub, nhat, gas)
            m1 = mu1_list[d][_sl(4, ax, slice(1, N))]
            sig_ad1 = dissipation.C_RHO * m1 / np.sqrt(Ua[..., 0] * Ub[..., 0])
            sig_hat = np.maximum(0.5 * lam * dd - sig_ad1, 0.0) \
                * chi[:, None, None, None]
            fb[_sl(5, ax, slice(1, N))] = dissipation.low_order_mass_diffusion(
                Ua, Ub, gas, sig_hat, amag, dd)
            out += tops.telescope(d + 1, fb)
        return out
