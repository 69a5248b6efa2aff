"""SSP-RK3 time advancement with CFL and positivity-aware step control.

Each Runge-Kutta stage is a convex combination of forward-Euler substeps;
inside every substep the two RHS branches are assembled, stage-local
first-order and high-order predictions are formed, the limiter returns a
per-element blend factor theta_f, and the blended forward-Euler update is
taken.  If any substep produces an inadmissible state the whole step is
retried with a smaller dt; retries only ever shrink the step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import limiter, thermo
from .rhs import Solver
from .thermo import GasModel, InadmissibleStateError

__all__ = [
    "StepController", "PositivityError", "stable_dt", "ssp_rk3_step",
    "TimeIntegrator",
]

log = logging.getLogger("esflow")

# (previous-state weight, forward-Euler weight) per stage; each row is a
# convex combination and the weights of every row sum to one
_RK_WEIGHTS = ((0.0, 1.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0))


class PositivityError(RuntimeError):
    """Raised when step-size retries cannot produce an admissible state."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


@dataclass
class StepController:
    """Step-size policy.

    conv_factor / diff_factor are the spectral CFL denominators; None means
    the defaults (p+1)^2 and (p+1)^4.
    """

    cfl: float = 0.5
    dt_min: float = 0.0
    dt_max: float = np.inf
    positivity_retry_factor: float = 0.5
    max_retries: int = 10
    conv_factor: float | None = None
    diff_factor: float | None = None


def stable_dt(U, mesh, gas: GasModel, mu_av=None, inviscid=False,
              controller: StepController | None = None) -> float:
    """CFL step bound:

        dt = cfl * min over points of [ h / ((|V| + c) Cp),
                                        h^2 / (nu_tot Cd) ]

    with h the element size, Cp/Cd the (p+1)^2 and (p+1)^4 spectral factors
    (config-exposed on the controller), and nu_tot the total kinematic
    diffusivity (physical viscosity/conductivity plus artificial
    viscosity and its mass-diffusion channel).
    """
    ctrl = controller or StepController()
    p = mesh.p
    cp = ctrl.conv_factor if ctrl.conv_factor is not None else (p + 1) ** 2
    cd = ctrl.diff_factor if ctrl.diff_factor is not None else (p + 1) ** 4
    rho, V, P, T, *_ = thermo.primitive(U, gas, check=False)
    speed = np.linalg.norm(V, axis=-1) + np.sqrt(gas.gamma * P / rho)
    if not np.all(np.isfinite(speed)):
        raise ValueError("nonfinite wave speed in stable_dt")
    h = np.cbrt(mesh.volumes)[:, None, None, None]
    dt = np.min(h / (speed * cp))

    # diffusive bound; Prandtl factor covers the thermal channel, the
    # mass-diffusion AD channel adds C_RHO * mu_av / rho
    mu = np.zeros_like(rho) if inviscid else gas.viscosity(T)
    if mu_av is not None:
        mu_av = np.asarray(mu_av)
        while mu_av.ndim < rho.ndim:
            mu_av = mu_av[..., None]
        from .dissipation import C_RHO
        nu = (mu + mu_av) * max(4.0 / 3.0, gas.gamma / gas.Pr) / rho \
            + C_RHO * mu_av / rho
    else:
        nu = mu * max(4.0 / 3.0, gas.gamma / gas.Pr) / rho
    nu_max = float(np.max(nu))
    if nu_max > 0.0:
        dt = min(dt, float(np.min(h ** 2 / (nu * cd + 1e-300))))
    return float(np.clip(ctrl.cfl * dt, ctrl.dt_min, ctrl.dt_max))


def ssp_rk3_step(f, u, t, dt):
    """Generic three-stage SSP-RK3 step for du/dt = f(u, t).

    Stage algebra (convex combinations of forward-Euler substeps):
        u1 = u + dt f(u, t)
        u2 = 3/4 u + 1/4 (u1 + dt f(u1, t + dt))
        u  = 1/3 u + 2/3 (u2 + dt f(u2, t + dt/2))
    """
    u1 = u + dt * f(u, t)
    u2 = 0.75 * u + 0.25 * (u1 + dt * f(u1, t + dt))
    return u / 3.0 + (2.0 / 3.0) * (u2 + dt * f(u2, t + 0.5 * dt))


class _StageReject(Exception):
    """Internal: a substep produced an inadmissible prediction."""


class TimeIntegrator:
    """Drives a Solver with SSP-RK3 and per-stage positivity limiting.

    Optional hooks (used by verification experiments):
      theta_hook(stage, U_stage) -> per-element theta_f in [0, 1], applied
          instead of the limiter result;
      av_hook(stage, U_stage) -> (mu_point_override, mu1_override) passed
          through to the RHS assembly.
    """

    # stage times as fractions of dt (forward-Euler substep start times)
    _STAGE_T = (0.0, 1.0, 0.5)

    def __init__(self, solver: Solver, controller: StepController | None = None,
                 theta_hook=None, av_hook=None):
        self.solver = solver
        self.ctrl = controller or StepController()
        self.theta_hook = theta_hook
        self.av_hook = av_hook
        self.chi = np.zeros(solver.mesh.n_elem)
        self.step_count = 0
        self.last_info = {}

    # ------------------------------------------------------------------
    def _substep(self, stage, U_stage, t_stage, dt):
        """One forward-Euler substep with limiting; returns
        (euler_update, theta_f, parts)."""
        kw = {}
        if self.av_hook is not None:
            mu_p, mu1 = self.av_hook(stage, U_stage)
            kw = {"mu_point_override": mu_p, "mu1_override": mu1}
        use_lim = self.solver.scheme != "essc"
        for rescue in range(9):
            try:
                parts = self.solver.compute(U_stage, t_stage, chi=self.chi,
                                            need_low=use_lim, **kw)
            except InadmissibleStateError as exc:
                raise _StageReject(f"stage {stage}: {exc}") from exc
            if parts.low is None:
                cand = U_stage + dt * parts.high
                if not np.all(thermo.is_admissible(cand)):
                    raise _StageReject(
                        f"stage {stage}: high-order update inadmissible "
                        "(no limiter in this scheme)")
                return cand, np.ones(U_stage.shape[0]), parts
            U1 = U_stage + dt * parts.low
            ok = thermo.is_admissible(U1)
            if np.all(ok):
                break
            # low branch lost positivity where the sensor-scaled
            # dissipation was off: flag those elements (chi = 1 turns on
            # full first-order dissipation and the rescue mass diffusion)
            # and rebuild the stage before giving up on this dt
            bad_elem = ~ok.reshape(ok.shape[0], -1).all(axis=1)
            if np.all(self.chi[bad_elem] >= 1.0):
                raise _StageReject(
                    f"stage {stage}: first-order prediction inadmissible "
                    f"at this dt ({int(bad_elem.sum())} flagged elements)")
            self.chi = np.maximum(self.chi, np.where(bad_elem, 1.0, 0.0))
        else:
            raise _StageReject(
                f"stage {stage}: rescue flagging did not restore "
                "first-order positivity")
        if self.theta_hook is not None:
            # injected blend factors exercise the conservation/entropy
            # theorems; they are not positivity events, so they do not feed
            # the chi flagging below
            theta_f = np.clip(np.asarray(
                self.theta_hook(stage, U_stage), dtype=float), 0.0, 1.0)
        else:
            Up = U_stage + dt * parts.high
            eps_rho, eps_ie = limiter.compute_bounds(U1, parts.aleph,
                                                     self.solver.gas)
            t_r = limiter.theta_rho(U1[..., 0], Up[..., 0], eps_rho)
            t_pt = limiter.theta_ie(U1, Up, t_r, eps_ie, self.solver.gas)
            theta_f = limiter.element_theta(t_pt)
        th = theta_f[:, None, None, None, None]
        cand = U_stage + dt * (th * parts.high + (1.0 - th) * parts.low)
        if not np.all(thermo.is_admissible(cand)):
            raise _StageReject(f"stage {stage}: blended update inadmissible")
        return cand, theta_f, parts

    def _attempt(self, U, t, dt):
        chi_in = self.chi.copy()
        U_stage = U
        max_sn = 0.0
        mu_av = None
        theta_min = 1.0
        limited = np.zeros(U.shape[0], dtype=bool)
        for stage, (w_old, w_fe) in enumerate(_RK_WEIGHTS):
            t_stage = t + self._STAGE_T[stage] * dt
            euler, theta_f, parts = self._substep(stage, U_stage, t_stage, dt)
            U_stage = w_old * U + w_fe * euler
            max_sn = max(max_sn, float(parts.Sn.max()))
            mu_av = parts.Sn * parts.mu_max
            theta_min = min(theta_min, float(theta_f.min()))
            limited |= theta_f < 1.0
            # flagged elements keep extra interface dissipation next stage
            if self.theta_hook is None:
                self.chi = np.where(theta_f < 1.0, 1.0, 0.0)
        try:
            thermo.check_admissible(U_stage, "post-step state")
        except InadmissibleStateError as exc:
            raise _StageReject(str(exc)) from exc
        return U_stage, {"max_Sn": max_sn, "limited": int(limited.sum()),
                         "theta_min": theta_min, "mu_av": mu_av,
                         "chi_in": chi_in}

    # ------------------------------------------------------------------
    def step(self, U, t, dt):
        """Advance one step, halving dt on positivity failures.  Returns
        (U_new, dt_taken, info)."""
        chi0 = self.chi.copy()
        dt_try = dt
        last_err = None
        for retry in range(self.ctrl.max_retries + 1):
            try:
                U_new, info = self._attempt(U, t, dt_try)
            except _StageReject as exc:
                last_err = str(exc)
                self.chi = chi0.copy()
                dt_try *= self.ctrl.positivity_retry_factor
                if dt_try < self.ctrl.dt_min > 0.0:
                    break
                continue
            info.update(step=self.step_count, t=t, dt=dt_try, retries=retry)
            rho = U_new[..., 0]
            T = thermo.temperature(U_new, self.solver.gas)
            info["min_rho"] = float(rho.min())
            info["min_T"] = float(T.min())
            assert info["min_rho"] > 0.0 and info["min_T"] > 0.0
            self.step_count += 1
            self.last_info = info
            log.info(
                "step=%d t=%.6e dt=%.4e min_rho=%.4e min_T=%.4e "
                "max_Sn=%.3f limited=%d",
                info["step"], t + dt_try, dt_try, info["min_rho"],
                info["min_T"], info["max_Sn"], info["limited"])
            return U_new, dt_try, info
        diag = {
            "t": t, "dt_initial": dt, "dt_final": dt_try,
            "retries": self.ctrl.max_retries, "last_error": last_err,
            "min_rho": float(U[..., 0].min()),
            "min_ie": float(thermo.internal_energy(U).min()),
        }
        log.error("positivity retries exhausted: %s", diag)
        raise PositivityError(
            f"step at t={t:.6e} failed after {self.ctrl.max_retries} "
            f"dt-halvings (last: {last_err})", diagnostics=diag)

    def advance(self, U, t, t_final, dt_fixed=None, callback=None,
                inviscid=None, max_steps=10 ** 9):
        """March to t_final.  dt comes from stable_dt each step unless
        dt_fixed is given; the final step is clipped to land on t_final."""
        inviscid = self.solver.inviscid if inviscid is None else inviscid
        mu_av = None
        for _ in range(max_steps):
            if t >= t_final - 1e-14 * max(1.0, abs(t_final)):
                break
            if dt_fixed is not None:
                dt = dt_fixed
            else:
                dt = stable_dt(U, self.solver.mesh, self.solver.gas,
                               mu_av=mu_av, inviscid=inviscid,
                               controller=self.ctrl)
            dt = min(dt, t_final - t)
            U, dt_taken, info = self.step(U, t, dt)
            t += dt_taken
            mu_av = info["mu_av"] if self.solver.scheme == "ppesad" else None
            if callback is not None:
                callback(t, U, info)
        return U, t
