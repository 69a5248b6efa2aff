"""Case orchestration: configuration, runs, audits, convergence studies.

A run = build mesh + initial data for a named case, march to t_final,
write history/error CSVs, VTK field dumps and a JSON manifest, then finish
with conservation and positivity audits.  Error norms are volume-weighted
(quadrature weight times Jacobian) over all solution points.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from . import cases, mesh as meshmod, rhs, thermo
from .integrator import StepController, TimeIntegrator, stable_dt
from .mesh import BC_DIRICHLET, BC_WALL, GridSpec, build_box_mesh, export_vtk
from .sensors import AVConfig
from .thermo import GasModel

__all__ = [
    "CaseConfig", "RunResult", "AuditFailure", "build_case", "run_case",
    "convergence_study", "weighted_norms", "total_kinetic_energy",
    "total_entropy", "conservation_theta_residual", "load_config",
]

log = logging.getLogger("esflow")

MANIFEST_SCHEMA = 1
CASES = ("viscous_shock", "isentropic_vortex", "freestream", "tgv",
         "riemann_1d", "shock_diffraction_coarse")


class AuditFailure(RuntimeError):
    pass


@dataclass
class CaseConfig:
    case: str = "isentropic_vortex"
    scheme: str = "ppesad"
    p: int = 4
    K: int = 8                   # elements per direction (1 on flat axes)
    alpha: float = 0.0           # mesh perturbation fraction
    seed: int = 0
    gamma: float = 1.4
    R: float | None = None       # None: case-specific default
    Ma: float | None = None
    Re: float | None = None
    Pr: float | None = None
    viscosity_law: str = "constant"
    t_final: float | None = None
    cfl: float = 0.5
    dt: float | None = None      # fixed step; None: CFL-controlled
    output_every: int = 50       # history cadence in steps
    vtk_every: int = 0           # 0: initial/final only
    c_av: float = 0.5
    delta: float = 0.0
    out_dir: str = "out"
    # verification hooks
    random_theta: bool = False   # inject random per-stage theta_f
    frozen_theta: bool = False   # inject a frozen random theta_f field
    random_av: bool = False      # inject random per-stage AD coefficients

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}")
        if self.scheme not in rhs.SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


# case-specific defaults: (Ma, Re, Pr, t_final)
_DEFAULTS = {
    "viscous_shock": (2.5, 50.0, 0.75, 0.1),
    "isentropic_vortex": (0.3, 1.0, 0.72, 20.0),
    "freestream": (3.5, 500.0, 0.7, 1.0),
    "tgv": (2.0, 400.0, 0.7, 1.0),
    "riemann_1d": (None, 1.0, 0.72, 0.01),
    "shock_diffraction_coarse": (20.0, 1.0, 0.72, 0.01),
}


def _filled(cfg: CaseConfig):
    dMa, dRe, dPr, dT = _DEFAULTS[cfg.case]
    Ma = cfg.Ma if cfg.Ma is not None else dMa
    Re = cfg.Re if cfg.Re is not None else dRe
    Pr = cfg.Pr if cfg.Pr is not None else dPr
    tf = cfg.t_final if cfg.t_final is not None else dT
    return Ma, Re, Pr, tf


@dataclass
class CaseSetup:
    mesh: object
    gas: GasModel
    U0: np.ndarray
    inviscid: bool
    t_final: float
    bc_state: object = None
    exact: object = None                  # exact(X, t) -> U
    periodic: bool = True


def build_case(cfg: CaseConfig) -> CaseSetup:
    Ma, Re, Pr, tf = _filled(cfg)
    K = cfg.K
    if cfg.case == "viscous_shock":
        gas = GasModel(gamma=cfg.gamma, R=cfg.R or 1.0, Pr=Pr, Re=Re,
                       viscosity_law="constant")
        # velocity-scale normalization: upstream speed 1/2 of the
        # reference velocity puts the shock thickness at ~3/Re of the
        # unit domain, resolvable on the study's grid range
        T_up = 0.25 / (gas.gamma * gas.R * Ma ** 2)
        vs = cases.ViscousShock(gas, Ma=Ma, n=(1.0, 0.0, 0.0), T_up=T_up)
        w = 1.0 / K
        spec = GridSpec(K=(K, 1, 1), p=cfg.p, lo=(-0.5, 0.0, 0.0),
                        hi=(0.5, w, w), alpha=cfg.alpha, seed=cfg.seed,
                        periodic=(False, True, True))
        m = build_box_mesh(spec)
        return CaseSetup(m, gas, vs.state(m.X, 0.0), False, tf,
                         bc_state=vs.state, exact=vs.state, periodic=False)

    if cfg.case == "isentropic_vortex":
        gas = GasModel(gamma=cfg.gamma, R=cfg.R or 1.0, Pr=Pr, Re=Re)
        w = 10.0 / K / 2.0
        spec = GridSpec(K=(K, K, 1), p=cfg.p, lo=(-5.0, -5.0, -w),
                        hi=(5.0, 5.0, w), alpha=cfg.alpha, seed=cfg.seed,
                        periodic=(True, True, True))
        m = build_box_mesh(spec)
        ex = lambda X, t: cases.isentropic_vortex(X, t, gas, Ma=Ma)
        return CaseSetup(m, gas, ex(m.X, 0.0), True, tf, exact=ex)

    if cfg.case == "freestream":
        gas = GasModel(gamma=cfg.gamma, R=cfg.R or 1.0, Pr=Pr, Re=Re)
        spec = GridSpec(K=(K, K, K), p=cfg.p, lo=(0.0,) * 3, hi=(2.0,) * 3,
                        alpha=cfg.alpha, seed=cfg.seed,
                        periodic=(True, True, True))
        m = build_box_mesh(spec)
        ex = lambda X, t: cases.freestream_state(X, t, gas, Ma=Ma)
        return CaseSetup(m, gas, ex(m.X, 0.0), False, tf, exact=ex)

    if cfg.case == "tgv":
        gas = cases.tgv_gas(Ma=Ma, Re=Re)
        if cfg.Pr is not None or cfg.gamma != 1.4:
            gas = GasModel(gamma=cfg.gamma, R=1.0 / (cfg.gamma * Ma ** 2),
                           Pr=Pr, Re=Re)
        spec = GridSpec(K=(K, K, K), p=cfg.p, lo=(-np.pi,) * 3,
                        hi=(np.pi,) * 3, alpha=cfg.alpha, seed=cfg.seed,
                        periodic=(True, True, True))
        m = build_box_mesh(spec)
        return CaseSetup(m, gas, cases.tgv_state(m.X, gas), False, tf)

    if cfg.case == "riemann_1d":
        gas = GasModel(gamma=cfg.gamma, R=cfg.R or 1.0, Pr=Pr, Re=Re)
        w = 1.0 / K
        spec = GridSpec(K=(K, 1, 1), p=cfg.p, lo=(0.0, 0.0, 0.0),
                        hi=(1.0, w, w), alpha=cfg.alpha, seed=cfg.seed,
                        periodic=(False, True, True),
                        bc=((BC_WALL, BC_WALL),) * 3)
        m = build_box_mesh(spec)
        U0 = cases.blast_1d_state(m.X, gas)
        return CaseSetup(m, gas, U0, True, tf, periodic=False)

    if cfg.case == "shock_diffraction_coarse":
        gas = GasModel(gamma=cfg.gamma, R=cfg.R or 1.0, Pr=Pr, Re=Re)
        K1, K2 = 2 * K, K
        active = np.ones((K1, K2, 1), dtype=bool)
        active[: K1 // 4, : K2 // 2, :] = False    # backward-facing step
        w = 1.0 / K2
        spec = GridSpec(K=(K1, K2, 1), p=cfg.p, lo=(0.0, 0.0, 0.0),
                        hi=(2.0, 1.0, w), alpha=cfg.alpha, seed=cfg.seed,
                        periodic=(False, False, True), active=active,
                        inactive_bc=BC_WALL,
                        bc=((BC_DIRICHLET, BC_DIRICHLET),
                            (BC_WALL, BC_WALL), (BC_WALL, BC_WALL)))
        m = build_box_mesh(spec)
        # moving normal shock at Mach Ma into quiescent gas, jump at x0
        g = gas.gamma
        c1 = np.sqrt(g * gas.R)
        P2 = 1.0 + 2.0 * g / (g + 1.0) * (Ma ** 2 - 1.0)
        r2 = (g + 1.0) * Ma ** 2 / ((g - 1.0) * Ma ** 2 + 2.0)
        u2 = Ma * c1 * (1.0 - 1.0 / r2)
        x0 = 0.35

        def state(X, t):
            X = np.asarray(X, dtype=float)
            post = X[..., 0] < x0
            rho = np.where(post, r2, 1.0)
            P = np.where(post, P2, 1.0)
            V = np.zeros(X.shape)
            V[..., 0] = np.where(post, u2, 0.0)
            return thermo.conservative_from_primitive(rho, V, P, gas)

        return CaseSetup(m, gas, state(m.X, 0.0), True, tf,
                         bc_state=state, periodic=False)

    raise AssertionError(cfg.case)


# ---------------------------------------------------------------- norms
def weighted_norms(m, err):
    """Volume-weighted discrete L2 and pointwise Linf of a scalar field
    (E, N, N, N)."""
    w3 = m.ops.weights3
    vol = float(np.einsum("ijk,eijk->", w3, m.J))
    L2 = np.sqrt(float(np.einsum("ijk,eijk->", w3, m.J * err ** 2)) / vol)
    return L2, float(np.abs(err).max())


def total_kinetic_energy(m, U):
    rho = U[..., 0]
    ke = 0.5 * np.einsum("...m,...m->...", U[..., 1:4], U[..., 1:4]) / rho
    return float(np.einsum("ijk,eijk->", m.ops.weights3, ke * m.J))


def total_entropy(m, U, gas):
    return float(np.einsum("ijk,eijk->", m.ops.weights3,
                           thermo.entropy(U, gas) * m.J))


def _totals(m, U):
    w3 = m.ops.weights3
    return (float(np.einsum("ijk,eijk->", w3, U[..., 0] * m.J)),
            float(np.einsum("ijk,eijk->", w3, U[..., 4] * m.J)))


def conservation_theta_residual(solver, U, seed=0):
    """Structural conservation check: the global quadrature sums of the
    blended RHS must not depend on the per-element theta_f (interior flux
    blending telescopes away).  Returns the max relative difference of the
    mass/energy totals between theta = 1 and a random theta field."""
    rngs = np.random.default_rng(seed)
    parts = solver.compute(U, 0.0)
    w3 = solver.mesh.ops.weights3
    J = solver.mesh.J

    def tots(r):
        return np.einsum("ijk,eijkc->c", w3, r * J[..., None])

    hi = tots(parts.high)
    if parts.low is None:
        return 0.0
    th = rngs.random(solver.mesh.n_elem)[:, None, None, None, None]
    blend = tots(th * parts.high + (1.0 - th) * parts.low)
    scale = max(float(np.abs(hi).max()), 1.0)
    return float(np.abs(blend - hi).max() / scale)


# ------------------------------------------------------------------ run
@dataclass
class RunResult:
    config: CaseConfig
    t_end: float
    U: np.ndarray
    setup: CaseSetup
    history: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    audits: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    @property
    def audits_pass(self) -> bool:
        return all(v.get("pass", True) for v in self.audits.values())


def _make_hooks(cfg: CaseConfig, setup: CaseSetup, rng):
    theta_hook = None
    av_hook = None
    E = setup.mesh.n_elem
    N = setup.mesh.ops.base.N
    if cfg.frozen_theta:
        theta = rng.random(E)
        theta_hook = lambda stage, U: theta
    elif cfg.random_theta:
        theta_hook = lambda stage, U: rng.random(E)
    if cfg.random_av:
        mu_scale = 1.0 / setup.gas.Re

        def av_hook(stage, U):
            mu_p = rng.random((E, N, N, N)) * mu_scale
            mu1 = [rng.random((E,) + tuple(
                N + 1 if a == d else N for a in range(3))) * mu_scale
                for d in range(3)]
            return mu_p, mu1
    return theta_hook, av_hook


def run_case(cfg: CaseConfig, write_outputs=True, dump_av=False,
             callback=None) -> RunResult:
    rng = np.random.default_rng(cfg.seed)
    setup = build_case(cfg)
    m, gas = setup.mesh, setup.gas
    solver = rhs.Solver(m, gas, scheme=cfg.scheme,
                        av=AVConfig(c_av=cfg.c_av, delta=cfg.delta),
                        bc_state=setup.bc_state, inviscid=setup.inviscid)
    theta_hook, av_hook = _make_hooks(cfg, setup, rng)
    integ = TimeIntegrator(solver, StepController(cfl=cfg.cfl),
                           theta_hook=theta_hook, av_hook=av_hook)

    out_dir = cfg.out_dir
    if write_outputs:
        os.makedirs(out_dir, exist_ok=True)

    U = setup.U0.copy()
    m0, e0 = _totals(m, U)
    min_rho_run = [float(U[..., 0].min())]
    min_T_run = [float(thermo.temperature(U, gas).min())]
    history = []
    S_prev = [total_entropy(m, U, gas), 0.0]

    def record(t, Ucur, info):
        S = total_entropy(m, Ucur, gas)
        dSdt = (S - S_prev[0]) / max(t - S_prev[1], 1e-300)
        S_prev[0], S_prev[1] = S, t
        mm, ee = _totals(m, Ucur)
        history.append({
            "t": t, "dt": info["dt"], "ke": total_kinetic_energy(m, Ucur),
            "entropy": S, "entropy_rate": dSdt,
            "mass": mm, "energy": ee,
            "min_rho": info["min_rho"], "min_T": info["min_T"],
            "max_Sn": info["max_Sn"], "limited": info["limited"],
        })

    vtk_count = [0]

    def dump_vtk(tag, Ucur, info=None):
        if not write_outputs:
            return
        rho, V, P, T, *_ = thermo.primitive(Ucur, gas, check=False)
        fields = {"rho": rho, "P": P, "T": T, "V": V}
        if dump_av and info is not None:
            pass  # per-element AV recorded in history; field dump below
        path = os.path.join(out_dir, f"fields_{tag}.vtk")
        export_vtk(m, path, fields)
        return os.path.basename(path)

    f_init = dump_vtk("initial", U)

    step_in_window = [0]

    def cb(t, Ucur, info):
        min_rho_run.append(info["min_rho"])
        min_T_run.append(info["min_T"])
        step_in_window[0] += 1
        if step_in_window[0] % cfg.output_every == 0:
            record(t, Ucur, info)
        if cfg.vtk_every and step_in_window[0] % cfg.vtk_every == 0:
            dump_vtk(f"{step_in_window[0]:06d}", Ucur, info)
        if callback is not None:
            callback(t, Ucur, info)

    U, t_end = integ.advance(U, 0.0, setup.t_final, dt_fixed=cfg.dt,
                             callback=cb)
    record(t_end, U, integ.last_info or
           {"dt": 0.0, "min_rho": float(U[..., 0].min()),
            "min_T": float(thermo.temperature(U, gas).min()),
            "max_Sn": 0.0, "limited": 0})
    f_final = dump_vtk("final", U)

    res = RunResult(config=cfg, t_end=t_end, U=U, setup=setup,
                    history=history)

    # ------------------------------------------------------------ errors
    if setup.exact is not None:
        Ue = setup.exact(m.X, t_end)
        L2, Li = weighted_norms(m, U[..., 0] - Ue[..., 0])
        res.errors = {"L2_rho": L2, "Linf_rho": Li}

    # ------------------------------------------------------------ audits
    mm, ee = _totals(m, U)
    mdrift = abs(mm - m0) / abs(m0)
    edrift = abs(ee - e0) / abs(e0)
    cons = {"mass_drift": mdrift, "energy_drift": edrift,
            "theta_residual": conservation_theta_residual(solver, U,
                                                          cfg.seed)}
    cons["pass"] = cons["theta_residual"] <= 1e-11 and (
        not setup.periodic or (mdrift <= 1e-11 and edrift <= 1e-11))
    pos = {"min_rho": min(min_rho_run), "min_T": min(min_T_run)}
    pos["pass"] = pos["min_rho"] > 0.0 and pos["min_T"] > 0.0
    res.audits = {"conservation": cons, "positivity": pos}
    for name, a in res.audits.items():
        log.info("audit %s: %s", name,
                 " ".join(f"{k}={v}" for k, v in a.items()))

    # ------------------------------------------------------------ output
    if write_outputs:
        hist_path = os.path.join(out_dir, "history.csv")
        if history:
            with open(hist_path, "w", newline="") as fh:
                wcsv = csv.DictWriter(fh, fieldnames=list(history[0]))
                wcsv.writeheader()
                wcsv.writerows(history)
        manifest = {
            "schema_version": MANIFEST_SCHEMA,
            "case": cfg.case, "scheme": cfg.scheme,
            "config": asdict(cfg), "t_end": t_end,
            "files": {"history": "history.csv",
                      "fields_initial": f_init, "fields_final": f_final},
            "errors": res.errors, "audits": res.audits,
        }
        with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, default=float)
        res.files = manifest["files"]
    return res


# ---------------------------------------------------------- convergence
def convergence_study(cfg: CaseConfig, K_list, out_csv=None):
    """Run cfg at each K, compute volume-weighted error norms against the
    exact solution and log2 rates between successive grids.  Returns the
    table rows; optionally writes them as CSV."""
    rows = []
    for K in K_list:
        c = CaseConfig(**{**asdict(cfg), "K": int(K)})
        res = run_case(c, write_outputs=False)
        if not res.errors:
            raise ValueError(f"case {cfg.case} has no exact solution")
        rows.append({"p": c.p, "K": int(K),
                     "Linf": res.errors["Linf_rho"], "rate_Linf": "",
                     "L2": res.errors["L2_rho"], "rate_L2": ""})
        log.info("convergence K=%d L2=%.6e Linf=%.6e", K,
                 rows[-1]["L2"], rows[-1]["Linf"])
    for i in range(1, len(rows)):
        den = np.log(rows[i]["K"] / rows[i - 1]["K"]) / np.log(2.0)
        rows[i]["rate_Linf"] = float(
            np.log2(rows[i - 1]["Linf"] / rows[i]["Linf"]) / den)
        rows[i]["rate_L2"] = float(
            np.log2(rows[i - 1]["L2"] / rows[i]["L2"]) / den)
    if out_csv:
        os.makedirs(os.path.dirname(out_csv) or ".", exist_ok=True)
        with open(out_csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return rows


# --------------------------------------------------------------- config
def load_config(path: str) -> CaseConfig:
    """Read a YAML (or JSON) mapping of CaseConfig fields."""
    import yaml
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    known = set(CaseConfig.__dataclass_fields__)
    extra = set(data) - known - {"K_list"}
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    k_list = data.pop("K_list", None)
    cfg = CaseConfig(**data)
    cfg.K_list = k_list          # stashed for `convergence`
    return cfg
