"""
Experiment drivers behind ``hwlab run``.

Each driver takes a validated RunConfig and returns an Outcome: a JSON-ready
summary, the ledger to write (possibly empty), the snapshots and a status.
Nothing here touches the filesystem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .config import Experiment, RunConfig
from .duhamel import picard_solve, residual
from .dynamics import (
    ConservedLedger,
    EquationParams,
    NonFiniteStateError,
    evolve,
    scaling_transform,
)
from .grid import AnisoHs, Field, GridSpec, YDomain, norm, ANISO_HALF
from .groundstate import (
    ground_state_at_omega,
    line_soliton,
    omega_threshold,
    y_variation,
)
from .stability import stability_experiment

STATUS_OK = 0
STATUS_INVALID = 2
STATUS_BLOWUP = 3


@dataclass
class Outcome:
    summary: dict
    ledger: ConservedLedger | None
    snapshots: list[tuple[float, Field]] = field(default_factory=list)
    status: int = STATUS_OK


def initial_field(cfg: RunConfig, grid: GridSpec, params: EquationParams) -> Field:
    ini = cfg.initial
    if ini.kind == "line_soliton":
        return line_soliton(ini.omega, params, grid) * ini.amplitude
    if ini.kind == "random":
        band = analysis.BandLimited(ini.cutoff_xi, ini.cutoff_eta)
        v = analysis.Ensemble(cfg.run.seed, 1, band, grid).fields()[0]
        f = Field(grid, v)
        n = norm(f)
        if n == 0:
            raise ValueError("band-limited initial data is empty; raise the cutoffs")
        return f * (ini.amplitude / n)
    X, Y = grid.mesh()
    gx = np.exp(-X**2 / (2.0 * ini.width**2))
    if grid.y_domain is YDomain.TORUS:
        gy = 1.0 + ini.y_modulation * np.cos(Y)
    else:
        gy = np.exp(-Y**2 / (2.0 * ini.width_y**2))
    return Field(grid, ini.amplitude * gx * gy)


def _rel(a: Field, b: Field) -> float:
    return norm(a - b) / norm(b)


def _evolve_summary(res, params: EquationParams) -> dict:
    led = res.ledger
    return {
        "steps": res.steps,
        "t_final": float(led.t[-1]),
        "samples": len(led),
        "relative_mass_drift": led.relative_mass_drift(),
        "max_energy_drift": led.max_energy_drift(),
        "final": dict(zip(("t", "mass", "energy", "l2hs", "h1l2", "linf", "N"), led.rows[-1])),
        "blowup_suspected": led.blowup_suspected,
        "blowup_time": led.blowup_time,
        "max_tail_fraction": led.max_tail_fraction,
        "gronwall": led.gronwall_diagnostic(params.p) if params.p < 7.0 / 3.0 else None,
    }


def run_evolve(cfg: RunConfig) -> Outcome:
    grid, params = cfg.grid.build(), cfg.equation.build()
    u0 = initial_field(cfg, grid, params)
    extra = {}
    observe = None
    if cfg.initial.kind == "line_soliton":
        omega = cfg.initial.omega
        errors = []

        def observe(t, f):
            errors.append(_rel(f, u0 * np.exp(1j * omega * t)))

        extra["standing_wave"] = errors
    snap_every = cfg.run.snapshot_every
    try:
        res = evolve(u0, params, cfg.run.T, cfg.run.dt, cfg.run.sample_every, snapshot_every=snap_every,
                     blowup_ceiling=cfg.run.blowup_ceiling, on_sample=observe)
    except NonFiniteStateError as exc:
        return Outcome({"error": str(exc), "step": exc.step, "t": exc.t}, exc.ledger, [], STATUS_BLOWUP)
    summary = _evolve_summary(res, params)
    if "standing_wave" in extra:
        summary["max_standing_wave_error"] = max(extra["standing_wave"])
    snaps = res.snapshots if snap_every else [(float(res.ledger.t[-1]), res.final)]
    return Outcome(summary, res.ledger, snaps, STATUS_BLOWUP if res.blowup_suspected else STATUS_OK)


def run_groundstate(cfg: RunConfig) -> Outcome:
    grid, params = cfg.grid.build(), cfg.equation.build()
    gsc = cfg.groundstate
    r = line_soliton(gsc.omega, params, grid)
    start = Field(grid, r.values * (1.0 + gsc.perturbation * np.cos(grid.y))[None, :])
    gs = ground_state_at_omega(gsc.omega, params, grid, initial=start, dt=gsc.dt, tol=gsc.tol, max_iter=gsc.max_iter)
    threshold = omega_threshold(params)
    summary = gs.summary()
    summary.update(
        converged=gs.converged,
        target_omega=gsc.omega,
        omega_threshold=threshold,
        below_threshold=gsc.omega < threshold,
        line_soliton_profile_error=_rel(gs.profile, r),
        y_variation=y_variation(gs.profile),
    )
    ledger = ConservedLedger(s=params.s, q_prime=4.0 / (5.0 - params.p))
    ledger.record(0.0, gs.profile, params)
    return Outcome(summary, ledger, [(0.0, gs.profile)])


def run_stability(cfg: RunConfig) -> Outcome:
    grid, params = cfg.grid.build(), cfg.equation.build()
    sc = cfg.stability
    gs = ground_state_at_omega(sc.omega, params, grid)
    band = analysis.BandLimited(sc.cutoff_xi, sc.cutoff_eta)
    pert = Field(grid, analysis.Ensemble(cfg.run.seed, 1, band, grid).fields()[0])
    pert = pert * (sc.delta / norm(pert, ANISO_HALF))
    try:
        res = stability_experiment(gs, pert, params, cfg.run.T, cfg.run.dt, cfg.run.sample_every)
    except NonFiniteStateError as exc:
        return Outcome({"error": str(exc), "step": exc.step, "t": exc.t}, exc.ledger, [], STATUS_BLOWUP)
    d = res.max_distance
    summary = {
        "omega": sc.omega,
        "delta": sc.delta,
        "ground_state": gs.summary(),
        "max_orbit_distance": d,
        "final_orbit_distance": float(res.distances[-1]),
        "relative_mass_drift": res.ledger.relative_mass_drift(),
        "max_energy_drift": res.ledger.max_energy_drift(),
        "verdict": stability_verdict(d),
    }
    return Outcome(summary, res.ledger, [], STATUS_BLOWUP if res.ledger.blowup_suspected else STATUS_OK)


def stability_verdict(distance: float, bound: float = 5e-2, loose: float = 1e-1) -> str:
    if distance <= bound:
        return "PASS"
    return "WARN" if distance <= loose else "FAIL"


def run_picard(cfg: RunConfig) -> Outcome:
    grid, params = cfg.grid.build(), cfg.equation.build()
    pc = cfg.picard
    u0 = initial_field(cfg, grid, params)
    u0 = u0 * (pc.norm / norm(u0, AnisoHs(params.s)))
    rep = picard_solve(u0, params, pc.T, pc.M, pc.max_iter, pc.tol)
    split = evolve(u0, params, pc.T, pc.split_dt, max(1, round(pc.T / pc.split_dt)))
    summary = rep.summary()
    summary.update(
        residual=residual(rep, u0, params),
        split_step_difference=_rel(rep.trajectory.final, split.final),
        T=pc.T,
        M=pc.M,
        data_norm=pc.norm,
    )
    ledger = ConservedLedger(s=params.s, q_prime=4.0 / (5.0 - params.p))
    for j, t in enumerate(rep.trajectory.times):
        ledger.record(float(t), rep.trajectory[j], params)
    return Outcome(summary, ledger, [(pc.T, rep.trajectory.final)])


def run_inequalities(cfg: RunConfig) -> Outcome:
    grid, params = cfg.grid.build(), cfg.equation.build()
    ic = cfg.inequalities
    p = min(params.p, 2.0)
    reports = analysis.run_inequality_suite(grid, cfg.run.seed, ic.count, p=p, s=ic.s, margin=ic.margin)
    summary = {"reports": [r.to_json() for r in reports], "all_pass": all(r.passed for r in reports)}
    return Outcome(summary, None)


def run_scaling(cfg: RunConfig) -> Outcome:
    grid, params = cfg.grid.build(), cfg.equation.build()
    lam = cfg.scaling.lam
    u0 = initial_field(cfg, grid, params)
    T, dt = cfg.run.T, cfg.run.dt
    big = evolve(u0, params, lam**2 * T, dt, cfg.run.sample_every)
    lhs = scaling_transform(big.final, lam, params)
    small = evolve(scaling_transform(u0, lam, params), params, T, dt / lam**2, cfg.run.sample_every)
    summary = {
        "lambda": lam,
        "relative_mismatch": _rel(lhs, small.final),
        "T": T,
        "max_tail_fraction": small.ledger.max_tail_fraction,
    }
    return Outcome(summary, small.ledger, [(T, small.final)])


DRIVERS = {
    Experiment.EVOLVE: run_evolve,
    Experiment.GROUND_STATE: run_groundstate,
    Experiment.STABILITY: run_stability,
    Experiment.PICARD: run_picard,
    Experiment.INEQUALITIES: run_inequalities,
    Experiment.SCALING: run_scaling,
}


def execute(cfg: RunConfig) -> Outcome:
    return DRIVERS[cfg.experiment](cfg)


def clean_json(obj):
    """Replace non-finite floats by None and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
