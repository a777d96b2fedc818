"""
Acceptance criteria as runnable checks.

Every experiment is driven from a checked-in recipe (``hwlab/recipes``) so
that ``hwlab run`` reproduces it; the checks here only add overrides and
thresholds.  Each criterion returns a CriterionResult whose ``line()`` is
the one-line PASS/WARN/FAIL report.
"""

from __future__ import annotations

import json
import math
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .cli import run, summary_bytes
from .config import RunConfig, parse_config
from .dynamics import EquationParams
from .experiments import execute, stability_verdict
from .grid import make_grid
from .groundstate import elliptic_residual, line_soliton, line_soliton_profile


@dataclass
class CriterionResult:
    number: int
    name: str
    status: str
    value: float | None
    threshold: str
    seconds: float
    detail: str = ""

    def line(self) -> str:
        v = "n/a" if self.value is None else f"{self.value:.3e}"
        extra = f" [{self.detail}]" if self.detail else ""
        return f"{self.status} {self.number:2d} {self.name}: value={v} ({self.threshold}) in {self.seconds:.1f}s{extra}"


def recipe_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("hwlab.recipes").iterdir() if p.name.endswith(".json"))


def load_recipe(name: str) -> RunConfig:
    return parse_config(resources.files("hwlab.recipes").joinpath(f"{name}.json").read_bytes())


def _with_run(cfg: RunConfig, **kw) -> RunConfig:
    return cfg.model_copy(update={"run": cfg.run.model_copy(update=kw)})


def _status(ok: bool, seconds: float, limit: float | None) -> str:
    return "PASS" if ok and (limit is None or seconds <= limit) else "FAIL"


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def c1_mass() -> CriterionResult:
    out, sec = _timed(lambda: execute(load_recipe("gaussian")))
    d = out.summary["relative_mass_drift"]
    return CriterionResult(1, "mass conservation", _status(d <= 1e-10, sec, 60), d, "drift <= 1e-10, <= 60 s", sec)


def c2_energy_order() -> CriterionResult:
    base = load_recipe("gaussian")
    dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3]

    def ladder():
        return [execute(_with_run(base, dt=dt, sample_every=max(1, round(0.1 / dt)))).summary["max_energy_drift"] for dt in dts]

    drifts, sec = _timed(ladder)
    ratios = [a / b for a, b in zip(drifts[:-1], drifts[1:])]
    ok = all(3.0 <= r <= 5.0 for r in ratios)
    worst = max(ratios, key=lambda r: abs(r - 4.0))
    return CriterionResult(2, "energy order", _status(ok, sec, 120), worst, "ratios in [3, 5], <= 120 s", sec,
                           "ratios " + ", ".join(f"{r:.3f}" for r in ratios))


def c3_standing_wave() -> CriterionResult:
    out, sec = _timed(lambda: execute(load_recipe("soliton")))
    e = out.summary["max_standing_wave_error"]
    return CriterionResult(3, "standing-wave exactness", _status(e <= 1e-4, sec, None), e, "<= 1e-4", sec)


def fd_residual_oracle(omega: float = 1.0, p: float = 2.0, h: float = 1e-3, half_width: float = 30.0) -> float:
    """Max |-R'' + omega R - R^p| of the closed-form line soliton by a 4th-order finite-difference stencil."""
    x = np.arange(-half_width, half_width + h / 2, h)
    r = line_soliton_profile(x, omega, p)
    d2 = (-r[4:] + 16 * r[3:-1] - 30 * r[2:-2] + 16 * r[1:-3] - r[:-4]) / (12 * h * h)
    rr = r[2:-2]
    return float(np.max(np.abs(-d2 + omega * rr - rr**p)))


def c4_line_soliton_residual() -> CriterionResult:
    def work():
        params = EquationParams(2.0)
        grid = make_grid(512, 16, 80.0)
        return elliptic_residual(line_soliton(1.0, params, grid), 1.0, params), fd_residual_oracle()

    (res, fd), sec = _timed(work)
    ok = res <= 1e-8 and fd <= 1e-6
    return CriterionResult(4, "line-soliton residual", _status(ok, sec, None), res, "spectral <= 1e-8, FD oracle <= 1e-6",
                           sec, f"fd oracle {fd:.2e}")


def c5_ground_state() -> CriterionResult:
    out, sec = _timed(lambda: execute(load_recipe("groundstate")))
    s = out.summary
    err, dw = s["line_soliton_profile_error"], abs(s["omega"] - s["target_omega"])
    ok = err <= 1e-3 and dw <= 1e-3 and s["below_threshold"]
    return CriterionResult(5, "ground state = line soliton below threshold", _status(ok, sec, 300), err,
                           "profile err <= 1e-3, |omega - 0.3| <= 1e-3, <= 300 s", sec,
                           f"omega err {dw:.2e}, threshold {s['omega_threshold']:.3g}")


def c6_picard() -> CriterionResult:
    out, sec = _timed(lambda: execute(load_recipe("picard")))
    s = out.summary
    ok = s["converged"] and s["ratio"] <= 0.5 and s["split_step_difference"] <= 1e-6
    return CriterionResult(6, "Picard contraction", _status(ok, sec, None), s["ratio"], "rho <= 0.5, vs split-step <= 1e-6",
                           sec, f"split-step diff {s['split_step_difference']:.2e}")


def c7_scaling() -> CriterionResult:
    out, sec = _timed(lambda: execute(load_recipe("scaling")))
    m = out.summary["relative_mismatch"]
    return CriterionResult(7, "scaling covariance", _status(m <= 1e-6, sec, None), m, "<= 1e-6", sec)


def c8_orbital_stability() -> CriterionResult:
    out, sec = _timed(lambda: execute(load_recipe("stability")))
    d = out.summary["max_orbit_distance"]
    return CriterionResult(8, "orbital stability", stability_verdict(d), d, "<= 5e-2 (WARN <= 1e-1)", sec)


def c9_inequalities() -> CriterionResult:
    out, sec = _timed(lambda: execute(load_recipe("inequalities")))
    reps = out.summary["reports"]
    failed = [r["id"] for r in reps if not r["pass"]]
    holder = next(r for r in reps if r["id"] == "apriori_l6_embedding")["extras"]["holder_max"]
    worst = max(r["holdout_max"] / r["C_cal"] for r in reps)
    return CriterionResult(9, "inequality suite", _status(not failed and holder <= 1 + 1e-10, sec, 300), worst,
                           "holdout/C_cal <= 1.5 each, Hölder <= 1 + 1e-10, <= 300 s", sec,
                           f"hölder max {holder:.6f}" + (f"; failed {failed}" if failed else ""))


def c10_determinism(names: list[str] | None = None) -> CriterionResult:
    names = recipe_names() if names is None else names

    def work():
        differ = []
        with tempfile.TemporaryDirectory() as tmp:
            for name in names:
                cfg = load_recipe(name)
                blobs = []
                for k in range(2):
                    d = Path(tmp) / f"{name}_{k}"
                    run(cfg, d)
                    blobs.append((d / "summary.json").read_bytes())
                if blobs[0] != blobs[1]:
                    differ.append(name)
        return differ

    differ, sec = _timed(work)
    return CriterionResult(10, "determinism", _status(not differ, sec, None), float(len(differ)),
                           "identical summary.json for every recipe", sec,
                           f"{len(names)} recipes" + (f"; differ: {differ}" if differ else ""))


CRITERIA: dict[str, Callable[[], CriterionResult]] = {
    "mass": c1_mass,
    "energy-order": c2_energy_order,
    "standing-wave": c3_standing_wave,
    "soliton-residual": c4_line_soliton_residual,
    "ground-state": c5_ground_state,
    "picard": c6_picard,
    "scaling": c7_scaling,
    "stability": c8_orbital_stability,
    "inequalities": c9_inequalities,
    "determinism": c10_determinism,
}

SUITES: dict[str, list[str]] = {
    "acceptance": list(CRITERIA),
    "quick": ["mass", "standing-wave", "soliton-residual", "picard", "scaling"],
    **{k: [k] for k in CRITERIA},
}


def run_suite(name: str) -> list[CriterionResult]:
    return [CRITERIA[k]() for k in SUITES[name]]
