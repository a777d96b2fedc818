"""
Run configuration: a JSON document validated against a closed schema.

Unknown keys anywhere are rejected.  Every violation is collected into a
single ConfigError whose message lists one ``path: problem`` line each.
"""

from __future__ import annotations

import enum
import json
import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field as PField, ValidationError, model_validator

from .dynamics import EquationParams, Sign
from .grid import GridSpec, YDomain


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid configuration:\n  " + "\n  ".join(violations))


class Experiment(str, enum.Enum):
    EVOLVE = "evolve"
    GROUND_STATE = "groundstate"
    STABILITY = "stability"
    PICARD = "picard"
    INEQUALITIES = "inequalities"
    SCALING = "scaling"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _pow2(n: int) -> bool:
    return n >= 8 and n & (n - 1) == 0


class GridSection(_Strict):
    nx: int
    ny: int
    lx: float = PField(gt=0)
    y_domain: YDomain = YDomain.TORUS
    ly: Optional[float] = PField(default=None, gt=0)

    @model_validator(mode="after")
    def _check(self):
        bad = [k for k in ("nx", "ny") if not _pow2(getattr(self, k))]
        if bad:
            raise ValueError(f"{', '.join(bad)} must be a power of two >= 8")
        return self

    def build(self) -> GridSpec:
        return GridSpec(self.nx, self.ny, self.lx, self.y_domain, 2.0 * math.pi if self.ly is None else self.ly)


class EquationSection(_Strict):
    p: float = PField(default=2.0, gt=1, lt=5)
    sign: Sign = Sign.FOCUSING
    s: float = PField(default=0.5, ge=0.5, le=1.0)

    def build(self) -> EquationParams:
        return EquationParams(self.p, self.sign, self.s)


class RunSection(_Strict):
    T: float = PField(ge=0)
    dt: float = PField(gt=0)
    sample_every: int = PField(default=1, ge=1)
    snapshot_every: Optional[int] = PField(default=None, ge=1)
    seed: int = PField(default=0, ge=0, lt=2**64)
    blowup_ceiling: float = PField(default=1e12, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.T > 0 and self.dt > self.T:
            raise ValueError(f"dt = {self.dt} exceeds T = {self.T}")
        if self.T > 0:
            n = round(self.T / self.dt)
            if abs(n * self.dt - self.T) > 1e-9 * self.T:
                raise ValueError(f"dt = {self.dt} does not divide T = {self.T}")
        return self


class InitialSection(_Strict):
    """Initial data.

    gaussian: amplitude * exp(-x^2/(2 width^2)) (1 + y_modulation cos y) on the torus,
    or times exp(-y^2/(2 width_y^2)) on a truncated y-line.
    line_soliton: R_omega (torus only).
    random: band-limited seeded field, |xi| <= cutoff_xi, |eta| <= cutoff_eta,
    scaled to L2 norm ``amplitude``.
    """

    kind: Literal["gaussian", "line_soliton", "random"] = "gaussian"
    amplitude: float = 1.0
    width: float = PField(default=2.0, gt=0)
    width_y: float = PField(default=1.0, gt=0)
    y_modulation: float = 0.5
    omega: float = PField(default=1.0, gt=0)
    cutoff_xi: float = PField(default=2.0, gt=0)
    cutoff_eta: float = PField(default=4.0, gt=0)


class GroundStateSection(_Strict):
    omega: float = PField(default=0.3, gt=0)
    perturbation: float = 0.1
    dt: float = PField(default=2.0, gt=0)
    tol: float = PField(default=1e-9, gt=0)
    max_iter: int = PField(default=5000, ge=1)


class StabilitySection(_Strict):
    omega: float = PField(default=0.3, gt=0)
    delta: float = PField(default=1e-2, gt=0)
    cutoff_xi: float = PField(default=2.0, gt=0)
    cutoff_eta: float = PField(default=3.0, gt=0)


class PicardSection(_Strict):
    norm: float = PField(default=0.1, gt=0)
    T: float = PField(default=0.1, gt=0)
    M: int = PField(default=32, ge=8)
    max_iter: int = PField(default=50, ge=1)
    tol: float = PField(default=1e-13, gt=0)
    split_dt: float = PField(default=1e-4, gt=0)


class InequalitiesSection(_Strict):
    count: int = PField(default=64, ge=2)
    s: float = PField(default=1.0, gt=0.5, le=1.0)
    margin: float = PField(default=1.5, ge=1.0)


class ScalingSection(_Strict):
    lam: float = PField(default=2.0, gt=0)


class RunConfig(_Strict):
    experiment: Experiment
    grid: GridSection
    equation: EquationSection = EquationSection()
    run: RunSection
    initial: InitialSection = InitialSection()
    groundstate: GroundStateSection = GroundStateSection()
    stability: StabilitySection = StabilitySection()
    picard: PicardSection = PicardSection()
    inequalities: InequalitiesSection = InequalitiesSection()
    scaling: ScalingSection = ScalingSection()
    output_dir: str = "hwlab_output"

    @model_validator(mode="after")
    def _cross(self):
        torus = self.grid.y_domain is YDomain.TORUS
        needs_torus = self.experiment in (Experiment.GROUND_STATE, Experiment.STABILITY) or (
            self.experiment is Experiment.EVOLVE and self.initial.kind == "line_soliton")
        if needs_torus and not torus:
            raise ValueError("line solitons and ground states need y_domain = 'torus'")
        if self.experiment is Experiment.SCALING and torus:
            raise ValueError("the scaling check needs y_domain = 'truncated'")
        if self.experiment in (Experiment.GROUND_STATE, Experiment.STABILITY) and self.equation.sign is not Sign.FOCUSING:
            raise ValueError("ground states and orbital stability need sign = 'focusing'")
        if self.experiment is Experiment.GROUND_STATE and self.equation.p > 2:
            raise ValueError("the ground-state experiment covers 1 < p <= 2")
        return self


def _format(err: ValidationError) -> list[str]:
    out = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        msg = e["msg"]
        if e["type"] == "extra_forbidden":
            msg = "unknown key"
        out.append(f"{loc}: {msg}")
    return out


def parse_config(text: str | bytes) -> RunConfig:
    """Parse and validate a UTF-8 JSON run configuration."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<json>: {exc}"]) from None
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format(exc)) from None
