"""
Time evolution of  i u_t + (d_x^2 - |D_y|) u = sign * |u|^(p-1) u  by Strang splitting.

The linear flow is the exact Fourier multiplier exp(-i t (xi^2 + |eta|)); the
nonlinear sub-flow i u_t = sign |u|^(p-1) u keeps |u| fixed pointwise and is
solved exactly as u -> u exp(-i sign dt |u|^(p-1)).  Both substeps are unitary
in L2, so mass is conserved to roundoff and all error is splitting error.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .grid import (
    ANISO_HALF,
    Field,
    GridSpec,
    H1X_L2Y,
    L2xHsy,
    YDomain,
    fft2,
    ifft2,
    lp_norm_values,
    tail_mass_fraction,
)

log = logging.getLogger(__name__)


class Sign(str, enum.Enum):
    FOCUSING = "focusing"
    DEFOCUSING = "defocusing"

    @property
    def factor(self) -> int:
        """Coefficient of |u|^(p-1) u on the right-hand side."""
        return -1 if self is Sign.FOCUSING else 1


class ExtendedRangeWarning(UserWarning):
    """p > 2 lies outside the range where global well-posedness is known."""


@dataclass(frozen=True)
class EquationParams:
    p: float = 2.0
    sign: Sign = Sign.FOCUSING
    s: float = 0.5
    # multiplies the nonlinearity; 0 turns the solver into the free flow (test hook)
    coupling: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign(self.sign))
        if not (self.p > 1 and math.isfinite(self.p)):
            raise ValueError(f"p must be > 1, got {self.p}")
        if self.p >= 5:
            raise ValueError(f"p must be < 5, got {self.p}")
        if not (0.5 <= self.s <= 1.0):
            raise ValueError(f"s must lie in [1/2, 1], got {self.s}")
        if self.p > 2:
            warnings.warn(f"p = {self.p} > 2: no global well-posedness theory backs this run",
                          ExtendedRangeWarning, stacklevel=3)

    @property
    def extended_range(self) -> bool:
        return self.p > 2

    def nonlinearity(self, u: np.ndarray) -> np.ndarray:
        return (self.sign.factor * self.coupling) * np.abs(u) ** (self.p - 1) * u


@dataclass(frozen=True)
class Exponents:
    """Dual Strichartz exponents used by the contraction and blow-up estimates."""

    q_prime: float
    r_prime: float
    q: float
    r: float

    @classmethod
    def for_p(cls, p: float) -> "Exponents":
        if not 1 < p <= 2:
            raise ValueError("exponents are defined for 1 < p <= 2")
        q_prime = 4.0 / (5.0 - p)
        r_prime = 2.0 / p
        q = 4.0 / (p - 1.0)
        r = math.inf if p == 2 else 2.0 / (2.0 - p)
        return cls(q_prime, r_prime, q, r)

    def admissibility_defect(self) -> float:
        return abs(2.0 / self.q + 1.0 / self.r - 0.5)


# ---------------------------------------------------------------------------
# Conserved quantities
# ---------------------------------------------------------------------------


def mass(f: Field) -> float:
    """M(u) = 1/2 int |u|^2."""
    g = f.grid
    return 0.5 * g.area * float(np.sum(np.abs(f.spectral) ** 2))


def _kinetic(grid: GridSpec, c: np.ndarray) -> float:
    w = grid.XI**2 + np.abs(grid.ETA)
    return 0.5 * grid.area * float(np.sum(w * np.abs(c) ** 2))


def potential(f: Field, p: float) -> float:
    """1/(p+1) int |u|^(p+1)."""
    return lp_norm_values(f.values, p + 1.0, f.grid.cell_area) ** (p + 1.0) / (p + 1.0)


def energy(f: Field, params: EquationParams) -> float:
    """H(u) = 1/2(||d_x u||^2 + || |D_y|^(1/2) u ||^2) + sign/(p+1) ||u||_{p+1}^{p+1}."""
    return _kinetic(f.grid, f.spectral) + params.sign.factor * params.coupling * potential(f, params.p)


# ---------------------------------------------------------------------------
# Substeps
# ---------------------------------------------------------------------------


def dispersion(grid: GridSpec) -> np.ndarray:
    """xi^2 + |eta|, the symbol of -(d_x^2 - |D_y|)."""
    return grid.XI**2 + np.abs(grid.ETA)


def linear_propagate(f: Field, t: float) -> Field:
    """Exact linear flow e^{it(d_x^2 - |D_y|)}."""
    if t == 0:
        return f
    return Field.from_spectral(f.grid, f.spectral * np.exp(-1j * t * dispersion(f.grid)))


def _phase_rotate(u: np.ndarray, dt: float, params: EquationParams) -> np.ndarray:
    a = np.abs(u) ** (params.p - 1)
    return u * np.exp((-1j * dt * params.sign.factor * params.coupling) * a)


def _pad(c: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    nx, ny = c.shape
    mx, my = shape
    out = np.zeros(shape, dtype=complex)
    kx = np.r_[0:nx // 2, mx - nx // 2:mx]
    ky = np.r_[0:ny // 2, my - ny // 2:my]
    out[np.ix_(kx, ky)] = c
    return out


def _truncate(c: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    mx, my = c.shape
    nx, ny = shape
    kx = np.r_[0:nx // 2, mx - nx // 2:mx]
    ky = np.r_[0:ny // 2, my - ny // 2:my]
    return c[np.ix_(kx, ky)]


def _nonlinear_spectral(c: np.ndarray, dt: float, params: EquationParams, dealias: bool) -> np.ndarray:
    nx, ny = c.shape
    if not dealias:
        u = ifft2(c) * (nx * ny)
        return fft2(_phase_rotate(u, dt, params)) / (nx * ny)
    big = (3 * nx // 2, 3 * ny // 2)
    n_big = big[0] * big[1]
    u = ifft2(_pad(c, big)) * n_big
    return _truncate(fft2(_phase_rotate(u, dt, params)) / n_big, c.shape)


def nonlinear_step(f: Field, dt: float, params: EquationParams, dealias: bool = False) -> Field:
    """Exact pointwise flow of i u_t = sign |u|^(p-1) u over time dt.

    With ``dealias`` the phase is evaluated on a 3/2 zero-padded grid and
    truncated back, which is no longer exactly unitary.
    """
    if not dealias:
        return Field(f.grid, _phase_rotate(f.values, dt, params))
    return Field.from_spectral(f.grid, _nonlinear_spectral(f.spectral, dt, params, True))


def strang_step(f: Field, dt: float, params: EquationParams, dealias: bool = False) -> Field:
    half = np.exp(-0.5j * dt * dispersion(f.grid))
    c = _nonlinear_spectral(f.spectral * half, dt, params, dealias) * half
    return Field.from_spectral(f.grid, c)


# ---------------------------------------------------------------------------
# Ledger
# ---------------------------------------------------------------------------

LEDGER_COLUMNS = ("t", "mass", "energy", "l2hs", "h1l2", "linf", "N")


class NonFiniteStateError(RuntimeError):
    def __init__(self, step: int, t: float, ledger: "ConservedLedger"):
        super().__init__(f"non-finite values at step {step} (t = {t:.6g})")
        self.step = step
        self.t = t
        self.ledger = ledger


@dataclass
class ConservedLedger:
    """Time series of conserved quantities, anisotropic norms and N(t) = ||u||_{L2 H^s}^{q'}."""

    s: float
    q_prime: float
    rows: list[tuple[float, ...]] = field(default_factory=list)
    aniso_half: list[float] = field(default_factory=list)
    extra: dict[str, list[float]] = field(default_factory=dict)
    blowup_suspected: bool = False
    blowup_time: float | None = None
    max_tail_fraction: float = 0.0

    def record(self, t: float, f: Field, params: EquationParams) -> None:
        g = f.grid
        c = f.spectral
        a2 = np.abs(c) ** 2
        m = 0.5 * g.area * float(a2.sum())
        h = energy(f, params)
        l2hs = math.sqrt(g.area * float(np.sum(L2xHsy(self.s).weight(g) * a2)))
        h1l2 = math.sqrt(g.area * float(np.sum(H1X_L2Y.weight(g) * a2)))
        linf = float(np.max(np.abs(f.values)))
        n = l2hs**self.q_prime
        self.rows.append((float(t), m, h, l2hs, h1l2, linf, n))
        self.aniso_half.append(math.sqrt(g.area * float(np.sum(ANISO_HALF.weight(g) * a2))))
        self.max_tail_fraction = max(self.max_tail_fraction, tail_mass_fraction(f))

    def column(self, name: str) -> np.ndarray:
        if name in self.extra:
            return np.asarray(self.extra[name])
        return np.array([r[LEDGER_COLUMNS.index(name)] for r in self.rows])

    def __len__(self):
        return len(self.rows)

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def relative_mass_drift(self) -> float:
        m = self.column("mass")
        return float(np.max(np.abs(m - m[0])) / m[0]) if m[0] > 0 else float(np.max(np.abs(m)))

    def max_energy_drift(self) -> float:
        e = self.column("energy")
        return float(np.max(np.abs(e - e[0])))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        extra = list(self.extra)
        w.writerow(list(LEDGER_COLUMNS) + extra)
        for i, row in enumerate(self.rows):
            vals = list(row) + [self.extra[k][i] for k in extra]
            w.writerow(["%.17g" % v for v in vals])
        return buf.getvalue()

    def gronwall_diagnostic(self, p: float) -> dict:
        """Fit log N(t) ~ a + b t^alpha with alpha = (5-p)/(7-3p); diagnostic only."""
        t = self.t
        n = self.column("N")
        alpha = (5.0 - p) / (7.0 - 3.0 * p)
        mask = (t > 0) & (n > 0)
        out = {"alpha": alpha, "log_n_max": float(np.log(n.max())) if len(n) else None}
        if mask.sum() < 2:
            out.update(a=None, b=None)
            return out
        A = np.column_stack([np.ones(mask.sum()), np.abs(t[mask]) ** alpha])
        (a, b), *_ = np.linalg.lstsq(A, np.log(n[mask]), rcond=None)
        out.update(a=float(a), b=float(b))
        return out


@dataclass
class EvolveResult:
    final: Field
    ledger: ConservedLedger
    snapshots: list[tuple[float, Field]]
    steps: int

    @property
    def blowup_suspected(self) -> bool:
        return self.ledger.blowup_suspected


def _step_count(T: float, dt: float) -> int:
    if T == 0:
        return 0
    if dt == 0 or not math.isfinite(dt):
        raise ValueError("dt must be finite and nonzero")
    n = round(T / dt)
    if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"dt = {dt} does not divide T = {T}")
    return int(n)


def evolve(
    u0: Field,
    params: EquationParams,
    T: float,
    dt: float,
    sample_every: int = 1,
    *,
    snapshot_every: int | None = None,
    blowup_ceiling: float = 1e12,
    dealias: bool = False,
    on_sample: Callable[[float, Field], None] | None = None,
    tail_tolerance: float = 1e-8,
) -> EvolveResult:
    """Advance ``u0`` to time ``T`` with Strang steps of size ``dt``.

    ``T`` and ``dt`` may both be negative (backward run).  The ledger is
    sampled every ``sample_every`` steps and at the final time; ``on_sample``
    is called with every sampled state.  A ledger value N(t) above
    ``blowup_ceiling`` sets the blow-up flag and stops the run.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    nsteps = _step_count(T, dt)
    grid = u0.grid
    ledger = ConservedLedger(s=params.s, q_prime=4.0 / (5.0 - params.p))
    snapshots: list[tuple[float, Field]] = []
    snap_every = snapshot_every

    def sample(k: int, f: Field) -> bool:
        t = k * dt
        ledger.record(t, f, params)
        if on_sample is not None:
            on_sample(t, f)
        if snap_every and k % snap_every == 0:
            snapshots.append((t, f))
        if ledger.rows[-1][6] > blowup_ceiling:
            ledger.blowup_suspected = True
            ledger.blowup_time = t
            log.warning("N(t) = %.3g exceeds ceiling at t = %.6g", ledger.rows[-1][6], t)
            return False
        return True

    f = u0
    if not sample(0, f) or nsteps == 0:
        return EvolveResult(f, ledger, snapshots, 0)

    omega = dispersion(grid)
    half = np.exp(-0.5j * dt * omega)
    full = half * half
    c = np.array(u0.spectral)
    k = 0
    boundaries = sorted(set(range(sample_every, nsteps + 1, sample_every)) | {nsteps})
    if snap_every:
        boundaries = sorted(set(boundaries) | set(range(snap_every, nsteps + 1, snap_every)))
    for stop in boundaries:
        c = c * half
        while k < stop:
            c = _nonlinear_spectral(c, dt, params, dealias)
            k += 1
            c = c * (full if k < stop else half)
        if not np.all(np.isfinite(c)):
            raise NonFiniteStateError(k, k * dt, ledger)
        f = Field.from_spectral(grid, c)
        if k % sample_every == 0 or k == nsteps or (snap_every and k % snap_every == 0):
            if not sample(k, f):
                break
    if ledger.max_tail_fraction > tail_tolerance:
        log.warning("tail mass fraction %.3g exceeds %.1g; increase lx", ledger.max_tail_fraction, tail_tolerance)
    return EvolveResult(f, ledger, snapshots, k)


# ---------------------------------------------------------------------------
# Scaling symmetry
# ---------------------------------------------------------------------------


def resample(f: Field, target: GridSpec) -> Field:
    """Trigonometric interpolation of ``f`` onto a grid covering the same domain."""
    g = f.grid
    if target == g:
        return f
    if (target.y_domain != g.y_domain or not math.isclose(target.lx, g.lx, rel_tol=1e-12)
            or not math.isclose(target.ly, g.ly, rel_tol=1e-12)):
        raise ValueError("target grid does not cover the same domain")
    c = f.spectral
    if target.nx >= g.nx and target.ny >= g.ny:
        c2 = _pad(c, target.shape)
    elif target.nx <= g.nx and target.ny <= g.ny:
        c2 = _truncate(c, target.shape)
    else:
        c2 = _truncate(_pad(c, (max(g.nx, target.nx), max(g.ny, target.ny))), target.shape)
    return Field.from_spectral(target, c2)


def scaling_transform(f: Field, lam: float, params: EquationParams, target: GridSpec | None = None) -> Field:
    """u -> lam^(2/(p-1)) u(lam x, lam^2 y) on the correspondingly shrunk truncated-plane grid.

    Samples map one-to-one onto the grid with lengths lx/lam, ly/lam^2; a
    ``target`` grid must cover exactly that domain (any resolution).
    """
    if f.grid.y_domain is YDomain.TORUS:
        raise ValueError("scaling breaks 2*pi periodicity; use a truncated y-domain")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    scaled_grid = f.grid.scaled(1.0 / lam, 1.0 / lam**2)
    out = Field(scaled_grid, lam ** (2.0 / (params.p - 1.0)) * f.values)
    if target is None:
        return out
    try:
        return resample(out, target)
    except ValueError as exc:
        raise ValueError(f"target grid is not commensurate with the scaled domain: {exc}") from None


# ---------------------------------------------------------------------------
# A-priori bound in the focusing case
# ---------------------------------------------------------------------------


def apriori_constant(p: float, l6_embedding_constant: float) -> float:
    """C in (1/(p+1))||u||_{p+1}^{p+1} <= C ||u||_2^{(5-p)/2} ||u||_H^{3(p-1)/2}."""
    return l6_embedding_constant ** (1.5 * (p - 1.0)) / (p + 1.0)


def apriori_bound(u0: Field, params: EquationParams, l6_embedding_constant: float) -> float:
    """Largest B with 1/2 B^2 - C ||u0||_2^{(5-p)/2} B^{3(p-1)/2} <= H(u0) + ||u0||_2^2.

    B bounds ||u(t)||_{AnisoH^{1/2}} along the focusing flow; the extra
    ||u0||_2^2 accounts for the L2 part of the realised energy-space norm.
    """
    if params.sign is not Sign.FOCUSING:
        raise ValueError("a-priori bound is for the focusing equation")
    p = params.p
    if not 1 < p < 7.0 / 3.0:
        raise ValueError("a-priori bound needs 1 < p < 7/3")
    C = apriori_constant(p, l6_embedding_constant)
    l2 = math.sqrt(2.0 * mass(u0))
    rhs = energy(u0, params) + l2**2
    a = C * l2 ** ((5.0 - p) / 2.0)
    b = 1.5 * (p - 1.0)

    def phi(B):
        return 0.5 * B * B - a * B**b - rhs

    # phi decreases up to its minimiser B_min and increases after it
    b_min = (a * b) ** (1.0 / (2.0 - b)) if a > 0 else 0.0
    hi = max(1.0, 2.0 * b_min)
    while phi(hi) <= 0:
        hi *= 2.0
    return brentq(phi, b_min, hi, xtol=1e-14, rtol=1e-14)
