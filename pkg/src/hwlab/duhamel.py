"""
Picard iteration of the Duhamel map on a short time interval.

    Phi(u)(t) = e^{itL} u0 - i int_0^t e^{i(t-t')L} N(u(t')) dt',
    L = d_x^2 - |D_y|,  N(u) = sign |u|^(p-1) u.

The integral is evaluated in the interaction picture: with E(t) the Fourier
multiplier exp(-it(xi^2 + |eta|)), Phi(u)(t) = E(t)[u0_hat - i int_0^t
E(-t') N_hat(t') dt'], and the smooth integrand is accumulated with the
composite trapezoid rule over the nodes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EquationParams, dispersion
from .grid import AnisoHs, Field, GridSpec, NormKind, fft2, ifft2

log = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """Node values u(t_j), t_j = j T / M, stored as an (M+1, nx, ny) array."""

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (len(self.times),) + self.grid.shape:
            raise ValueError("trajectory values do not match times x grid")
        if self.times[0] != 0:
            raise ValueError("trajectory must start at t = 0")
        if len(self.times) > 2:
            h = np.diff(self.times)
            if np.max(np.abs(h - h[0])) > 1e-12 * max(abs(h[0]), 1.0):
                raise ValueError("trajectory nodes must be equally spaced")

    @classmethod
    def uniform(cls, grid: GridSpec, T: float, M: int, values: np.ndarray) -> "Trajectory":
        return cls(grid, np.linspace(0.0, T, M + 1), values)

    def __getitem__(self, j: int) -> Field:
        return Field(self.grid, self.values[j])

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> Field:
        return self[-1]


def xt_norm(values: np.ndarray, grid: GridSpec, kind: NormKind) -> float:
    """max over nodes of the ``kind`` norm."""
    n = grid.nx * grid.ny
    c = fft2(values) / n
    w = kind.weight(grid)
    per_node = grid.area * np.sum(w * np.abs(c) ** 2, axis=(-2, -1))
    return float(np.sqrt(np.max(per_node)))


def free_trajectory(u0: Field, T: float, M: int) -> Trajectory:
    g = u0.grid
    times = np.linspace(0.0, T, M + 1)
    E = np.exp(-1j * times[:, None, None] * dispersion(g)[None])
    return Trajectory(g, times, ifft2(E * u0.spectral[None]) * (g.nx * g.ny))


def apply_phi(traj: Trajectory, u0: Field, params: EquationParams) -> Trajectory:
    """One application of the Duhamel map at the trajectory nodes."""
    g = traj.grid
    if u0.grid != g:
        raise ValueError("u0 and trajectory live on different grids")
    if not np.all(np.isfinite(traj.values)):
        raise ValueError("trajectory contains NaN or Inf")
    n = g.nx * g.ny
    t = traj.times
    omega = dispersion(g)
    nl = params.nonlinearity(traj.values)
    integrand = np.exp(1j * t[:, None, None] * omega[None]) * (fft2(nl) / n)
    acc = np.zeros_like(integrand)
    if len(t) > 1:
        h = np.diff(t)[:, None, None]
        acc[1:] = np.cumsum(0.5 * h * (integrand[1:] + integrand[:-1]), axis=0)
    w_hat = u0.spectral[None] - 1j * acc
    out = ifft2(np.exp(-1j * t[:, None, None] * omega[None]) * w_hat) * n
    return Trajectory(g, t, out)


@dataclass
class ContractionReport:
    differences: list[float]
    ratio: float
    converged: bool
    diverged: bool
    iterations: int
    trajectory: Trajectory = field(repr=False)

    def summary(self) -> dict:
        return {
            "differences": self.differences,
            "ratio": self.ratio,
            "converged": self.converged,
            "diverged": self.diverged,
            "iterations": self.iterations,
        }


def picard_solve(
    u0: Field,
    params: EquationParams,
    T: float,
    M: int = 32,
    max_iter: int = 50,
    tol: float = 1e-13,
    s: float | None = None,
) -> ContractionReport:
    """Iterate traj <- Phi(traj) from the free flow until the X_T step is <= ``tol``.

    X_T is the max over nodes of the AnisoHs(s) norm (s defaults to
    ``params.s``).  The reported ratio is the median of d_{k+1}/d_k over
    steps that are still above the roundoff floor.  Three consecutive
    increases of d_k mark divergence; it is reported, not raised.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if M < 8:
        raise ValueError("need at least M = 8 intervals")
    kind = AnisoHs(params.s if s is None else s)
    g = u0.grid
    traj = free_trajectory(u0, T, M)
    floor = 1e3 * np.finfo(float).eps * max(xt_norm(traj.values, g, kind), np.finfo(float).tiny)
    diffs: list[float] = []
    converged = diverged = False
    increases = 0
    for _ in range(max_iter):
        new = apply_phi(traj, u0, params)
        d = xt_norm(new.values - traj.values, g, kind)
        diffs.append(d)
        traj = new
        if d <= tol:
            converged = True
            break
        if len(diffs) > 1 and d > diffs[-2]:
            increases += 1
            if increases >= 3:
                diverged = True
                log.warning("Picard iteration diverging: d_k = %s", diffs[-4:])
                break
        else:
            increases = 0
    ratios = [b / a for a, b in zip(diffs[:-1], diffs[1:]) if a > floor and b > floor]
    ratio = float(np.median(ratios)) if ratios else 0.0
    return ContractionReport(diffs, ratio, converged, diverged, len(diffs), traj)


def residual(report: ContractionReport, u0: Field, params: EquationParams, s: float | None = None) -> float:
    """||Phi(u*) - u*||_{X_T} for the returned trajectory."""
    kind = AnisoHs(params.s if s is None else s)
    traj = report.trajectory
    return xt_norm(apply_phi(traj, u0, params).values - traj.values, traj.grid, kind)
