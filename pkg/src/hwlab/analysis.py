"""
Empirical checks of the functional inequalities behind the well-posedness theory.

Inequalities with an exact constant (the Hölder interpolation chain) are
checked directly.  Inequalities with an unknown constant use a
calibrate/holdout protocol: the largest ratio LHS/RHS over a seeded
calibration ensemble gives C_cal, and the check passes when a fresh holdout
ensemble stays below ``margin * C_cal`` (margin 1.5).

H^s norms with s < 1 are the spectral <xi>^{2s} norms; they are equivalent
to the difference-quotient norms used in the classical proofs.  Every ratio
is homogeneous of degree zero in the sample amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft
from scipy.integrate import trapezoid

from . import rng
from .dynamics import dispersion
from .grid import GridSpec, fft2, ifft2

HOLDOUT_STREAM = 0x5EED_0F_401D


@dataclass(frozen=True)
class BandLimited:
    cutoff_xi: float
    cutoff_eta: float


@dataclass(frozen=True)
class PowerLawDecay:
    alpha: float


Spectrum = Union[BandLimited, PowerLawDecay]


@dataclass(frozen=True)
class Ensemble:
    """``count`` random fields whose i-th member is drawn from stream derive_seed(seed, i)."""

    seed: int
    count: int
    spectrum: Spectrum
    grid: GridSpec
    amplitude: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("ensemble needs at least one sample")

    def holdout(self) -> "Ensemble":
        return replace(self, seed=rng.derive_seed(self.seed, HOLDOUT_STREAM))

    def _envelope(self, xi: np.ndarray, eta: np.ndarray | float) -> np.ndarray:
        sp = self.spectrum
        if isinstance(sp, BandLimited):
            return ((np.abs(xi) <= sp.cutoff_xi) & (np.abs(eta) <= sp.cutoff_eta)).astype(float)
        return (1.0 + xi**2 + eta**2) ** (-0.5 * sp.alpha)

    def coefficients(self) -> np.ndarray:
        """Spectral coefficients, shape (count, nx, ny)."""
        g = self.grid
        env = self._envelope(g.XI, g.ETA)
        out = np.empty((self.count,) + g.shape, dtype=complex)
        for i in range(self.count):
            out[i] = self.amplitude * env * rng.complex_normal(rng.derive_seed(self.seed, i), g.shape)
        return out

    def fields(self) -> np.ndarray:
        """Physical samples, shape (count, nx, ny)."""
        g = self.grid
        return ifft2(self.coefficients()) * (g.nx * g.ny)

    def profiles_1d(self) -> np.ndarray:
        """1D samples on the x-grid, shape (count, nx)."""
        g = self.grid
        env = self._envelope(g.xi, 0.0)
        out = np.empty((self.count, g.nx), dtype=complex)
        for i in range(self.count):
            c = self.amplitude * env * rng.complex_normal(rng.derive_seed(self.seed, i), (g.nx,))
            out[i] = sfft.ifft(c) * g.nx
        return out


@dataclass
class RatioReport:
    id: str
    c_cal: float
    holdout_max: float
    passed: bool
    worst_index: int
    params: dict = field(default_factory=dict)
    margin: float = 1.5
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "C_cal": self.c_cal,
            "holdout_max": self.holdout_max,
            "pass": self.passed,
            "worst_seed_index": self.worst_index,
            "params": self.params,
        }
        if self.extras:
            d["extras"] = self.extras
        return d


def _protocol(name: str, ratios: Callable[[Ensemble], np.ndarray], ens: Ensemble, params: dict,
              margin: float = 1.5) -> RatioReport:
    cal = np.asarray(ratios(ens))
    hold = np.asarray(ratios(ens.holdout()))
    for arr in (cal, hold):
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise FloatingPointError(f"{name}: non-positive or non-finite ratio")
    c_cal = float(cal.max())
    worst = int(np.argmax(hold))
    h = float(hold[worst])
    return RatioReport(name, c_cal, h, h <= margin * c_cal, worst, params, margin)


# ---------------------------------------------------------------------------
# 1D helpers (x-direction of the grid, periodic on [-lx/2, lx/2))
# ---------------------------------------------------------------------------


def _xi(grid: GridSpec) -> np.ndarray:
    return grid.xi


def sobolev_1d(f: np.ndarray, grid: GridSpec, s: float) -> np.ndarray:
    """H^s(R) norm with weight <xi>^{2s}; f has shape (..., nx)."""
    c = sfft.fft(f, axis=-1) / grid.nx
    w = (1.0 + _xi(grid) ** 2) ** s
    return np.sqrt(grid.lx * np.sum(w * np.abs(c) ** 2, axis=-1))


def lebesgue_1d(f: np.ndarray, grid: GridSpec, k: float) -> np.ndarray:
    a = np.abs(f)
    if math.isinf(k):
        return a.max(axis=-1)
    amax = a.max(axis=-1, keepdims=True)
    safe = np.where(amax > 0, amax, 1.0)
    return safe[..., 0] * (np.sum((a / safe) ** k, axis=-1) * grid.dx) ** (1.0 / k)


def _lebesgue_2d(u: np.ndarray, grid: GridSpec, k: float) -> np.ndarray:
    a = np.abs(u).reshape(u.shape[0], -1)
    if math.isinf(k):
        return a.max(axis=-1)
    amax = a.max(axis=-1, keepdims=True)
    return amax[:, 0] * (np.sum((a / amax) ** k, axis=-1) * grid.cell_area) ** (1.0 / k)


def _weighted_2d(c: np.ndarray, grid: GridSpec, w: np.ndarray) -> np.ndarray:
    return np.sqrt(grid.area * np.sum(w * np.abs(c) ** 2, axis=(-2, -1)))


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def brezis_gallouet_ratios(c: np.ndarray, grid: GridSpec, s: float, variant: str = "cylinder") -> np.ndarray:
    """LHS/RHS of the logarithmic L^infty-type bound for each coefficient array in ``c``.

    cylinder: sum_eta ||v_eta||_{L2_x} against ||v||_{L2 H^1/2_y} sqrt(log(1 + ||v||_{L2 H^s_y}/||v||_{L2 H^1/2_y})),
    with counting measure in eta (unit weights).
    2d: sum |v_hat| against ||v||_{H^1} sqrt(log(1 + ||v||_{H^s}/||v||_{H^1})), s > 1.
    """
    eta2 = grid.ETA**2
    if variant == "cylinder":
        lhs = np.sum(np.sqrt(grid.lx * np.sum(np.abs(c) ** 2, axis=-2)), axis=-1)
        low = _weighted_2d(c, grid, (1.0 + eta2) ** 0.5)
        high = _weighted_2d(c, grid, (1.0 + eta2) ** s)
    elif variant == "2d":
        lhs = np.sum(np.abs(c), axis=(-2, -1))
        full = 1.0 + grid.XI**2 + eta2
        low = _weighted_2d(c, grid, full)
        high = _weighted_2d(c, grid, full**s)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return lhs / (low * np.sqrt(np.log1p(high / low)))


def check_brezis_gallouet(ens: Ensemble, s: float, variant: str = "cylinder", margin: float = 1.5) -> RatioReport:
    if variant == "cylinder" and not s > 0.5:
        raise ValueError("need s > 1/2")
    if variant == "2d" and not s > 1.0:
        raise ValueError("2d variant needs s > 1")

    def ratios(e: Ensemble):
        c = e.coefficients()
        keep = np.any(c != 0, axis=(-2, -1))
        return brezis_gallouet_ratios(c[keep], e.grid, s, variant)

    return _protocol(f"brezis_gallouet_{variant}", ratios, ens, {"s": s, "variant": variant}, margin)


def trudinger_ratios(f: np.ndarray, grid: GridSpec, k_values) -> np.ndarray:
    """ratio[i, j] = ||f_i||_{L^k_j} / (sqrt(k_j) ||f_i||_{H^1/2})."""
    h = sobolev_1d(f, grid, 0.5)
    return np.stack([lebesgue_1d(f, grid, k) / (math.sqrt(k) * h) for k in k_values], axis=-1)


def _check_k(k_values) -> list[int]:
    ks = list(k_values)
    if not ks:
        raise ValueError("need at least one k")
    for k in ks:
        if int(k) != k or not 4 <= k <= 64:
            raise ValueError(f"k must be an integer in [4, 64] (the bound needs k > 2), got {k}")
    return [int(k) for k in ks]


def check_trudinger(ens: Ensemble, k_values=(4, 8, 16, 32, 64), margin: float = 1.5) -> RatioReport:
    ks = _check_k(k_values)

    def ratios(e: Ensemble):
        return trudinger_ratios(e.profiles_1d(), e.grid, ks).max(axis=-1)

    return _protocol("trudinger", ratios, ens, {"k_values": ks}, margin)


def strichartz_admissible(q: float, r: float) -> bool:
    return q > 2 and abs(2.0 / q + 1.0 / r - 0.5) <= 1e-12


def strichartz_ratios(c0: np.ndarray, grid: GridSpec, q: float, r: float, T: float = 1.0, nodes: int = 64) -> np.ndarray:
    """||e^{itL} u0||_{L^q([0,T]; L^r_x L^2_y)} / ||u0||_{L2} for each coefficient array in ``c0``.

    The time integral is a composite trapezoid over ``nodes`` intervals.
    """
    if not strichartz_admissible(q, r):
        raise ValueError(f"pair ({q}, {r}) is not admissible: need 2/q + 1/r = 1/2 and q > 2")
    if nodes < 64:
        raise ValueError("need at least 64 time intervals")
    times = np.linspace(0.0, T, nodes + 1)
    omega = dispersion(grid)
    n = grid.nx * grid.ny
    out = np.empty(len(c0))
    for i, c in enumerate(c0):
        u = ifft2(np.exp(-1j * times[:, None, None] * omega[None]) * c[None]) * n
        gx = np.sqrt(np.sum(np.abs(u) ** 2, axis=-1) * grid.dy)  # (nt, nx)
        fx = lebesgue_1d(gx, grid, r)
        mixed = trapezoid(fx**q, times) ** (1.0 / q)
        out[i] = mixed / math.sqrt(grid.area * float(np.sum(np.abs(c) ** 2)))
    return out


def check_strichartz(ens: Ensemble, pair=(4.0, math.inf), T: float = 1.0, nodes: int = 64,
                     margin: float = 1.5) -> RatioReport:
    q, r = float(pair[0]), float(pair[1])
    if not strichartz_admissible(q, r):
        raise ValueError(f"pair ({q}, {r}) is not admissible: need 2/q + 1/r = 1/2 and q > 2")

    def ratios(e: Ensemble):
        return strichartz_ratios(e.coefficients(), e.grid, q, r, T, nodes)

    rname = "inf" if math.isinf(r) else f"{r:g}"
    return _protocol(f"strichartz_{q:g}_{rname}", ratios, ens, {"q": q, "r": r, "T": T, "nodes": nodes}, margin)


def nonlinearity_sobolev_ratios(f: np.ndarray, grid: GridSpec, s: float, p: float) -> np.ndarray:
    """|| |f|^(p-1) f ||_{H^s} / (||f||_inf^(p-1) ||f||_{H^s}) for 1D samples."""
    F = np.abs(f) ** (p - 1) * f
    return sobolev_1d(F, grid, s) / (lebesgue_1d(f, grid, math.inf) ** (p - 1) * sobolev_1d(f, grid, s))


def check_nonlinearity_sobolev(ens: Ensemble, s: float, p: float, margin: float = 1.5) -> RatioReport:
    if not 0 < s <= 1:
        raise ValueError("need 0 < s <= 1")
    if not p > 1:
        raise ValueError("need p > 1")

    def ratios(e: Ensemble):
        f = e.profiles_1d()
        f = f[np.any(f != 0, axis=-1)]
        return nonlinearity_sobolev_ratios(f, e.grid, s, p)

    return _protocol("nonlinearity_sobolev", ratios, ens, {"s": s, "p": p}, margin)


def quadratic_h2_ratios(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """|| |g| g ||_{H^2(R^2)} / (||g||_inf ||g||_{H^2}) for 2D samples."""
    n = grid.nx * grid.ny
    w = (1.0 + grid.XI**2 + grid.ETA**2) ** 2
    G = np.abs(u) * u
    num = _weighted_2d(fft2(G) / n, grid, w)
    den = _lebesgue_2d(u, grid, math.inf) * _weighted_2d(fft2(u) / n, grid, w)
    return num / den


def check_quadratic_h2(ens: Ensemble, margin: float = 1.5) -> RatioReport:
    def ratios(e: Ensemble):
        return quadratic_h2_ratios(e.fields(), e.grid)

    return _protocol("quadratic_h2", ratios, ens, {}, margin)


def holder_exponents(p: float) -> tuple[float, float]:
    return 3.0 / (p + 1.0) - 0.5, 1.5 - 3.0 / (p + 1.0)


def holder_ratios(u: np.ndarray, grid: GridSpec, p: float) -> np.ndarray:
    """||u||_{p+1} / (||u||_2^a ||u||_6^b); at most 1 by Hölder."""
    a, b = holder_exponents(p)
    return _lebesgue_2d(u, grid, p + 1.0) / (_lebesgue_2d(u, grid, 2.0) ** a * _lebesgue_2d(u, grid, 6.0) ** b)


def embedding_ratios(c: np.ndarray, u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """||u||_{L^6} / ||u||_{AnisoH^1/2}."""
    w = 1.0 + grid.XI**2 + np.sqrt(1.0 + grid.ETA**2)
    return _lebesgue_2d(u, grid, 6.0) / _weighted_2d(c, grid, w)


def check_apriori_interpolation(ens: Ensemble, p: float, margin: float = 1.5) -> RatioReport:
    """Hölder chain (constant 1, asserted directly) plus the L^6 embedding under the protocol."""
    if not 1 < p <= 2:
        raise ValueError("need 1 < p <= 2")
    holder_max = []

    def ratios(e: Ensemble):
        c = e.coefficients()
        u = ifft2(c) * (e.grid.nx * e.grid.ny)
        holder_max.append(float(holder_ratios(u, e.grid, p).max()))
        return embedding_ratios(c, u, e.grid)

    rep = _protocol("apriori_l6_embedding", ratios, ens, {"p": p}, margin)
    rep.extras["holder_max"] = max(holder_max)
    rep.passed = rep.passed and rep.extras["holder_max"] <= 1.0 + 1e-10
    return rep


def run_inequality_suite(grid: GridSpec, seed: int, count: int = 64, p: float = 2.0, s: float = 1.0,
                         margin: float = 1.5) -> list[RatioReport]:
    """Every inequality check on band-limited ensembles of ``count`` samples."""
    band = BandLimited(cutoff_xi=0.25 * float(np.max(grid.xi)), cutoff_eta=0.25 * float(np.max(grid.eta)))
    ens = Ensemble(seed, count, band, grid)
    reports = [
        check_brezis_gallouet(ens, s if s > 0.5 else 1.0, margin=margin),
        check_trudinger(ens, margin=margin),
        check_strichartz(ens, (4.0, math.inf), margin=margin),
        check_strichartz(ens, (8.0, 4.0), margin=margin),
        check_nonlinearity_sobolev(ens, s, p, margin=margin),
        check_quadratic_h2(ens, margin=margin),
        check_apriori_interpolation(ens, p, margin=margin),
    ]
    return reports
