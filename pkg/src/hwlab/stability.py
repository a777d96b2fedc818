"""
Distance to the orbit {e^{i theta} Q(x + x1, y + y1)} and orbital-stability runs.

For lattice shifts the weighted cross-correlation

    G(a, b) = <u, Q(. + a, . + b)>_w = lx ly sum w u_hat conj(Q_hat) e^{-i(xi a + eta b)}

is one unnormalised forward FFT of w u_hat conj(Q_hat), so every shift is
scored at once; ||u - e^{i theta} tau Q||^2 = ||u||^2 + ||Q||^2 - 2 Re(e^{-i theta} G)
is minimised by theta = arg G at the argmax of |G|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import EquationParams, Sign, evolve
from .grid import ANISO_HALF, Field, NormKind, fft2, inner_product, norm
from .groundstate import GroundState


@dataclass(frozen=True)
class OrbitDistanceResult:
    distance: float
    best_shift: tuple[float, float]  # grid cells, may be fractional after refinement
    best_phase: float
    g_max: float


def translate(Q: Field, sx: float, sy: float) -> Field:
    """Q(x + sx*dx, y + sy*dy) by a spectral phase; exact for lattice shifts."""
    g = Q.grid
    phase = np.exp(1j * (g.XI * sx * g.dx + g.ETA * sy * g.dy))
    return Field.from_spectral(g, Q.spectral * phase)


def _signed(i: int, n: int) -> int:
    return i - n if i >= n // 2 else i


def _parabola_vertex(fm: float, f0: float, fp: float) -> float:
    den = fm - 2.0 * f0 + fp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (fm - fp) / den, -0.5, 0.5))


def orbit_distance(u: Field, Q: Field, kind: NormKind = ANISO_HALF, refine: bool = True) -> OrbitDistanceResult:
    """Distance from ``u`` to the phase/translation orbit of ``Q`` in the ``kind`` metric.

    The lattice argmax of |G| is refined by one Newton step on a quadratic
    fit in each direction; the refined shift is kept only when it lowers the
    distance.  The distance itself is evaluated directly at the chosen
    element to avoid cancellation in ||u||^2 + ||Q||^2 - 2|G|.
    """
    if u.grid != Q.grid:
        raise ValueError("fields live on different grids")
    g = u.grid
    w = kind.weight(g)
    G = g.area * fft2(w * u.spectral * np.conj(Q.spectral))
    aG = np.abs(G)
    i, j = np.unravel_index(int(np.argmax(aG)), aG.shape)
    shift = (float(_signed(i, g.nx)), float(_signed(j, g.ny)))
    best_val = complex(G[i, j])
    cand = translate(Q, *shift)
    phase = math.atan2(best_val.imag, best_val.real)
    dist = norm(u - cand * np.exp(1j * phase), kind)

    if refine:
        fx = _parabola_vertex(aG[(i - 1) % g.nx, j], aG[i, j], aG[(i + 1) % g.nx, j])
        fy = _parabola_vertex(aG[i, (j - 1) % g.ny], aG[i, j], aG[i, (j + 1) % g.ny])
        if fx or fy:
            rshift = (shift[0] + fx, shift[1] + fy)
            rc = translate(Q, *rshift)
            val = inner_product(u, rc, kind)
            rphase = math.atan2(val.imag, val.real)
            rdist = norm(u - rc * np.exp(1j * rphase), kind)
            if rdist < dist:
                shift, best_val, phase, dist = rshift, val, rphase, rdist

    phase %= 2.0 * math.pi
    if 2.0 * math.pi - phase < 1e-12:
        phase = 0.0
    return OrbitDistanceResult(dist, shift, phase, abs(best_val))


@dataclass
class StabilityResult:
    times: np.ndarray
    distances: np.ndarray
    ledger: object

    @property
    def max_distance(self) -> float:
        return float(np.max(self.distances))


def stability_experiment(
    Q: GroundState,
    perturbation: Field,
    params: EquationParams,
    T: float,
    dt: float,
    sample_every: int = 100,
) -> StabilityResult:
    """Evolve Q + perturbation and record its orbit distance to Q on the ledger cadence.

    The distances are also stored in the ledger as the ``orbit_dist`` column.
    """
    if params.sign is not Sign.FOCUSING:
        raise ValueError("orbital stability concerns the focusing equation")
    profile = Q.profile
    times, dists = [], []

    def observe(t, f):
        times.append(t)
        dists.append(orbit_distance(f, profile).distance)

    res = evolve(profile + perturbation, params, T, dt, sample_every, on_sample=observe)
    res.ledger.extra["orbit_dist"] = list(dists)
    return StabilityResult(np.array(times), np.array(dists), res.ledger)
