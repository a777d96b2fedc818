"""
Ground states of  -Q_xx + |D_y| Q + omega Q - |Q|^(p-1) Q = 0.

Line solitons are available in closed form.  General minimisers of H_- at
fixed mass come from a normalised imaginary-time gradient flow that is
backward Euler in the linear part and explicit in the nonlinearity.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EquationParams, Sign, energy, mass, potential, resample
from .grid import Field, GridSpec, YDomain, fft2, ifft2

log = logging.getLogger(__name__)


class Source(str, enum.Enum):
    LINE_SOLITON_FORMULA = "LineSolitonFormula"
    GRADIENT_FLOW = "GradientFlow"


@dataclass
class GroundState:
    profile: Field
    omega: float
    residual_l2: float
    eta: float
    iterations: int
    source: Source
    converged: bool = True
    energies: list[float] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "omega": self.omega,
            "eta": self.eta,
            "residual_l2": self.residual_l2,
            "iterations": self.iterations,
            "source": self.source.value,
        }


def line_soliton_profile(x: np.ndarray, omega: float, p: float) -> np.ndarray:
    """R_omega(x) = ((p+1) omega / 2)^(1/(p-1)) sech^(2/(p-1))((p-1) sqrt(omega) x / 2)."""
    amp = ((p + 1.0) * omega / 2.0) ** (1.0 / (p - 1.0))
    z = np.abs(0.5 * (p - 1.0) * math.sqrt(omega) * np.asarray(x, dtype=float))
    sech = 2.0 * np.exp(-z) / (1.0 + np.exp(-2.0 * z))
    return amp * sech ** (2.0 / (p - 1.0))


def line_soliton(omega: float, params: EquationParams, grid: GridSpec) -> Field:
    """The y-independent line soliton sampled on a torus grid."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if grid.y_domain is not YDomain.TORUS:
        raise ValueError("line solitons are y-independent and need the torus y-domain")
    r = line_soliton_profile(grid.x, omega, params.p)
    return Field(grid, np.repeat(r[:, None], grid.ny, axis=1))


def line_soliton_mass(omega: float, params: EquationParams, ly: float = 2.0 * math.pi) -> float:
    """Mass of R_omega on R x T computed by quadrature of the 1D profile."""
    from scipy.integrate import quad

    val, _ = quad(lambda x: line_soliton_profile(np.array(x), omega, params.p) ** 2, -np.inf, np.inf,
                  epsabs=0, epsrel=1e-13, limit=200)
    return 0.5 * ly * val


def _elliptic_operator(c: np.ndarray, grid: GridSpec, omega: float) -> np.ndarray:
    return (grid.XI**2 + np.abs(grid.ETA) + omega) * c


def elliptic_residual_field(Q: Field, omega: float, params: EquationParams) -> Field:
    g = Q.grid
    lin = ifft2(_elliptic_operator(Q.spectral, g, omega)) * (g.nx * g.ny)
    return Field(g, lin - np.abs(Q.values) ** (params.p - 1) * Q.values)


def elliptic_residual(Q: Field, omega: float, params: EquationParams) -> float:
    """L2 norm of -Q_xx + |D_y| Q + omega Q - |Q|^(p-1) Q."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    r = elliptic_residual_field(Q, omega, params)
    return math.sqrt(float(np.sum(np.abs(r.values) ** 2)) * Q.grid.cell_area)


def energy_functional_Ew(v: Field, omega: float, params: EquationParams) -> float:
    """E_omega(v) = 1/2||v_x||^2 + 1/2|| |D_y|^(1/2) v ||^2 + omega/2 ||v||^2 - ||v||_{p+1}^{p+1}/(p+1)."""
    g = v.grid
    a2 = np.abs(v.spectral) ** 2
    dx2 = g.area * float(np.sum(g.XI**2 * a2))
    dy = g.area * float(np.sum(np.abs(g.ETA) * a2))
    l2 = g.area * float(np.sum(a2))
    return 0.5 * dx2 + 0.5 * dy + 0.5 * omega * l2 - potential(v, params.p)


def lagrange_multiplier(v: Field, params: EquationParams) -> float:
    """omega making <grad H_-(v) + omega v, v> = 0."""
    g = v.grid
    a2 = np.abs(v.spectral) ** 2
    l2 = g.area * float(np.sum(a2))
    kin = g.area * float(np.sum((g.XI**2 + np.abs(g.ETA)) * a2))
    return ((params.p + 1.0) * potential(v, params.p) - kin) / l2


def gradient_flow(
    initial: Field,
    eta: float,
    params: EquationParams,
    dt: float = 2.0,
    tol: float = 1e-9,
    max_iter: int = 5000,
) -> GroundState:
    """Minimise H_- on {M = eta} by a normalised semi-implicit gradient flow.

    Each step solves (1 + dt(-d_x^2 + |D_y| + omega_n)) v* = v + dt |v|^(p-1) v
    spectrally, with omega_n the current Lagrange multiplier, then rescales v*
    to mass ``eta``.  Including omega_n makes solutions of the elliptic
    equation exact fixed points.  Stops once the elliptic residual at the
    extracted omega is <= ``tol``; on ``max_iter`` exhaustion the best
    iterate is returned with ``converged=False``.
    """
    if params.sign is not Sign.FOCUSING:
        raise ValueError("the constrained minimisation has no nontrivial minimiser for the defocusing sign")
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    g = initial.grid
    m0 = mass(initial)
    if m0 == 0:
        raise ValueError("initial guess must be nonzero")
    n_tot = g.nx * g.ny
    lin = g.XI**2 + np.abs(g.ETA)
    v = initial * math.sqrt(eta / m0)
    energies = [energy(v, params)]
    best = (math.inf, v, 0.0)
    for it in range(max_iter + 1):
        omega = lagrange_multiplier(v, params)
        res = elliptic_residual(v, omega, params) if omega > 0 else math.inf
        if res < best[0]:
            best = (res, v, omega)
        if res <= tol:
            return GroundState(v, omega, res, eta, it, Source.GRADIENT_FLOW, True, energies)
        if it == max_iter:
            break
        u = v.values
        rhs = fft2(u + dt * np.abs(u) ** (params.p - 1) * u) / n_tot
        shift = max(omega, 0.0)
        c = rhs / (1.0 + dt * (lin + shift))
        c *= math.sqrt(eta / (0.5 * g.area * float(np.sum(np.abs(c) ** 2))))
        v = Field.from_spectral(g, c)
        energies.append(energy(v, params))
        if energies[-1] > energies[-2] + 1e-12 * abs(energies[-2]):
            log.debug("H_- increased at iteration %d by %.3g", it, energies[-1] - energies[-2])
    res, v, omega = best
    log.warning("gradient flow did not reach tol=%.1g in %d iterations (residual %.3g)", tol, max_iter, res)
    return GroundState(v, omega, res, eta, max_iter, Source.GRADIENT_FLOW, False, energies)


def ground_state_at_omega(
    omega: float,
    params: EquationParams,
    grid: GridSpec,
    initial: Field | None = None,
    omega_tol: float = 1e-6,
    max_bisections: int = 30,
    **flow_kwargs,
) -> GroundState:
    """Ground state whose Lagrange multiplier matches ``omega``.

    Starts from the mass of the line soliton R_omega; if the extracted
    multiplier misses ``omega`` by more than ``omega_tol`` the mass is
    bisected (omega increases with mass for p < 7/3).
    """
    eta = line_soliton_mass(omega, params, grid.ly)
    if initial is None:
        initial = line_soliton(omega, params, grid)
    gs = gradient_flow(initial, eta, params, **flow_kwargs)
    if abs(gs.omega - omega) <= omega_tol:
        return gs
    # bracket the target by doubling/halving the mass, then bisect
    lo = hi = eta
    factor = 2.0 if gs.omega < omega else 0.5
    for _ in range(max_bisections):
        nxt = (hi if factor > 1 else lo) * factor
        gs = gradient_flow(gs.profile, nxt, params, **flow_kwargs)
        if factor > 1:
            lo, hi = hi, nxt
        else:
            lo, hi = nxt, lo
        if abs(gs.omega - omega) <= omega_tol:
            return gs
        if (gs.omega > omega) == (factor > 1):
            break
    else:
        raise RuntimeError(f"could not bracket omega = {omega}")
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        gs = gradient_flow(gs.profile, mid, params, **flow_kwargs)
        if abs(gs.omega - omega) <= omega_tol:
            break
        if gs.omega < omega:
            lo = mid
        else:
            hi = mid
    return gs


def omega_of_eta(eta: float, q1_l2sq: float, params: EquationParams) -> float:
    """Frequency of the rescaled ground state with mass eta: (2 eta/||Q_1||^2)^(2(p-1)/(7-3p))."""
    if not (eta > 0 and q1_l2sq > 0):
        raise ValueError("eta and ||Q_1||^2 must be positive")
    p = params.p
    if math.isclose(p, 7.0 / 3.0):
        raise ValueError("exponent is singular at p = 7/3")
    return (2.0 * eta / q1_l2sq) ** (2.0 * (p - 1.0) / (7.0 - 3.0 * p))


def omega_threshold(params: EquationParams) -> float:
    """omega_p = 4/((p-1)(p+3)); line solitons on the cylinder are ground states at most up to it."""
    p = params.p
    if not 1 < p <= 2:
        raise ValueError("threshold is stated for 1 < p <= 2")
    return 4.0 / ((p - 1.0) * (p + 3.0))


def _is_y_independent(f: Field, rtol: float = 1e-13) -> bool:
    v = f.values
    return bool(np.max(np.abs(v - v[:, :1])) <= rtol * max(np.max(np.abs(v)), 1e-300))


def rescale_ground_state(Q1: Field, omega: float, params: EquationParams, target: GridSpec | None = None) -> Field:
    """Q_omega(x, y) = omega^(1/(p-1)) Q_1(sqrt(omega) x, omega y).

    On a truncated plane the samples map onto the grid with lengths
    lx/sqrt(omega), ly/omega.  On the torus the y-period must survive: Q_1
    must be y-independent, or omega a positive integer (index remap).
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    g = Q1.grid
    amp = omega ** (1.0 / (params.p - 1.0))
    if g.y_domain is YDomain.TRUNCATED_LINE:
        out = Field(g.scaled(1.0 / math.sqrt(omega), 1.0 / omega), amp * Q1.values)
    else:
        new_grid = GridSpec(g.nx, g.ny, g.lx / math.sqrt(omega))
        if _is_y_independent(Q1):
            out = Field(new_grid, amp * Q1.values)
        elif float(omega).is_integer():
            idx = (int(omega) * np.arange(g.ny)) % g.ny
            out = Field(new_grid, amp * Q1.values[:, idx])
        else:
            raise ValueError("on the torus omega must be an integer unless Q_1 is y-independent")
    if target is None:
        return out
    try:
        return resample(out, target)
    except ValueError as exc:
        raise ValueError(f"target grid is not commensurate with the rescaled domain: {exc}") from None


def y_variation(f: Field) -> float:
    """Relative L2 size of the y-dependent part of f."""
    v = f.values
    mean = v.mean(axis=1, keepdims=True)
    total = np.sqrt(np.sum(np.abs(v) ** 2))
    return float(np.sqrt(np.sum(np.abs(v - mean) ** 2)) / total) if total > 0 else 0.0


@dataclass
class BifurcationSweep:
    omegas: list[float]
    y_variations: list[float]
    extracted_omegas: list[float]
    bracket: tuple[float, float] | None
    threshold: float


def bifurcation_sweep(
    omegas,
    params: EquationParams,
    grid: GridSpec,
    perturbation: float = 0.1,
    y_tol: float = 1e-3,
    **flow_kwargs,
) -> BifurcationSweep:
    """Run the flow from R_omega (1 + perturbation cos y) at each mass eta(R_omega).

    The empirical bracket for omega_* is (last omega whose minimiser stays
    y-independent, first omega whose minimiser depends on y).
    """
    omegas = sorted(omegas)
    variations, extracted = [], []
    for w in omegas:
        r = line_soliton(w, params, grid)
        start = Field(grid, r.values * (1.0 + perturbation * np.cos(grid.y)[None, :]))
        gs = gradient_flow(start, mass(r), params, **flow_kwargs)
        variations.append(y_variation(gs.profile))
        extracted.append(gs.omega)
    bracket = None
    for i in range(len(omegas) - 1):
        if variations[i] <= y_tol < variations[i + 1]:
            bracket = (omegas[i], omegas[i + 1])
            break
    return BifurcationSweep(omegas, variations, extracted, bracket, omega_threshold(params))
