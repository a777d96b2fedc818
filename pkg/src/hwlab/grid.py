"""
Spectral grids, transforms, Fourier symbols and norms.

The x direction is a periodic truncation [-lx/2, lx/2) of the real line.  The
y direction is either the exact torus of length 2*pi or a periodic truncation
[-ly/2, ly/2) of the real line.

Normalisation
-------------
Spectral coefficients are Fourier-series coefficients,

    u_hat[k, m] = fft2(u)[k, m] / (nx * ny),    u(x, y) = sum u_hat e^{i(xi x + eta y)},

so that for any weight w(xi, eta)

    integral w(D)|u|^2 dx dy = lx * ly * sum w |u_hat|^2

and the discrete Parseval identity sum |u|^2 dx dy = lx * ly * sum |u_hat|^2
holds exactly.  Norms are therefore the continuous integrals (no stray 2*pi
factors); ly = 2*pi on the torus.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Set the thread count used by every transform (results are bitwise independent of it)."""
    global _FFT_WORKERS
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    _FFT_WORKERS = int(n)


def fft2(a: np.ndarray) -> np.ndarray:
    return sfft.fft2(a, axes=(-2, -1), workers=_FFT_WORKERS)


def ifft2(a: np.ndarray) -> np.ndarray:
    return sfft.ifft2(a, axes=(-2, -1), workers=_FFT_WORKERS)


class YDomain(str, enum.Enum):
    TORUS = "torus"
    TRUNCATED_LINE = "truncated"


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-lx/2, lx/2) x Y.

    Arrays are indexed ``[ix, iy]`` (x-major).  Wavenumber tables use FFT
    ordering; the mode set is {-n/2, ..., n/2 - 1} in both directions.
    """

    nx: int
    ny: int
    lx: float
    y_domain: YDomain = YDomain.TORUS
    ly: float = 2.0 * math.pi

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or not _is_pow2(int(n)) or n < 8:
                raise ValueError(f"{name} must be a power of two >= 8, got {n!r}")
        if not (self.lx > 0 and math.isfinite(self.lx)):
            raise ValueError(f"lx must be positive and finite, got {self.lx!r}")
        object.__setattr__(self, "y_domain", YDomain(self.y_domain))
        if self.y_domain is YDomain.TORUS:
            if not math.isclose(self.ly, 2.0 * math.pi, rel_tol=0, abs_tol=1e-12):
                raise ValueError("torus y-domain has fixed length 2*pi")
            object.__setattr__(self, "ly", 2.0 * math.pi)
        elif not (self.ly > 0 and math.isfinite(self.ly)):
            raise ValueError(f"ly must be positive and finite, got {self.ly!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.lx + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        if self.y_domain is YDomain.TORUS:
            return self.dy * np.arange(self.ny)
        return -0.5 * self.ly + self.dy * np.arange(self.ny)

    @cached_property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * sfft.fftfreq(self.nx, d=self.dx)

    @cached_property
    def eta(self) -> np.ndarray:
        return 2.0 * np.pi * sfft.fftfreq(self.ny, d=self.dy)

    @cached_property
    def XI(self) -> np.ndarray:
        return np.broadcast_to(self.xi[:, None], self.shape)

    @cached_property
    def ETA(self) -> np.ndarray:
        return np.broadcast_to(self.eta[None, :], self.shape)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def mode_index(self, k: int, m: int) -> tuple[int, int]:
        """Array position of integer mode (k, m) in FFT ordering."""
        if not (-self.nx // 2 <= k < self.nx // 2 and -self.ny // 2 <= m < self.ny // 2):
            raise ValueError(f"mode ({k}, {m}) outside the resolved set")
        return (k % self.nx, m % self.ny)

    def scaled(self, fx: float, fy: float) -> "GridSpec":
        """Grid whose lengths are lx*fx and ly*fy (truncated y only)."""
        if self.y_domain is YDomain.TORUS:
            raise ValueError("cannot rescale the 2*pi-periodic torus direction")
        return GridSpec(self.nx, self.ny, self.lx * fx, YDomain.TRUNCATED_LINE, self.ly * fy)


def make_grid(nx: int, ny: int, lx: float, y_domain="torus", ly: float | None = None) -> GridSpec:
    y_domain = YDomain(y_domain)
    if y_domain is YDomain.TORUS:
        if ly is not None and not math.isclose(ly, 2.0 * math.pi):
            raise ValueError("torus y-domain has fixed length 2*pi")
        return GridSpec(nx, ny, float(lx), y_domain)
    if ly is None:
        raise ValueError("truncated y-domain requires ly")
    return GridSpec(nx, ny, float(lx), y_domain, float(ly))


def _check_finite(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError("field contains NaN or Inf")


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples u(x_i, y_j) on a grid; immutable.

    The spectral view is computed lazily and cached.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        _check_finite(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_spectral(cls, grid: GridSpec, coeffs: np.ndarray) -> "Field":
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        _check_finite(coeffs)
        f = cls(grid, ifft2(coeffs) * (grid.nx * grid.ny))
        c = coeffs.copy()
        c.flags.writeable = False
        f.__dict__["spectral"] = c
        return f

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @cached_property
    def spectral(self) -> np.ndarray:
        c = fft2(self.values) / (self.grid.nx * self.grid.ny)
        c.flags.writeable = False
        return c

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def abs(self) -> np.ndarray:
        return np.abs(self.values)


def _same_grid(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def transform(f: Field) -> np.ndarray:
    """Spectral coefficients of ``f`` (FFT ordering, Fourier-series normalisation)."""
    return f.spectral


def inverse_transform(grid: GridSpec, coeffs: np.ndarray) -> Field:
    return Field.from_spectral(grid, coeffs)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


class NormFamily(str, enum.Enum):
    L2 = "L2"
    LP = "Lp"
    LINF = "Linf"
    L2X_HSY = "L2xHsy"
    H1X_L2Y = "H1xL2y"
    HALF_DY_SEMI = "HalfDyHalfSemi"
    ANISO_HS = "AnisoHs"
    FULL_HS = "FullHs"


@dataclass(frozen=True)
class NormKind:
    family: NormFamily
    order: float = 0.0

    @property
    def is_spectral(self) -> bool:
        return self.family not in (NormFamily.LP, NormFamily.LINF)

    def weight(self, grid: GridSpec) -> np.ndarray:
        """Spectral weight w(xi, eta) with ||f||^2 = lx*ly*sum w |f_hat|^2."""
        xi2 = grid.XI**2
        eta = grid.ETA
        fam = self.family
        if fam is NormFamily.L2:
            return np.ones(grid.shape)
        if fam is NormFamily.L2X_HSY:
            return (1.0 + eta**2) ** self.order
        if fam is NormFamily.H1X_L2Y:
            return 1.0 + xi2
        if fam is NormFamily.HALF_DY_SEMI:
            return np.abs(eta)
        if fam is NormFamily.ANISO_HS:
            return 1.0 + xi2 + (1.0 + eta**2) ** self.order
        if fam is NormFamily.FULL_HS:
            return (1.0 + xi2 + eta**2) ** self.order
        raise ValueError(f"{fam.value} is not a spectrally weighted norm")

    def __str__(self):
        if self.family in (NormFamily.LP, NormFamily.L2X_HSY, NormFamily.ANISO_HS, NormFamily.FULL_HS):
            return f"{self.family.value}({self.order:g})"
        return self.family.value


L2 = NormKind(NormFamily.L2)
LINF = NormKind(NormFamily.LINF)
H1X_L2Y = NormKind(NormFamily.H1X_L2Y)
HALF_DY_SEMI = NormKind(NormFamily.HALF_DY_SEMI)


def Lp(p: float) -> NormKind:
    if not p >= 1:
        raise ValueError(f"Lp norm requires p >= 1, got {p}")
    return NormKind(NormFamily.LP, float(p))


def L2xHsy(s: float) -> NormKind:
    if s < 0:
        raise ValueError("s must be >= 0")
    return NormKind(NormFamily.L2X_HSY, float(s))


def AnisoHs(s: float) -> NormKind:
    """Intersection norm L2_x H^s_y cap H^1_x L2_y realised by the weight 1 + xi^2 + <eta>^{2s}."""
    if s < 0:
        raise ValueError("s must be >= 0")
    return NormKind(NormFamily.ANISO_HS, float(s))


def FullHs(s: float) -> NormKind:
    if s < 0:
        raise ValueError("s must be >= 0")
    return NormKind(NormFamily.FULL_HS, float(s))


ANISO_HALF = AnisoHs(0.5)


def lp_norm_values(values: np.ndarray, p: float, cell: float) -> float:
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max(initial=0.0))
    amax = a.max(initial=0.0)
    if amax == 0.0:
        return 0.0
    # scale out the maximum so large p does not overflow
    return float(amax * (np.sum((a / amax) ** p) * cell) ** (1.0 / p))


def norm(f: Field, kind: NormKind = L2) -> float:
    """Norm of ``f``; Sobolev-type kinds spectrally, Lebesgue kinds by Riemann-sum quadrature."""
    g = f.grid
    if kind.family is NormFamily.LINF:
        return float(np.max(np.abs(f.values)))
    if kind.family is NormFamily.LP:
        if kind.order < 1:
            raise ValueError(f"Lp norm requires p >= 1, got {kind.order}")
        return lp_norm_values(f.values, kind.order, g.cell_area)
    w = kind.weight(g)
    return math.sqrt(g.area * float(np.sum(w * np.abs(f.spectral) ** 2)))


def inner_product(f: Field, g: Field, kind: NormKind = L2) -> complex:
    """Weighted spectral inner product, linear in ``f`` and conjugate-linear in ``g``."""
    _same_grid(f, g)
    if not kind.is_spectral:
        raise ValueError(f"{kind} is not induced by an inner product")
    w = kind.weight(f.grid)
    return complex(f.grid.area * np.sum(w * f.spectral * np.conj(g.spectral)))


def physical_l2(f: Field) -> float:
    """L2 norm by physical-space quadrature (Parseval companion of norm(f, L2))."""
    return math.sqrt(float(np.sum(np.abs(f.values) ** 2)) * f.grid.cell_area)


# ---------------------------------------------------------------------------
# Fourier multipliers
# ---------------------------------------------------------------------------


class Symbol(str, enum.Enum):
    DX = "Dx"
    DXX = "Dxx"
    ABS_DY = "AbsDy"
    ABS_DY_HALF = "AbsDyHalf"
    JAPANESE_BRACKET_Y = "JapaneseBracketY"


def symbol_array(grid: GridSpec, symbol: Symbol, s: float = 1.0) -> np.ndarray:
    symbol = Symbol(symbol)
    if symbol is Symbol.DX:
        return 1j * grid.XI
    if symbol is Symbol.DXX:
        return -(grid.XI**2)
    if symbol is Symbol.ABS_DY:
        return np.abs(grid.ETA)
    if symbol is Symbol.ABS_DY_HALF:
        return np.sqrt(np.abs(grid.ETA))
    return (1.0 + grid.ETA**2) ** (0.5 * s)


def apply_symbol(f: Field, symbol: Symbol, s: float = 1.0) -> Field:
    """Multiply the spectral coefficients by i*xi, -xi^2, |eta|, |eta|^(1/2) or <eta>^s."""
    return Field.from_spectral(f.grid, f.spectral * symbol_array(f.grid, symbol, s))


def tail_mass_fraction(f: Field, width: float = 0.05) -> float:
    """Fraction of the L2 mass within ``width*lx`` of the x-boundary."""
    g = f.grid
    dens = np.sum(np.abs(f.values) ** 2, axis=1)
    total = dens.sum()
    if total == 0.0:
        return 0.0
    edge = np.abs(g.x) >= (0.5 - width) * g.lx
    return float(dens[edge].sum() / total)
