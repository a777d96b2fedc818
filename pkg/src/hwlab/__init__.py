"""Pseudo-spectral laboratory for i u_t + (d_x^2 - |D_y|) u = +-|u|^(p-1) u on R x T or a truncated plane."""

from .dynamics import EquationParams, Sign, energy, evolve, mass
from .grid import Field, GridSpec, NormKind, YDomain, make_grid, norm

__all__ = [
    "EquationParams",
    "Field",
    "GridSpec",
    "NormKind",
    "Sign",
    "YDomain",
    "energy",
    "evolve",
    "make_grid",
    "mass",
    "norm",
]

__version__ = "0.1.0"
