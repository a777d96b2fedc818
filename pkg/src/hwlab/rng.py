"""
Portable seeded randomness.

SplitMix64 (Steele, Lea & Flood 2014) is used in counter mode: the i-th 64-bit
output of stream ``seed`` is

    z = seed + (i + 1) * 0x9E3779B97F4A7C15        (mod 2^64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

Uniforms are (z >> 11) * 2^-53 in [0, 1); normals come from Box-Muller on
consecutive pairs (u1 = 1 - uniform, so log never sees 0).  Any language with
wrapping 64-bit integers reproduces the streams bit-for-bit.
"""

from __future__ import annotations

import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, n: int, offset: int = 0) -> np.ndarray:
    """Outputs ``offset .. offset+n-1`` of the SplitMix64 stream for ``seed``."""
    with np.errstate(over="ignore"):
        i = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
        z = np.uint64(seed & _MASK) + i * GOLDEN_GAMMA
        return _mix(z)


def derive_seed(seed: int, index: int) -> int:
    """Independent child seed; used for per-sample and holdout streams."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK) ^ _mix(np.array([index + 1], dtype=np.uint64) * GOLDEN_GAMMA)[0]
        return int(_mix(np.array([z], dtype=np.uint64))[0])


def uniform(seed: int, n: int) -> np.ndarray:
    return (splitmix64(seed, n) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def normal(seed: int, n: int) -> np.ndarray:
    m = (n + 1) // 2
    u = uniform(seed, 2 * m)
    u1 = 1.0 - u[0::2]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n]


def complex_normal(seed: int, shape) -> np.ndarray:
    n = int(np.prod(shape))
    z = normal(seed, 2 * n)
    return (z[0::2] + 1j * z[1::2]).reshape(shape) / np.sqrt(2.0)
