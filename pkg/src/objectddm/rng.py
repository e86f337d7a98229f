"""Reproducible random streams.

Every stochastic draw in the package goes through :class:`Rng`, a
xoshiro256** generator whose 256-bit state is filled from a splitmix64
stream.  Uniform doubles use the top 53 bits of each output; normal
variates come from Box-Muller on consecutive pairs of uniforms, with the
sine half of a pair kept as a spare for the next request.  Given a seed,
the sequence of values is fixed bit-for-bit.
"""

from __future__ import annotations

import math

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """splitmix64 output finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(state: int, n: int) -> list[int]:
    """First ``n`` outputs of a splitmix64 stream started at ``state``."""
    out = []
    for _ in range(n):
        state = (state + GOLDEN_GAMMA) & MASK64
        out.append(mix64(state))
    return out


def derive_seed(seed_base: int, index: int) -> int:
    """Seed of run ``index``: output ``index`` of splitmix64 seeded with ``seed_base``.

    Adding runs never changes the seeds of earlier ones.
    """
    if index < 0:
        raise ValueError("run index must be >= 0")
    return mix64((seed_base + (index + 1) * GOLDEN_GAMMA) & MASK64)


@numba.njit(cache=True)
def _xoshiro_fill(state, out):
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    for i in range(out.shape[0]):
        x = s1 * np.uint64(5)
        out[i] = ((x << np.uint64(7)) | (x >> np.uint64(57))) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3


class Rng:
    """xoshiro256** stream seeded through splitmix64.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed (reduced modulo 2**64).
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self._state = np.array(splitmix64(self.seed, 4), dtype=np.uint64)
        self._spare: float | None = None

    def raw(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.uint64)
        if n:
            _xoshiro_fill(self._state, out)
        return out

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def integers(self, low: int, high: int) -> int:
        """Integer uniform on the closed range [low, high]."""
        if high < low:
            raise ValueError("high < low")
        span = high - low + 1
        return low + min(int(self.uniform() * span), span - 1)

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard normal variates."""
        out = np.empty(n, dtype=np.float64)
        start = 0
        if n and self._spare is not None:
            out[0] = self._spare
            self._spare = None
            start = 1
        need = n - start
        if need <= 0:
            return out
        pairs = (need + 1) // 2
        u = self.uniforms(2 * pairs)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        angle = 2.0 * math.pi * u[1::2]
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        out[start:] = z[:need]
        if 2 * pairs > need:
            self._spare = float(z[-1])
        return out

    def getstate(self) -> tuple:
        return (tuple(int(v) for v in self._state), self._spare)

    def setstate(self, state: tuple) -> None:
        words, spare = state
        self._state = np.array(words, dtype=np.uint64)
        self._spare = spare
