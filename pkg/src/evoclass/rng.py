"""Deterministic pseudo-random streams for reproducible training runs.

Every random quantity in the package (weight init, perturbations, synthetic
images) is drawn from a counter-based SplitMix64 stream.  Streams are cheap
to construct, so the same vector can be regenerated anywhere from its seed
alone: worker threads never have to ship noise vectors around, and results
cannot depend on evaluation order.

Gaussian variates use the basic Box-Muller transform, vectorized with NumPy.
All integer arithmetic is modulo 2**64.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
# Golden-ratio increment; the standard SplitMix64 stream constant.
_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB

_TWO_POW_NEG53 = 2.0**-53


def _mix_scalar(z: int) -> int:
    """SplitMix64 finalizer on a Python int (exact 64-bit wraparound)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & _MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & _MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MULT1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MULT2)
    return z ^ (z >> np.uint64(31))


def derive_seed(master_seed: int, *indices: int) -> int:
    """Derive an independent stream seed from a master seed and indices.

    Each index is absorbed with a mixing round, so (seed, 1, 0) and
    (seed, 0, 1) land in unrelated parts of the 64-bit space.  Used for
    per-(generation, pair) perturbation seeds and per-layer init seeds.
    """
    state = master_seed & _MASK64
    for index in indices:
        state = _mix_scalar(state + _GAMMA + (index & _MASK64))
    return state


class SplitMix64:
    """Counter-based SplitMix64 stream.

    Output ``i`` is ``mix(seed + (i+1)*GAMMA)``, which equals the classic
    stateful formulation but lets whole blocks be produced vectorized.
    """

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self._count = 0

    def next_u64(self, n: int) -> np.ndarray:
        """Return the next ``n`` raw 64-bit outputs as a uint64 array."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        start = self._count + 1
        self._count += n
        counters = np.arange(start, start + n, dtype=np.uint64)
        states = np.uint64(self._seed) + counters * np.uint64(_GAMMA)
        return _mix_array(states)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` float64 samples uniform on [0, 1)."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * _TWO_POW_NEG53

    def uniform_signed(self, n: int, bound: float) -> np.ndarray:
        """``n`` float64 samples uniform on [-bound, +bound)."""
        return (2.0 * self.uniform(n) - 1.0) * bound

    def normal(self, n: int) -> np.ndarray:
        """``n`` float64 standard-normal samples via Box-Muller.

        Pairs (z0, z1) are interleaved in draw order; u1 is taken from
        (0, 1] so the log never sees zero.
        """
        pairs = (n + 1) // 2
        u1 = ((self.next_u64(pairs) >> np.uint64(11)) + np.uint64(1)).astype(
            np.float64
        ) * _TWO_POW_NEG53
        u2 = self.uniform(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = (2.0 * np.pi) * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]


def normal_vector(seed: int, n: int) -> np.ndarray:
    """Standard-normal vector of length ``n`` from a fresh stream at ``seed``."""
    return SplitMix64(seed).normal(n)
