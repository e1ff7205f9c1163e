"""Seeded, counter-based random streams.

All randomness in the package flows through :class:`SeededRng`.  The
underlying bit generator is Philox-4x64 keyed directly by the 64-bit seed, so
the raw stream is fully specified by the seed.  Gaussians are produced with
the Box-Muller transform from 53-bit uniforms, which keeps the conversion
independent of numpy's internal (version-dependent) normal samplers.
"""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidArgumentError

_MASK64 = (1 << 64) - 1
_TWO_POW_53 = float(1 << 53)


class SeededRng:
    """Deterministic random stream derived from a 64-bit seed.

    Parameters
    ----------
    seed : int
        Any integer; reduced modulo 2**64.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._bitgen = np.random.Philox(key=self.seed)

    def __repr__(self):
        return f"SeededRng(seed={self.seed})"

    def raw(self, size: int) -> np.ndarray:
        """Next ``size`` raw uint64 words."""
        return self._bitgen.random_raw(int(size)).astype(np.uint64, copy=False)

    def uniform(self, size: int) -> np.ndarray:
        """Uniforms in the open interval (0, 1) with 53 bits of resolution."""
        words = self.raw(size) >> np.uint64(11)
        return (words.astype(np.float64) + 0.5) / _TWO_POW_53

    def normal(self, shape) -> np.ndarray:
        """Standard normals via Box-Muller, filled in row-major order."""
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        count = int(np.prod(shape, dtype=np.int64))
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        out = np.empty((pairs, 2))
        out[:, 0] = radius * np.cos(angle)
        out[:, 1] = radius * np.sin(angle)
        return out.reshape(-1)[:count].reshape(shape)

    def signs(self, size: int) -> np.ndarray:
        """Random +-1.0 values from the top bit of each word."""
        top = (self.raw(size) >> np.uint64(63)).astype(np.float64)
        return 1.0 - 2.0 * top

    def integer_below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection sampling."""
        if bound <= 0:
            raise InvalidArgumentError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            word = int(self.raw(1)[0])
            if word < limit:
                return word % bound

    def sample_without_replacement(self, population: int, size: int) -> np.ndarray:
        """Sorted uniform subset of ``range(population)`` (partial Fisher-Yates)."""
        if not 0 <= size <= population:
            raise InvalidArgumentError("sample size must lie in [0, population]")
        pool = np.arange(population)
        for i in range(size):
            j = i + self.integer_below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return np.sort(pool[:size])

    def spawn(self, key: int) -> "SeededRng":
        """Independent child stream; children are keyed by ``(seed, key)``."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(int(key),))
        return SeededRng(int(seq.generate_state(1, np.uint64)[0]))


def as_rng(rng) -> SeededRng:
    """Coerce ``None``, an int seed or a :class:`SeededRng` to a stream."""
    if isinstance(rng, SeededRng):
        return rng
    if rng is None:
        return SeededRng(0)
    if isinstance(rng, (int, np.integer)):
        return SeededRng(int(rng))
    raise InvalidArgumentError(f"cannot build a SeededRng from {rng!r}")
