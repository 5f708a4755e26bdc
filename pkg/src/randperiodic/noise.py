"""Deterministic, index-addressable Wiener increment grid.

Every Gaussian draw is a pure function of (seed, stream, mode, time index),
realized with the Philox counter-based generator: the key holds the seed,
the counter holds the address.  That makes the noise a random *environment*
rather than a stream -- two simulations that overlap on the time axis see
bit-identical increments on the overlap, which is exactly what pull-back
experiments with a fixed noise realization need.  The periodic shift of the
driving noise is an index offset of m = tau/h.

Addressing layout (Philox4x64): key = [seed, golden-ratio constant];
counter = [time-block, mode, stream, 0] where four consecutive time indices
share one counter block (Philox emits four 64-bit words per block).
Uniforms are mapped to normals by the inverse CDF, which is monotone and
accurate to well below 1e-9 in absolute error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

__all__ = [
    "NoiseGrid",
    "AggregatedNoiseGrid",
    "shift_theta",
    "sample_seed",
    "splitmix64",
    "initial_normals",
]

_MASK64 = (1 << 64) - 1
_KEY_CONST = 0x9E3779B97F4A7C15

# Stream identifiers inside the counter; each stream is an independent
# family of uniforms over (mode, time index).
_STREAM_WIENER = 0
_STREAM_CONV = 1
_STREAM_INITIAL = 2


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; the documented hash behind per-sample seeds."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def sample_seed(seed: int, index: int) -> int:
    """Seed for Monte Carlo sample ``index``: seed XOR splitmix64(index).

    Part of the reproducibility contract -- results must not depend on which
    thread runs which sample, so the derivation is fixed here.
    """
    return (seed ^ splitmix64(index & _MASK64)) & _MASK64


def _raw_words(seed: int, stream: int, mode: int, block0: int, nblocks: int) -> np.ndarray:
    key = np.array([seed & _MASK64, _KEY_CONST], dtype=np.uint64)
    ctr = np.array([block0 & _MASK64, mode & _MASK64, stream & _MASK64, 0], dtype=np.uint64)
    return Philox(key=key, counter=ctr).random_raw(4 * nblocks)


def _uniform_run(seed: int, stream: int, mode: int, j0: int, count: int) -> np.ndarray:
    """Uniforms in (0,1) for time indices j0 .. j0+count-1, all of one sign regime."""
    ju = j0 & _MASK64
    block0 = ju >> 2
    off = ju & 3
    nblocks = (off + count + 3) // 4
    words = _raw_words(seed, stream, mode, block0, nblocks)[off : off + count]
    # (w >> 11) + 0.5 over 2^53 lands strictly inside (0, 1).
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _uniforms(seed: int, stream: int, mode: int, j0: int, j1: int) -> np.ndarray:
    """Uniforms for the signed index range [j0, j1); splits at zero so the
    unsigned counter never wraps inside one Philox call."""
    if j1 <= j0:
        return np.empty(0)
    if j0 < 0 <= j1:
        return np.concatenate(
            [
                _uniform_run(seed, stream, mode, j0, -j0),
                _uniform_run(seed, stream, mode, 0, j1),
            ]
        )
    return _uniform_run(seed, stream, mode, j0, j1 - j0)


def initial_normals(seed: int, n: int) -> np.ndarray:
    """Standard normals for initial-data sampling, one per mode, keyed on seed.

    Mode slot 0 of the initial-data stream carries the draws indexed by mode
    number, so the first n draws are a prefix of the first N for N >= n --
    projections of one initial condition agree across truncations.
    """
    return ndtri(_uniforms(seed, _STREAM_INITIAL, 0, 1, n + 1))


@dataclass(frozen=True)
class NoiseGrid:
    """Wiener increments on the uniform grid {j h, j in Z}.

    tau = m*h holds by construction, so every shift of one period is exactly
    m grid indices.  ``offset`` accumulates such shifts: queries at index j
    read the underlying realization at j + offset.
    """

    seed: int
    h: float
    m: int
    n_modes: int
    offset: int = 0

    def __post_init__(self) -> None:
        if self.h <= 0.0 or not math.isfinite(self.h):
            raise ValueError("stepsize must be positive and finite")
        if int(self.m) < 1:
            raise ValueError("steps per period m must be a positive integer")
        if int(self.n_modes) < 1:
            raise ValueError("mode count must be at least 1")
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n_modes", int(self.n_modes))
        object.__setattr__(self, "offset", int(self.offset))

    @classmethod
    def from_period(cls, seed: int, tau: float, m: int, n_modes: int) -> "NoiseGrid":
        if tau <= 0.0:
            raise ValueError("period must be positive")
        return cls(seed=seed, h=tau / int(m), m=int(m), n_modes=n_modes)

    @property
    def tau(self) -> float:
        return self.m * self.h

    def shifted(self, k: int = 1) -> "NoiseGrid":
        """Grid seen through k applications of the one-period noise shift."""
        return replace(self, offset=self.offset + k * self.m)

    def _check_mode(self, i: int) -> None:
        if not 1 <= i <= self.n_modes:
            raise ValueError(f"mode {i} outside 1..{self.n_modes}")

    def increments_range(self, i: int, j0: int, j1: int) -> np.ndarray:
        """Increments of mode i for indices [j0, j1), scaled to N(0, h)."""
        self._check_mode(i)
        u = _uniforms(self.seed, _STREAM_WIENER, i, j0 + self.offset, j1 + self.offset)
        return math.sqrt(self.h) * ndtri(u)

    def increment(self, i: int, j: int) -> float:
        """Single increment of mode i over [j h, (j+1) h); bit-reproducible."""
        return float(self.increments_range(i, j, j + 1)[0])

    def increments(self, j: int, n: int | None = None) -> np.ndarray:
        """Increments of modes 1..n at index j."""
        return self.increment_table(j, j + 1, n)[:, 0]

    def increment_table(self, j0: int, j1: int, n: int | None = None) -> np.ndarray:
        """Increments for modes 1..n and indices [j0, j1) as an (n, L) array."""
        n = self.n_modes if n is None else n
        if not 1 <= n <= self.n_modes:
            raise ValueError(f"requested {n} modes from a {self.n_modes}-mode grid")
        out = np.empty((n, j1 - j0))
        for i in range(1, n + 1):
            out[i - 1] = self.increments_range(i, j0, j1)
        return out

    def _conv_normals_range(self, i: int, j0: int, j1: int) -> np.ndarray:
        self._check_mode(i)
        u = _uniforms(self.seed, _STREAM_CONV, i, j0 + self.offset, j1 + self.offset)
        return ndtri(u)

    def conv_pair(self, i: int, j: int, lam: float) -> tuple[float, float]:
        """Jointly Gaussian (increment, exponentially weighted integral).

        First component is bit-identical to ``increment(i, j)``.  The second
        is the integral of exp(-lam ((j+1)h - s)) dW_i(s) over the step,
        drawn conditionally on the first with the exact covariance
        Var2 = (1 - e^(-2 lam h)) / (2 lam), Cov = (1 - e^(-lam h)) / lam.
        """
        dw, z = self.conv_pair_table(j, j + 1, np.array([lam]), modes=(i,))
        return float(dw[0, 0]), float(z[0, 0])

    def conv_pair_table(
        self,
        j0: int,
        j1: int,
        lams: np.ndarray,
        modes: Sequence[int] | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized ``conv_pair`` over modes and an index range.

        ``lams`` gives the decay rate per requested mode.  Returns (dW, Z)
        arrays of shape (n, L); dW rows match ``increment_table`` bitwise.
        """
        lams = np.asarray(lams, dtype=float)
        if np.any(lams <= 0.0) or not np.isfinite(lams).all():
            raise ValueError("convolution decay rates must be positive and finite")
        mode_list = list(range(1, lams.size + 1)) if modes is None else list(modes)
        if len(mode_list) != lams.size:
            raise ValueError("one decay rate per mode is required")
        L = j1 - j0
        dw = np.empty((len(mode_list), L))
        zs = np.empty((len(mode_list), L))
        for row, i in enumerate(mode_list):
            dw[row] = self.increments_range(i, j0, j1)
            zs[row] = self._conv_normals_range(i, j0, j1)
        x = lams * self.h
        cov = (-np.expm1(-x) / lams)[:, None]
        var2 = (-np.expm1(-2.0 * x) / (2.0 * lams))[:, None]
        resid = np.maximum(var2 - cov * cov / self.h, 0.0)
        second = (cov / self.h) * dw + np.sqrt(resid) * zs
        return dw, second


def shift_theta(grid: NoiseGrid, i: int, j: int) -> float:
    """Increment of the once-shifted noise path: the base path at j + m."""
    return grid.increment(i, j + grid.m)


@dataclass(frozen=True)
class AggregatedNoiseGrid:
    """Coarse view of a fine grid: each coarse increment sums ``factor`` fine ones.

    Used when a fine-stepsize reference run and coarser runs must be driven
    by one Brownian path (nested-grid coupling).  Exposes the same query
    surface the integrator uses.
    """

    base: NoiseGrid
    factor: int

    def __post_init__(self) -> None:
        if int(self.factor) < 1:
            raise ValueError("aggregation factor must be a positive integer")
        if self.base.m % int(self.factor) != 0:
            raise ValueError("aggregation factor must divide the fine steps per period")
        object.__setattr__(self, "factor", int(self.factor))

    @property
    def h(self) -> float:
        return self.base.h * self.factor

    @property
    def m(self) -> int:
        return self.base.m // self.factor

    @property
    def n_modes(self) -> int:
        return self.base.n_modes

    @property
    def tau(self) -> float:
        return self.base.tau

    @property
    def seed(self) -> int:
        return self.base.seed

    def increment_table(self, j0: int, j1: int, n: int | None = None) -> np.ndarray:
        fine = self.base.increment_table(j0 * self.factor, j1 * self.factor, n)
        return fine.reshape(fine.shape[0], j1 - j0, self.factor).sum(axis=2)

    def increments(self, j: int, n: int | None = None) -> np.ndarray:
        return self.increment_table(j, j + 1, n)[:, 0]
