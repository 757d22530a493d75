"""Seeded sampling of Hamiltonian uncertainties and batch scheduling.

Random streams are built on the counter-based Philox generator, so a
(seed, stream) pair identifies the same sample sequence on every platform
and parallel consumers can partition randomness reproducibly.

Batch schedulers express the three training regimes as one family:

* fresh i.i.d. batch every iteration (stochastic mini-batch training),
* one batch frozen at construction (fixed-sample training),
* the single nominal, zero-uncertainty sample (deterministic training).

A frozen-batch scheduler draws from the same stream position a fresh-batch
scheduler would, so both regimes start from the identical first batch when
given equal seeds.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "RandomSource",
    "UniformBox",
    "FourierNoise",
    "BatchScheduler",
    "FreshBatchScheduler",
    "FixedBatchScheduler",
    "NominalScheduler",
    "make_scheduler",
    "draw_batch",
    "noise_value",
    "noise_values",
]

_TWO64 = 2**64


class RandomSource:
    """Deterministic random stream keyed by (seed, stream index).

    Wraps numpy's Philox4x64 bit generator with the two key words set to
    the seed and the stream index.  ``substream(i)`` derives the i-th
    independent stream of the same seed; stream 0 is the root.
    """

    def __init__(self, seed: int, stream: int = 0):
        if not 0 <= int(seed) < _TWO64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if not 0 <= int(stream) < _TWO64:
            raise ValueError(f"stream index must be a 64-bit unsigned integer, got {stream}")
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RandomSource":
        """Independent stream number ``index`` derived from the same seed."""
        return RandomSource(self.seed, index)

    def uniform(self, lo, hi, size=None):
        return self._gen.uniform(lo, hi, size=size)

    def normal(self, sigma: float, size=None):
        return self._gen.normal(0.0, sigma, size=size)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class UniformBox:
    """Independent uniform coordinates on the box [lo_i, hi_i]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi elementwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def draw(self, rng: RandomSource) -> np.ndarray:
        return rng.uniform(self.lo, self.hi)

    @classmethod
    def symmetric(cls, half_width: float, dim: int) -> "UniformBox":
        """The box [-half_width, half_width]^dim."""
        hw = float(half_width)
        return cls(np.full(dim, -hw), np.full(dim, hw))


@dataclass(frozen=True)
class FourierNoise:
    """Low-frequency random Fourier series for multiplicative amplitude noise.

    A draw packs the series n(t) = sum_k (a_k cos w_k t + b_k sin w_k t)
    as the flat vector [a_1..a_K | b_1..b_K | w_1..w_K]: the a_k and b_k
    are independent Gaussians with standard deviation ``amp_sigma`` and the
    frequencies w_k are uniform on [freq_lo, freq_hi].
    """

    amp_sigma: float
    num_modes: int = 10
    freq_lo: float = 0.0
    freq_hi: float = 2.0 * np.pi

    def __post_init__(self):
        if self.amp_sigma <= 0:
            raise ValueError("amp_sigma must be positive")
        if self.num_modes < 1:
            raise ValueError("num_modes must be at least 1")
        if self.freq_lo > self.freq_hi:
            raise ValueError("freq_lo must not exceed freq_hi")

    @property
    def dim(self) -> int:
        return 3 * self.num_modes

    def draw(self, rng: RandomSource) -> np.ndarray:
        k = self.num_modes
        a = rng.normal(self.amp_sigma, size=k)
        b = rng.normal(self.amp_sigma, size=k)
        w = rng.uniform(self.freq_lo, self.freq_hi, size=k)
        return np.concatenate([a, b, w])


def draw_batch(dist, rng: RandomSource, size: int) -> list[np.ndarray]:
    """Draw ``size`` independent samples in a fixed sequential order."""
    if size < 1:
        raise ValueError("batch size must be at least 1")
    return [dist.draw(rng) for _ in range(size)]


def noise_value(sample: np.ndarray, t: float) -> float:
    """Evaluate the Fourier noise series of a packed [a|b|w] sample at time t."""
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 1 or sample.size == 0 or sample.size % 3 != 0:
        raise ValueError(
            f"noise sample must be a flat [a|b|w] vector of length 3*num_modes, got shape {sample.shape}"
        )
    k = sample.size // 3
    a, b, w = sample[:k], sample[k : 2 * k], sample[2 * k :]
    return float(np.sum(a * np.cos(w * t) + b * np.sin(w * t)))


def noise_values(samples: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Vectorized noise series: samples (S, 3K), times (M,) -> values (S, M)."""
    samples = np.asarray(samples, dtype=float)
    times = np.asarray(times, dtype=float)
    if samples.ndim != 2 or samples.shape[1] % 3 != 0:
        raise ValueError("samples must have shape (S, 3*num_modes)")
    k = samples.shape[1] // 3
    a = samples[:, None, :k]
    b = samples[:, None, k : 2 * k]
    w = samples[:, None, 2 * k :]
    wt = w * times[None, :, None]
    return np.sum(a * np.cos(wt) + b * np.sin(wt), axis=-1)


class BatchScheduler(ABC):
    """Produces the per-iteration sample batches for the training loop."""

    mode: str
    batch_size: int
    distribution: object

    @abstractmethod
    def next_batch(self, rng: RandomSource) -> list[np.ndarray]:
        """Batch of uncertainty samples for the next iteration."""


@dataclass
class FreshBatchScheduler(BatchScheduler):
    """New i.i.d. batch on every call (stochastic mini-batch training)."""

    distribution: object
    batch_size: int
    mode: str = field(default="fresh", init=False)

    def next_batch(self, rng: RandomSource) -> list[np.ndarray]:
        return draw_batch(self.distribution, rng, self.batch_size)


class FixedBatchScheduler(BatchScheduler):
    """One batch drawn at construction and returned on every call."""

    mode = "fixed"

    def __init__(self, distribution, batch_size: int, rng: RandomSource):
        self.distribution = distribution
        self.batch_size = int(batch_size)
        self._frozen = draw_batch(distribution, rng, self.batch_size)

    def next_batch(self, rng: RandomSource) -> list[np.ndarray]:
        return [s.copy() for s in self._frozen]


class NominalScheduler(BatchScheduler):
    """Single zero-uncertainty sample on every call (deterministic training)."""

    mode = "nominal"
    batch_size = 1

    def __init__(self, distribution):
        self.distribution = distribution

    def next_batch(self, rng: RandomSource) -> list[np.ndarray]:
        return [np.zeros(self.distribution.dim)]


def make_scheduler(mode: str, distribution, batch_size: int, rng: RandomSource) -> BatchScheduler:
    """Build a scheduler; the fixed mode consumes ``rng`` for its frozen batch."""
    if mode == "fresh":
        return FreshBatchScheduler(distribution, batch_size)
    if mode == "fixed":
        return FixedBatchScheduler(distribution, batch_size, rng)
    if mode == "nominal":
        return NominalScheduler(distribution)
    raise ValueError(f"unknown batch mode {mode!r}; expected 'fresh', 'fixed' or 'nominal'")
