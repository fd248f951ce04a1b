"""Bernoulli nonuniform clock, delayed channels and lag products on the resulting streams.

Every channel of one acquisition shares a single mask (the common clock).  A
channel with delay ``d`` samples holds ``x[m - d]`` at the retained indices
``m``; entries whose delayed index falls outside the record are flagged
invalid and dropped when lag products are formed, so the surviving window is
``m in [d_max, L - 1 + d_min]``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ClockMismatchError, ConfigurationError, ShapeError
from .signal_synth import ComplexSeries

log = logging.getLogger(__name__)

_U64 = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class SamplingMask:
    bits: np.ndarray
    gamma: float
    seed: int
    resamples: int = 0

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 1 or b.size == 0:
            raise ShapeError("mask bits must be a non-empty 1-D array")
        if not b.any():
            raise ConfigurationError("mask retains no samples")
        object.__setattr__(self, "bits", b)

    @property
    def L(self) -> int:
        return self.bits.shape[0]

    @property
    def P(self) -> int:
        return int(self.bits.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def __eq__(self, other):
        if not isinstance(other, SamplingMask):
            return NotImplemented
        return (self.gamma == other.gamma and self.seed == other.seed
                and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.gamma, self.seed, self.bits.tobytes()))


def make_mask(L: int, gamma: float, seed: int) -> SamplingMask:
    """IID Bernoulli(gamma) retention bits, deterministic in ``seed``.

    An empty draw is replaced by the draw for ``seed + 1`` (and so on); the
    number of such retries is kept in ``resamples``.
    """
    if int(L) != L or L < 1:
        raise ConfigurationError(f"mask length must be a positive integer, got {L}")
    if not (0.0 < gamma <= 1.0):
        raise ConfigurationError(f"gamma={gamma} outside (0, 1]")
    L = int(L)
    tries = 0
    s = int(seed)
    while True:
        rng = np.random.default_rng([s & _U64, 0x4D41534B])
        bits = rng.random(L) < gamma
        if bits.any():
            break
        tries += 1
        log.info("mask seed %d produced no samples; retrying with %d", s, s + 1)
        s += 1
    P = int(bits.sum())
    if gamma < 1.0 and abs(P / L - gamma) > 5.0 * math.sqrt(gamma * (1 - gamma) / L):
        log.warning("mask rate %.4f far from gamma %.4f (L=%d, seed=%d)", P / L, gamma, L, seed)
    return SamplingMask(bits, float(gamma), int(seed), tries)


@dataclass(frozen=True)
class LagSpec:
    """Order, conjugation count and per-factor delays (in samples) of a lag product.

    The first ``q`` factors are conjugated.  ``taus`` gives the delays in
    seconds when ``sample_rate`` is known.
    """

    n: int
    q: int = 0
    delays: tuple[int, ...] | None = None
    sample_rate: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"lag order n={self.n} must be >= 1")
        if not 0 <= self.q <= self.n:
            raise ConfigurationError(f"q={self.q} outside [0, {self.n}]")
        d = (0,) * self.n if self.delays is None else tuple(int(v) for v in self.delays)
        if self.delays is not None and any(int(v) != v for v in self.delays):
            raise ConfigurationError("delays must be whole samples; use LagSpec.from_seconds")
        if len(d) != self.n:
            raise ConfigurationError(f"{len(d)} delays given for order {self.n}")
        object.__setattr__(self, "delays", d)

    @classmethod
    def from_seconds(cls, n: int, q: int, taus, sample_rate: float) -> "LagSpec":
        """Quantize delays in seconds to the nearest whole sample."""
        taus = [0.0] * n if taus is None else list(taus)
        d = tuple(int(round(t * sample_rate)) for t in taus)
        return cls(n, q, d, float(sample_rate))

    @property
    def taus(self) -> tuple[float, ...]:
        if self.sample_rate is None:
            raise ConfigurationError("LagSpec has no sample_rate; delays are only known in samples")
        return tuple(d / self.sample_rate for d in self.delays)

    @property
    def distinct_delays(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.delays)))

    @property
    def factor_channels(self) -> tuple[int, ...]:
        pos = {d: i for i, d in enumerate(self.distinct_delays)}
        return tuple(pos[d] for d in self.delays)

    @property
    def window(self) -> tuple[int, int]:
        """(d_max, d_min); valid output indices are d_max .. L-1+d_min."""
        return max(self.delays), min(self.delays)

    def sub(self, block) -> "LagSpec":
        """Lag spec of one partition block (1-based factor indices), conjugated factors first."""
        conj = [self.delays[i - 1] for i in block if i <= self.q]
        plain = [self.delays[i - 1] for i in block if i > self.q]
        return LagSpec(len(block), len(conj), tuple(sorted(conj) + sorted(plain)), self.sample_rate)


@dataclass(frozen=True, eq=False)
class NonuniformStream:
    values: np.ndarray
    sample_indices: np.ndarray
    sample_rate: float
    gamma: float
    length: int
    valid: np.ndarray | None = None
    delay: int = 0
    mask_seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        idx = np.asarray(self.sample_indices, dtype=np.int64)
        if v.ndim != 1 or idx.ndim != 1 or v.shape != idx.shape:
            raise ShapeError(f"values {v.shape} and indices {idx.shape} must be equal-length 1-D arrays")
        if idx.size and (idx[0] < 0 or idx[-1] >= self.length):
            raise ShapeError(f"sample indices must lie in [0, {self.length})")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise ShapeError("sample indices must be strictly increasing")
        ok = np.ones(v.shape, dtype=bool) if self.valid is None else np.asarray(self.valid, dtype=bool)
        if ok.shape != v.shape:
            raise ShapeError("valid flags must match values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sample_indices", idx)
        object.__setattr__(self, "valid", ok)

    def __len__(self):
        return self.values.shape[0]

    @property
    def P(self) -> int:
        return len(self)

    @property
    def times(self) -> np.ndarray:
        return self.sample_indices / self.sample_rate


def apply_mask(x: ComplexSeries, mask: SamplingMask, delay_samples: int = 0) -> NonuniformStream:
    """Sample ``x`` delayed by ``delay_samples`` at the mask's retained instants.

    ``x`` may start after t=0 (e.g. a trimmed uniform lag product); its
    samples are then placed on the mask grid by their start index.
    """
    if int(delay_samples) != delay_samples:
        raise ConfigurationError("delay must be a whole number of samples")
    d = int(delay_samples)
    off = x.start_index
    if off < 0 or off + len(x) > mask.L:
        raise ShapeError(f"series covering [{off}, {off + len(x)}) does not fit mask length {mask.L}")
    if off == 0 and len(x) != mask.L and not x.meta.get("windowed"):
        raise ShapeError(f"series length {len(x)} != mask length {mask.L}")
    m = mask.indices
    src = m - d - off
    ok = (src >= 0) & (src < len(x))
    vals = np.zeros(m.shape[0], dtype=np.complex128)
    vals[ok] = x.samples[src[ok]]
    return NonuniformStream(vals, m, x.sample_rate, mask.gamma, mask.L, ok, d, mask.seed)


def acquire(x: ComplexSeries, mask: SamplingMask, spec: LagSpec) -> list[NonuniformStream]:
    """One channel per distinct delay of ``spec``, all on the same clock."""
    return [apply_mask(x, mask, d) for d in spec.distinct_delays]


def _check_clock(channels):
    ref = channels[0]
    for ch in channels[1:]:
        if (ch.length != ref.length or ch.sample_rate != ref.sample_rate
                or not np.array_equal(ch.sample_indices, ref.sample_indices)):
            raise ClockMismatchError("channels were not sampled on a common clock")


def lag_product_nonuniform(channels, spec: LagSpec) -> NonuniformStream:
    """w_lag[k] = prod_i w_{ch_i}[k] (first q conjugated), dropping edge-invalid entries.

    ``channels`` holds one stream per distinct delay of ``spec``; the stream
    for each factor is found by its ``delay``.
    """
    channels = list(channels)
    if not channels:
        raise ConfigurationError("no channels supplied")
    _check_clock(channels)
    by_delay = {}
    for ch in channels:
        by_delay.setdefault(ch.delay, ch)
    missing = sorted(set(spec.delays) - set(by_delay))
    if missing:
        raise ConfigurationError(f"no channel for delay(s) {missing}")
    order = spec.distinct_delays
    vals = np.stack([by_delay[d].values for d in order])
    valid = np.stack([by_delay[d].valid for d in order])
    out, ok = kernels.lag_product(vals, valid, np.asarray(spec.factor_channels, dtype=np.int64), spec.q)
    ref = channels[0]
    return NonuniformStream(out[ok], ref.sample_indices[ok], ref.sample_rate, ref.gamma,
                            ref.length, None, 0, ref.mask_seed)


def lag_product_uniform(x: ComplexSeries, spec: LagSpec) -> ComplexSeries:
    """Full-rate lag product over the window where every factor is in range."""
    L = len(x)
    d_max, d_min = spec.window
    if d_max - d_min >= L:
        raise ConfigurationError(f"delay spread {d_max - d_min} samples exceeds record length {L}")
    if x.start_index != 0:
        raise ConfigurationError("lag_product_uniform expects a series starting at t=0")
    m = np.arange(d_max, L + d_min)
    rows = np.stack([x.samples[m - d] for d in spec.distinct_delays])
    valid = np.ones(rows.shape, dtype=bool)
    out, _ = kernels.lag_product(rows, valid, np.asarray(spec.factor_channels, dtype=np.int64), spec.q)
    return ComplexSeries(out, x.sample_rate, d_max / x.sample_rate, meta=dict(x.meta, windowed=True))
