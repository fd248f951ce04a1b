"""Baseband digital QAM/PSK test signals, calibrated noise and theoretical features.

The signal model is

    s(t) = sum_k a s_k p(t - kT - t0) exp(j(2 pi df t + theta))

with IID symbols drawn uniformly from a unit-power constellation and a
raised-cosine pulse truncated to +-``span`` symbol periods.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .partitions import enumerate_partitions, moment_to_cumulant

_U64 = (1 << 64) - 1
# Philox counters are unsigned; symbol index k maps to counter position k + _K_OFFSET
_K_OFFSET = 1 << 62

# symbols processed -> (symbol rate Hz, sample rate Hz) for a 1 s record
STANDARD_SETTINGS = {
    13000: (12999.5625, 131072.0),
    6500: (6499.5625, 65536.0),
    3250: (3249.5625, 32768.0),
    1625: (1624.5625, 16384.0),
    800: (799.5625, 8192.0),
    400: (399.5625, 4096.0),
}
STANDARD_CARRIER_OFFSET = 23.0625
STANDARD_ROLLOFF = 0.3


class Modulation(str, enum.Enum):
    BPSK = "2PSK"
    QPSK = "4PSK"
    PSK8 = "8PSK"
    QAM16 = "16QAM"

    @classmethod
    def parse(cls, value) -> "Modulation":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        aliases = {
            "BPSK": cls.BPSK, "2PSK": cls.BPSK,
            "QPSK": cls.QPSK, "4PSK": cls.QPSK,
            "8PSK": cls.PSK8, "PSK8": cls.PSK8,
            "16QAM": cls.QAM16, "QAM16": cls.QAM16,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ConfigurationError(f"unknown modulation {value!r}") from None

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SymbolAlphabet:
    name: str
    points: tuple[complex, ...]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        if pts.size == 0:
            raise ConfigurationError("empty constellation")
        power = float(np.mean(np.abs(pts) ** 2))
        if abs(power - 1.0) > 1e-12:
            raise ConfigurationError(f"constellation {self.name} has mean power {power}, expected 1")
        if len(set(np.round(pts, 12))) != pts.size:
            raise ConfigurationError(f"constellation {self.name} has repeated points")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.complex128)

    def __len__(self):
        return len(self.points)


def _normalized(points) -> tuple[complex, ...]:
    pts = np.asarray(points, dtype=np.complex128)
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return tuple(complex(p) for p in pts)


@lru_cache(maxsize=None)
def alphabet_for(modulation) -> SymbolAlphabet:
    """Unit-power constellation for one of the shipped modulations."""
    mod = Modulation.parse(modulation)
    if mod is Modulation.BPSK:
        pts = (1 + 0j, -1 + 0j)
    elif mod is Modulation.QPSK:
        pts = tuple(complex(np.exp(1j * (np.pi / 4 + np.pi / 2 * k))) for k in range(4))
    elif mod is Modulation.PSK8:
        pts = tuple(complex(np.exp(1j * np.pi / 4 * k)) for k in range(8))
    else:
        levels = (-3, -1, 1, 3)
        pts = _normalized([complex(i, q) for i in levels for q in levels])
    return SymbolAlphabet(mod.value, pts)


@dataclass(frozen=True)
class SignalParams:
    """Parameters of one synthesized record.  Times in seconds, rates in Hz."""

    modulation: Modulation
    symbol_period: float
    sample_rate: float
    duration: float = 1.0
    amplitude: float = 1.0
    carrier_offset: float = 0.0
    carrier_phase: float = 0.0
    timing_offset: float = 0.0
    rolloff: float = STANDARD_ROLLOFF
    pulse: str = "rc"
    span: int = 8

    def __post_init__(self):
        object.__setattr__(self, "modulation", Modulation.parse(self.modulation))
        self.validate()

    def validate(self):
        for name in ("symbol_period", "sample_rate", "duration"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {v}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigurationError(f"rolloff {self.rolloff} outside [0, 1]")
        if abs(self.carrier_offset) * self.symbol_period >= 0.1:
            raise ConfigurationError("carrier offset must be well below the symbol rate (|df*T| < 0.1)")
        if self.pulse not in ("rc", "rect"):
            raise ConfigurationError(f"unknown pulse shape {self.pulse!r}")
        if self.span < 1:
            raise ConfigurationError("pulse span must be at least one symbol")
        n = self.sample_rate * self.duration
        if abs(n - round(n)) > 1e-6 or round(n) < 1:
            raise ConfigurationError(f"sample_rate*duration = {n} is not a positive integer")

    @property
    def length(self) -> int:
        return int(round(self.sample_rate * self.duration))

    @property
    def symbol_rate(self) -> float:
        return 1.0 / self.symbol_period

    @property
    def alphabet(self) -> SymbolAlphabet:
        return alphabet_for(self.modulation)

    def with_(self, **kw) -> "SignalParams":
        return replace(self, **kw)

    @classmethod
    def standard(cls, modulation, symbols: int = 3250, **kw) -> "SignalParams":
        """Standard simulation settings: a=1, df=23.0625 Hz, RC rolloff 0.3, 1 s record."""
        try:
            rate, fs = STANDARD_SETTINGS[int(symbols)]
        except KeyError:
            raise ConfigurationError(
                f"no standard setting for {symbols} symbols; choose from {sorted(STANDARD_SETTINGS)}"
            ) from None
        base = dict(
            modulation=modulation,
            symbol_period=1.0 / rate,
            sample_rate=fs,
            duration=1.0,
            carrier_offset=STANDARD_CARRIER_OFFSET,
        )
        base.update(kw)
        return cls(**base)


@dataclass(frozen=True, eq=False)
class ComplexSeries:
    """Uniformly sampled complex baseband record."""

    samples: np.ndarray
    sample_rate: float
    start_time: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 1 or s.size == 0:
            raise ConfigurationError("ComplexSeries needs a non-empty 1-D sample array")
        if not np.all(np.isfinite(s)):
            raise ConfigurationError("ComplexSeries samples must be finite")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) / self.sample_rate

    @property
    def start_index(self) -> int:
        """Index of the first sample on the sample_rate grid anchored at t=0."""
        return int(round(self.start_time * self.sample_rate))

    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


def draw_symbols(alphabet: SymbolAlphabet, seed: int, k_start: int, count: int) -> np.ndarray:
    """Symbols for indices k_start .. k_start+count-1, keyed by (seed, k)."""
    first = k_start + _K_OFFSET
    block, skip = divmod(first, 4)
    bitgen = np.random.Philox(key=int(seed) & _U64, counter=block)
    raw = bitgen.random_raw(skip + count)[skip:]
    u = (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    idx = np.minimum((u * len(alphabet)).astype(np.int64), len(alphabet) - 1)
    return alphabet.array[idx]


def symbol_index_range(params: SignalParams) -> tuple[int, int]:
    """First symbol index and count needed to cover the record including pulse tails."""
    T, t0 = params.symbol_period, params.timing_offset
    t_end = (params.length - 1) / params.sample_rate
    reach = params.span + 2 if params.pulse == "rc" else 1
    k_lo = math.floor(-t0 / T) - reach
    k_hi = math.ceil((t_end - t0) / T) + reach
    return k_lo, k_hi - k_lo + 1


def _carrier(params: SignalParams) -> np.ndarray:
    m = np.arange(params.length, dtype=np.float64)
    cyc = params.carrier_offset * m / params.sample_rate
    cyc -= np.floor(cyc)
    return np.exp(1j * (2 * np.pi * cyc + params.carrier_phase))


def generate_signal(params: SignalParams, seed: int) -> ComplexSeries:
    """Noiseless record of the signal model, deterministic in (params, seed)."""
    params.validate()
    k0, count = symbol_index_range(params)
    syms = draw_symbols(params.alphabet, seed, k0, count)
    L = params.length
    if params.pulse == "rc":
        base = kernels.pulse_train(
            syms, k0, params.symbol_period, params.timing_offset,
            params.sample_rate, L, params.span, params.rolloff,
        )
    else:
        t = np.arange(L) / params.sample_rate
        k = np.floor((t - params.timing_offset) / params.symbol_period).astype(np.int64)
        base = syms[k - k0]
    x = params.amplitude * base * _carrier(params)
    return ComplexSeries(x, params.sample_rate, 0.0, meta={"seed": int(seed), "modulation": str(params.modulation)})


def _noise_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & _U64, 0x4E4F495345])


def white_noise(length: int, sample_rate: float, power: float, seed: int) -> ComplexSeries:
    """Circular complex white Gaussian noise with E|n|^2 = power."""
    rng = _noise_rng(seed)
    scale = math.sqrt(power / 2.0)
    n = scale * (rng.standard_normal(length) + 1j * rng.standard_normal(length))
    return ComplexSeries(n, sample_rate, 0.0, meta={"seed": int(seed)})


def add_noise_at_cnr(x: ComplexSeries, cnr_db: float, seed: int) -> ComplexSeries:
    """Add white Gaussian noise so that measured signal power / noise power = 10^(cnr_db/10)."""
    if math.isnan(cnr_db):
        raise ConfigurationError("cnr_db is NaN")
    if math.isinf(cnr_db) and cnr_db > 0:
        return x
    if math.isinf(cnr_db):
        raise ConfigurationError("cnr_db = -inf gives infinite noise power")
    noise_power = x.power() / 10.0 ** (cnr_db / 10.0)
    n = white_noise(len(x), x.sample_rate, noise_power, seed)
    return ComplexSeries(x.samples + n.samples, x.sample_rate, x.start_time, meta=dict(x.meta, cnr_db=cnr_db))


# -- theory ---------------------------------------------------------------

def symbol_moment(alphabet: SymbolAlphabet, n: int, q: int) -> complex:
    """E[s^(n-q) conj(s)^q] averaged exactly over the constellation."""
    s = alphabet.array
    return complex(np.mean(s ** (n - q) * np.conj(s) ** q))


def theoretical_symbol_cumulant(alphabet: SymbolAlphabet, n: int, q: int) -> complex:
    """Symbol cumulant C_{s n,q} from the symbol moments via the partition formula."""
    if n < 1 or not 0 <= q <= n:
        raise ConfigurationError(f"invalid (n, q) = ({n}, {q})")
    return moment_to_cumulant(
        lambda block: symbol_moment(alphabet, len(block), sum(1 for i in block if i <= q)),
        n, q,
    )


def pulse_shape(params: SignalParams, t) -> np.ndarray:
    """p(t) as used by the synthesizer, including truncation."""
    x = np.asarray(t, dtype=np.float64) / params.symbol_period
    if params.pulse == "rect":
        return ((x >= 0) & (x < 1)).astype(np.float64)
    p = np.asarray(kernels.rc_pulse(x, params.rolloff), dtype=np.float64)
    return np.where(np.abs(x) <= params.span, p, 0.0)


def _trapezoid_pulse_integral(params, power, harmonic, pps):
    T = params.symbol_period
    lo, hi = (0.0, 1.0) if params.pulse == "rect" else (-params.span, params.span)
    npts = int(round((hi - lo) * pps)) + 1
    x = np.linspace(lo, hi, npts)
    p = pulse_shape(params, x * T) if params.pulse == "rc" else np.ones_like(x)
    f = p ** power * np.exp(-2j * np.pi * harmonic * x)
    dx = (hi - lo) / (npts - 1)
    return T * dx * (f.sum() - 0.5 * (f[0] + f[-1]))


@lru_cache(maxsize=4096)
def _pulse_integral_cached(params, power, harmonic, rtol):
    pps = 64
    prev = _trapezoid_pulse_integral(params, power, harmonic, pps)
    while pps < 1 << 14:
        pps *= 2
        cur = _trapezoid_pulse_integral(params, power, harmonic, pps)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300) * 1e-3 or abs(cur) < 1e-15 * params.symbol_period:
            return complex(cur)
        prev = cur
    return complex(prev)


def pulse_power_integral(params: SignalParams, power: int, harmonic: int = 0, rtol: float = 1.0) -> complex:
    """Integral of p(t)^power exp(-j 2 pi harmonic t / T) dt on the truncated pulse.

    Trapezoid rule starting at 64 points per symbol, doubled until successive
    refinements differ by less than ``rtol`` * 1e-3 (relative).
    """
    if params.pulse == "rect":
        return complex(params.symbol_period if harmonic == 0 else 0.0)
    return _pulse_integral_cached(params, int(power), int(harmonic), float(rtol))


def theoretical_cyclic_cumulant(params: SignalParams, n: int, q: int, harmonic: int = 0,
                                alphabet: SymbolAlphabet | None = None) -> complex:
    """Cyclic cumulant at beta = (n-2q) df + harmonic/T for zero delays."""
    alphabet = alphabet or params.alphabet
    c_s = theoretical_symbol_cumulant(alphabet, n, q)
    if c_s == 0:
        return 0j
    T = params.symbol_period
    phase = np.exp(1j * params.carrier_phase * (n - 2 * q)) * np.exp(
        -2j * np.pi * harmonic * params.timing_offset / T)
    integral = pulse_power_integral(params, n, harmonic)
    return complex(params.amplitude ** n / T * c_s * phase * integral)


def cycle_frequency(params: SignalParams, n: int, q: int, harmonic: int = 0) -> float:
    return (n - 2 * q) * params.carrier_offset + harmonic / params.symbol_period


def theoretical_cyclic_moment(params: SignalParams, n: int, q: int, harmonic: int = 0,
                              max_harmonic: int = 6, alphabet: SymbolAlphabet | None = None) -> complex:
    """Cyclic moment at (n-2q) df + harmonic/T, zero delays.

    Built from the signal cyclic cumulants by the cumulant-to-moment sum:
    products of block cumulants over all partitions, with block harmonics
    summing to ``harmonic``.  Block harmonics are limited to |k| <= max_harmonic.
    """
    alphabet = alphabet or params.alphabet
    total = 0j
    ks = range(-max_harmonic, max_harmonic + 1)
    for part in enumerate_partitions(n, q):
        sigs = part.signatures()
        for combo in itertools.product(ks, repeat=len(sigs) - 1):
            last = harmonic - sum(combo)
            if abs(last) > max_harmonic:
                continue
            prod = 1 + 0j
            for (n_i, q_i), k_i in zip(sigs, combo + (last,)):
                prod *= theoretical_cyclic_cumulant(params, n_i, q_i, k_i, alphabet)
                if prod == 0:
                    break
            total += prod
    return complex(total)


def theoretical_feature(params: SignalParams, alphabet: SymbolAlphabet | None = None) -> float:
    """(a^4/T) |C_{s 4,0}| |integral p(t)^4 dt|."""
    alphabet = alphabet or params.alphabet
    c40 = abs(theoretical_symbol_cumulant(alphabet, 4, 0))
    if c40 < 1e-13:
        return 0.0
    return float(params.amplitude ** 4 / params.symbol_period * c40
                 * abs(pulse_power_integral(params, 4, 0)))
