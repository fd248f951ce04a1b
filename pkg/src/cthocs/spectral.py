"""Zero-padded DFT of nonuniform streams, exact-frequency projection, CA-CFAR and RIP bound check.

Spectra use the 1/L convention, so a full-rate unit tone on a bin gives a bin
of magnitude 1 and spectral values read directly as time averages.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, ShapeError
from .sampling import NonuniformStream, SamplingMask
from .signal_synth import ComplexSeries

ALL = "all"


@dataclass(frozen=True, eq=False)
class Spectrum:
    bins: np.ndarray
    bin_spacing: float
    scaling: str = "1/L"

    @property
    def L(self) -> int:
        return self.bins.shape[0]

    @property
    def freqs(self) -> np.ndarray:
        k = np.arange(self.L)
        k = np.where(k >= (self.L + 1) // 2, k - self.L, k)
        return k * self.bin_spacing

    def bin_of(self, freq: float) -> int:
        return int(round(freq / self.bin_spacing)) % self.L

    def value_at(self, freq: float) -> complex:
        return complex(self.bins[self.bin_of(freq)])


@dataclass(frozen=True)
class Peak:
    freq: float
    value: complex
    magnitude: float
    statistic: float


@dataclass(frozen=True)
class PeakList:
    entries: tuple[Peak, ...] = ()

    def __post_init__(self):
        fs = [p.freq for p in self.entries]
        if len(set(fs)) != len(fs):
            raise ConfigurationError("peak frequencies must be unique")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def freqs(self) -> list[float]:
        return [p.freq for p in self.entries]

    def get(self, freq: float, tol: float = 1e-9):
        for p in self.entries:
            if abs(p.freq - freq) <= tol:
                return p
        return None


def _as_scattered(w: NonuniformStream, L: int) -> np.ndarray:
    if len(w) and w.sample_indices[-1] >= L:
        raise ShapeError(f"stream index {w.sample_indices[-1]} outside DFT length {L}")
    buf = np.zeros(L, dtype=np.complex128)
    buf[w.sample_indices] = w.values
    return buf


def zero_padded_dft(w: NonuniformStream, L: int | None = None) -> Spectrum:
    """Scatter the stream into a length-L zero vector and take its DFT / L."""
    L = w.length if L is None else int(L)
    buf = _as_scattered(w, L)
    return Spectrum(np.fft.fft(buf) / L, w.sample_rate / L)


def project_unrescaled(w: NonuniformStream, alphas: Iterable[float]) -> np.ndarray:
    """(1/L) sum_k w[k] exp(-j 2 pi alpha t_k) at each alpha (no 1/gamma)."""
    alphas = np.atleast_1d(np.asarray(list(alphas) if not isinstance(alphas, np.ndarray) else alphas,
                                      dtype=np.float64))
    if alphas.size == 0:
        return np.zeros(0, dtype=np.complex128)
    nyq = w.sample_rate / 2
    if np.any(np.abs(alphas) >= nyq):
        raise ConfigurationError(f"frequency outside Nyquist range +-{nyq} Hz")
    return kernels.project(w.values, w.sample_indices, alphas, 1.0 / w.sample_rate) / w.length


def project_at_frequencies(w: NonuniformStream, alphas: Iterable[float], gamma: float | None = None) -> np.ndarray:
    """(1/(gamma L)) sum_k w[k] exp(-j 2 pi alpha t_k) at each alpha."""
    g = w.gamma if gamma is None else gamma
    return project_unrescaled(w, alphas) * (1.0 / g)


def project_at_frequency(w: NonuniformStream, alpha: float, gamma: float | None = None) -> complex:
    return complex(project_at_frequencies(w, [alpha], gamma)[0])


@dataclass(frozen=True)
class CfarConfig:
    """Cell-averaging CFAR geometry and false-alarm rate."""

    pfa: float = 1e-3
    guard: int = 2
    train: int = 16
    neighborhood: int = 3

    def __post_init__(self):
        if not 0.0 < self.pfa < 1.0:
            raise ConfigurationError(f"pfa={self.pfa} outside (0, 1)")
        if self.guard < 0 or self.train < 1 or self.neighborhood < 0:
            raise ConfigurationError("CFAR guard/train/neighborhood must be non-negative (train >= 1)")

    @property
    def N(self) -> int:
        return 2 * self.train

    @property
    def factor(self) -> float:
        return self.N * (self.pfa ** (-1.0 / self.N) - 1.0)

    @property
    def min_length(self) -> int:
        return 2 * (self.guard + self.train) + 1


def cfar_detect(spec: Spectrum, candidates=ALL, pfa: float | None = None,
                config: CfarConfig | None = None, cut_values: Sequence[complex] | None = None) -> PeakList:
    """Test bins (or candidate frequencies) against the CA-CFAR threshold.

    For a candidate frequency the cell under test is its nearest bin unless
    ``cut_values`` supplies the exact projection value (in bin units, i.e.
    unrescaled).  A detection also has to exceed every bin within
    ``neighborhood`` bins, other than those closer than one bin to the
    tested frequency.
    """
    cfg = config or CfarConfig()
    if pfa is not None:
        cfg = CfarConfig(pfa, cfg.guard, cfg.train, cfg.neighborhood)
    if spec.L < cfg.min_length:
        raise ConfigurationError(f"spectrum of {spec.L} bins is shorter than the {cfg.min_length}-cell CFAR window")
    power = np.abs(spec.bins) ** 2
    if isinstance(candidates, str):
        if candidates != ALL:
            raise ConfigurationError(f"unknown candidate selector {candidates!r}")
        bins = np.arange(spec.L)
        freqs = spec.freqs
        cut = spec.bins
    else:
        freqs = np.asarray(list(candidates), dtype=np.float64)
        nyq = spec.L * spec.bin_spacing / 2
        if np.any(np.abs(freqs) >= nyq):
            raise ConfigurationError("candidate frequency outside Nyquist range")
        bins = np.array([spec.bin_of(f) for f in freqs], dtype=np.int64)
        if cut_values is None:
            cut = spec.bins[bins]
        else:
            cut = np.asarray(cut_values, dtype=np.complex128)
            if cut.shape != freqs.shape:
                raise ShapeError("cut_values must match candidates")
    if bins.size == 0:
        return PeakList(())
    noise = kernels.cfar_noise(power, bins, cfg.guard, cfg.train)
    cut_pow = np.abs(cut) ** 2
    thresh = cfg.factor * noise
    hit = cut_pow > thresh
    if cfg.neighborhood > 0:
        pos = freqs / spec.bin_spacing
        for i in np.flatnonzero(hit):
            nb = np.arange(int(math.floor(pos[i])) - cfg.neighborhood, int(math.ceil(pos[i])) + cfg.neighborhood + 1)
            far = nb[np.abs(nb - pos[i]) >= 1.0 - 1e-9]
            far = far[np.abs(far - pos[i]) <= cfg.neighborhood + 1e-9]
            if far.size and cut_pow[i] <= power[far % spec.L].max():
                hit[i] = False
    with np.errstate(divide="ignore"):
        stat = np.where(noise > 0, cut_pow / noise, np.inf)
    seen = set()
    out = []
    for i in np.flatnonzero(hit):
        f = float(freqs[i])
        if f in seen:
            continue
        seen.add(f)
        out.append(Peak(f, complex(cut[i]), float(abs(cut[i])), float(stat[i])))
    return PeakList(tuple(out))


# -- restricted isometry check ---------------------------------------------

MAX_RIP_L = 64
MAX_RIP_S = 3


@dataclass(frozen=True, eq=False)
class RipReport:
    s: int
    m: int
    delta: float
    lhs: np.ndarray
    rhs: float
    eta_s_norm: float
    eta_t_inf: float

    @property
    def holds(self) -> bool:
        return bool(np.all(self.lhs <= self.rhs * (1 + 1e-9) + 1e-12))

    @property
    def max_error(self) -> float:
        return float(self.lhs.max())


def _unitary_dft(L: int) -> np.ndarray:
    """Phi with y = Phi eta, eta = Phi^H y = fft(y)/sqrt(L)."""
    k = np.arange(L)
    return np.exp(2j * np.pi * np.outer(k, k) / L) / math.sqrt(L)


def measurement_matrix(mask: SamplingMask) -> np.ndarray:
    """A = sqrt(L/P) R Phi."""
    L, P = mask.L, mask.P
    return math.sqrt(L / P) * _unitary_dft(L)[mask.indices]


def isometry_constant(A: np.ndarray, order: int) -> float:
    """max over column subsets S with |S|=order of ||A_S^H A_S - I||_2 (exhaustive)."""
    L = A.shape[1]
    order = min(order, L)
    G = A.conj().T @ A - np.eye(L)
    subsets = np.array(list(itertools.combinations(range(L), order)), dtype=np.int64)
    sub = G[subsets[:, :, None], subsets[:, None, :]]
    ev = np.linalg.eigvalsh(sub)
    return float(np.abs(ev).max())


def rip_bound_check(y_lag: ComplexSeries, mask: SamplingMask, s: int) -> RipReport:
    """Exact per-bin error of the zero-padded DFT estimate against its RIP bound.

    eta = Phi^H y and eta_hat = A^H w.  With eta_s the s largest coefficients
    and eta_t the residue split into m-1 blocks of size s, every bin obeys
    |eta_hat - eta| <= delta ||eta_s||_2 + delta (m-1) sqrt(s) ||eta_t||_inf,
    delta being the isometry constant over (s+1)-column subsets.
    """
    L = len(y_lag)
    if L > MAX_RIP_L or not 1 <= s <= MAX_RIP_S or s >= L:
        raise ConfigurationError(f"exact RIP check limited to L <= {MAX_RIP_L}, 1 <= s <= {MAX_RIP_S}, s < L")
    if mask.L != L:
        raise ShapeError(f"mask length {mask.L} != series length {L}")
    y = y_lag.samples
    eta = np.fft.fft(y) / math.sqrt(L)
    A = measurement_matrix(mask)
    w = y[mask.indices]
    eta_hat = A.conj().T @ w
    order = np.argsort(-np.abs(eta), kind="stable")
    top, rest = order[:s], order[s:]
    m = 1 + math.ceil((L - s) / s)
    delta = isometry_constant(A, s + 1)
    es = float(np.linalg.norm(eta[top]))
    et = float(np.abs(eta[rest]).max()) if rest.size else 0.0
    rhs = delta * es + delta * (m - 1) * math.sqrt(s) * et
    return RipReport(s, m, delta, np.abs(eta_hat - eta), rhs, es, et)
