"""Compressive cyclic moments and cumulants, plus finite-window bias and variance probes.

Moments are projections of block lag products at candidate cycle
frequencies, rescaled by 1/gamma.  Cumulants are assembled from those
rescaled moments by the partition sum; an assembled cumulant is never
rescaled again.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, IncompleteInputError
from .partitions import block_signature, enumerate_partitions, frequency_sum_tuples
from .sampling import LagSpec, NonuniformStream, acquire, lag_product_nonuniform, make_mask
from .signal_synth import SignalParams, generate_signal
from .spectral import CfarConfig, cfar_detect, project_at_frequencies, project_unrescaled, zero_padded_dft

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CyclicStatEstimate:
    kind: str
    n: int
    q: int
    taus: tuple[float, ...]
    freq: float
    value: complex
    gamma: float
    T_hat: float
    rescaled: bool = True
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("moment", "cumulant"):
            raise ConfigurationError(f"unknown estimate kind {self.kind!r}")

    def as_row(self) -> dict:
        row = {"kind": self.kind, "n": self.n, "q": self.q}
        for i, t in enumerate(self.taus, start=1):
            row[f"tau_{i}"] = t
        row.update(freq_hz=self.freq, re=self.value.real, im=self.value.imag,
                   gamma=self.gamma, T_hat=self.T_hat, seed=self.seed)
        return row


@dataclass(frozen=True)
class CandidateFrequencyPlan:
    """Candidate cycle frequencies per block signature (n_i, q_i).

    Candidates are (n_i - 2 q_i) df + k/T for |k| <= K, restricted to the
    open Nyquist band.
    """

    candidates: Mapping[tuple[int, int], tuple[float, ...]]
    beta: float
    K: int = 6

    def __post_init__(self):
        if self.K < 0:
            raise ConfigurationError("K must be >= 0")

    @classmethod
    def build(cls, n: int, q: int, carrier_offset: float, symbol_period: float,
              sample_rate: float, harmonic: int = 0, K: int = 6) -> "CandidateFrequencyPlan":
        if K < 0:
            raise ConfigurationError("K must be >= 0")
        nyq = sample_rate / 2
        cands = {}
        for n_i in range(1, n + 1):
            for q_i in range(0, min(n_i, q) + 1):
                base = (n_i - 2 * q_i) * carrier_offset
                fr = [base + k / symbol_period for k in range(-K, K + 1)]
                cands[(n_i, q_i)] = tuple(f for f in fr if abs(f) < nyq)
        beta = (n - 2 * q) * carrier_offset + harmonic / symbol_period
        return cls(cands, beta, K)

    @classmethod
    def for_signal(cls, params: SignalParams, n: int, q: int, harmonic: int = 0, K: int = 6):
        return cls.build(n, q, params.carrier_offset, params.symbol_period, params.sample_rate, harmonic, K)

    def for_block(self, n_i: int, q_i: int) -> tuple[float, ...]:
        try:
            return self.candidates[(n_i, q_i)]
        except KeyError:
            raise IncompleteInputError(f"candidate plan has no entry for block signature ({n_i}, {q_i})") from None


def estimate_compressive_cyclic_moment(w_lag: NonuniformStream, alpha: float, gamma: float | None = None,
                                       n: int = 0, q: int = 0, taus=()) -> CyclicStatEstimate:
    """Rescaled projection of a lag-product stream at ``alpha``."""
    if len(w_lag) == 0:
        raise ConfigurationError("empty lag-product stream")
    g = w_lag.gamma if gamma is None else gamma
    val = complex(project_at_frequencies(w_lag, [alpha], g)[0])
    return CyclicStatEstimate("moment", n, q, tuple(taus), float(alpha), val, g,
                              w_lag.length / w_lag.sample_rate, True, w_lag.mask_seed)


@dataclass
class _Needs:
    """Which (signature -> block spec, frequencies) a cumulant requires."""

    blocks: dict = field(default_factory=dict)
    freqs: dict = field(default_factory=dict)
    terms: list = field(default_factory=list)


def _plan_terms(spec: LagSpec, plan: CandidateFrequencyPlan, beta: float, tol: float,
                even_only: bool) -> _Needs:
    needs = _Needs()
    taus = spec.delays
    for part in enumerate_partitions(spec.n, spec.q, even_only=even_only):
        sigs = [block_signature(b, spec.q, taus) for b in part.blocks]
        lists = [plan.for_block(len(b), c) for b, c in zip(part.blocks, part.conj_counts)]
        tuples = frequency_sum_tuples(lists, beta, tol)
        for b, sig in zip(part.blocks, sigs):
            needs.blocks.setdefault(sig, spec.sub(b))
        for tup in tuples:
            for sig, a in zip(sigs, tup):
                needs.freqs.setdefault(sig, set()).add(a)
        needs.terms.append((part, sigs, tuples))
    return needs


def measure_block_moments(channels: Sequence[NonuniformStream], block_specs: Mapping, freqs: Mapping,
                          gamma: float, cfar: CfarConfig | None = None) -> dict:
    """Rescaled compressive moments {(signature, alpha): value}.

    Each distinct block signature gets one lag product.  With ``cfar`` set,
    a moment is kept only if its exact projection passes the CA-CFAR test
    on the block's zero-padded DFT; otherwise it is 0.
    """
    out = {}
    for sig, fr in freqs.items():
        fr = sorted(fr)
        w = lag_product_nonuniform(channels, block_specs[sig])
        raw = project_unrescaled(w, fr)
        vals = raw * (1.0 / gamma)
        if cfar is not None:
            spec = zero_padded_dft(w)
            peaks = cfar_detect(spec, fr, config=cfar, cut_values=raw)
            keep = {p.freq for p in peaks}
            vals = np.array([v if f in keep else 0j for f, v in zip(fr, vals)])
        for f, v in zip(fr, vals):
            out[(sig, f)] = complex(v)
    return out


def assemble_cumulant(moment: Callable[[tuple, float], complex] | Mapping, spec: LagSpec,
                      plan: CandidateFrequencyPlan, beta: float | None = None, tol: float = 0.0,
                      even_only: bool = False) -> complex:
    """sum over partitions of (-1)^(d-1)(d-1)! sum over frequency tuples of prod of block moments."""
    beta = plan.beta if beta is None else beta
    needs = _plan_terms(spec, plan, beta, tol, even_only)
    get = moment if callable(moment) else (lambda sig, a: moment[(sig, a)])
    total = 0j
    for part, sigs, tuples in needs.terms:
        acc = 0j
        for tup in tuples:
            prod = 1 + 0j
            for sig, a in zip(sigs, tup):
                prod *= get(sig, a)
                if prod == 0:
                    break
            acc += prod
        total += part.weight * acc
    return complex(total)


def estimate_compressive_cyclic_cumulant(channels: Sequence[NonuniformStream], spec: LagSpec,
                                         plan: CandidateFrequencyPlan, gamma: float | None = None,
                                         cfar: CfarConfig | None = None, even_only: bool = False,
                                         tol: float | None = None) -> CyclicStatEstimate:
    """Compressive cyclic cumulant of order (n, q) at ``plan.beta``.

    ``tol`` is the frequency-sum tolerance (default half a DFT bin, 1/(2 T_hat)).
    """
    channels = list(channels)
    if not channels:
        raise ConfigurationError("no channels supplied")
    ref = channels[0]
    g = ref.gamma if gamma is None else gamma
    T_hat = ref.length / ref.sample_rate
    tol = 0.5 / T_hat if tol is None else tol
    needs = _plan_terms(spec, plan, plan.beta, tol, even_only)
    moments = measure_block_moments(channels, needs.blocks, needs.freqs, g, cfar)
    total = 0j
    for part, sigs, tuples in needs.terms:
        acc = 0j
        for tup in tuples:
            prod = 1 + 0j
            for sig, a in zip(sigs, tup):
                prod *= moments[(sig, a)]
            acc += prod
        total += part.weight * acc
    taus = spec.taus if spec.sample_rate is not None else tuple(d / ref.sample_rate for d in spec.delays)
    return CyclicStatEstimate("cumulant", spec.n, spec.q, taus, float(plan.beta), complex(total), g,
                              T_hat, True, ref.mask_seed, meta={"moments": moments})


def bias_oracle(spec: LagSpec, alpha: float, T_hat: float, moments: Mapping[float, complex],
                t: float | None = None) -> complex:
    """Predicted mean of the finite-window estimator at ``alpha``.

    ``moments`` maps every cycle frequency b present in the lag product to
    R^b.  The window shrinks to T_eff = T_hat - (max tau - min tau); each
    b != alpha leaks in through sinc((alpha-b) T_eff) with the phase of the
    window centre.  ``t`` defaults to the centre of the sampled record,
    (L-1) Ts / 2.
    """
    fs = spec.sample_rate
    if fs is None:
        raise ConfigurationError("bias_oracle needs a LagSpec with sample_rate")
    taus = spec.taus
    tau_l, tau_r = max(taus), min(taus)
    T_eff = T_hat + (tau_r - tau_l)
    if t is None:
        t = (round(T_hat * fs) - 1) / (2 * fs)
    total = 0j
    for b, R in moments.items():
        if abs(b - alpha) <= 1e-12 * max(1.0, abs(alpha)):
            total += R * T_eff
            continue
        d = alpha - b
        total += (R * np.exp(-1j * np.pi * d * (tau_l + tau_r)) * T_eff * np.sinc(d * T_eff)
                  * np.exp(-2j * np.pi * d * t))
    return complex(total / T_hat)


@dataclass(frozen=True)
class VarianceRow:
    gamma: float
    T_hat: float
    mean: complex
    variance: float
    variance_se: float
    trials: int


def _variance_trial(params, spec, alpha, gamma, seed):
    ss = np.random.SeedSequence(seed)
    sig_seed, mask_seed = (int(s.generate_state(1, np.uint64)[0]) for s in ss.spawn(2))
    x = generate_signal(params, sig_seed)
    mask = make_mask(params.length, gamma, mask_seed)
    w = lag_product_nonuniform(acquire(x, mask, spec), spec)
    return complex(project_at_frequencies(w, [alpha], gamma)[0])


def variance_probe(params: SignalParams, spec: LagSpec, alpha: float, gammas: Sequence[float],
                   trials: int, base_seed: int = 0) -> list[VarianceRow]:
    """Empirical variance of the rescaled moment estimator across symbol draws and masks.

    The same per-trial seeds are used for every gamma, so rows differ only in
    the compression rate.
    """
    if trials < 100:
        raise ConfigurationError("variance_probe needs at least 100 trials")
    rows = []
    for g in gammas:
        vals = np.array([_variance_trial(params, spec, alpha, g, (base_seed, i)) for i in range(trials)])
        dev = np.abs(vals - vals.mean()) ** 2
        var = float(dev.sum() / (trials - 1))
        se = float(dev.std(ddof=1) / math.sqrt(trials))
        rows.append(VarianceRow(float(g), params.duration, complex(vals.mean()), var, se, trials))
    return rows
