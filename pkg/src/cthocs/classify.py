"""Single-feature modulation classifier and its error metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, UndefinedNMSEError
from .estimators import CandidateFrequencyPlan, estimate_compressive_cyclic_cumulant
from .sampling import LagSpec, NonuniformStream
from .signal_synth import Modulation, SignalParams, alphabet_for, theoretical_feature
from .spectral import CfarConfig

log = logging.getLogger(__name__)

CLASSES = (Modulation.BPSK, Modulation.QPSK, Modulation.PSK8, Modulation.QAM16)


@dataclass(frozen=True)
class FeatureValue:
    value: float
    label: str | None = None
    n: int = 4
    q: int = 0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise ConfigurationError(f"feature must be finite and >= 0, got {self.value}")


def extract_feature(streams: Sequence[NonuniformStream], params: SignalParams, gamma: float | None = None,
                    cfar: CfarConfig | None = CfarConfig(), K: int = 6, even_only: bool = True,
                    label: str | None = None) -> FeatureValue:
    """|C^{beta}_{4,0}(0)| at beta = 4 df from a single zero-delay channel."""
    spec = LagSpec(4, 0, None, params.sample_rate)
    if any(s.delay != 0 for s in streams):
        raise ConfigurationError("the feature uses a single zero-delay channel")
    plan = CandidateFrequencyPlan.for_signal(params, 4, 0, 0, K)
    est = estimate_compressive_cyclic_cumulant(streams, spec, plan, gamma, cfar, even_only)
    return FeatureValue(abs(est.value), label, 4, 0, plan.beta)


def theory_table(params: SignalParams, classes=CLASSES) -> list[tuple[str, float]]:
    return [(str(Modulation.parse(c)), theoretical_feature(params, alphabet_for(c))) for c in classes]


def classify_min_distance(feature, theory: Sequence[tuple[str, float]]) -> str:
    """Label whose theoretical feature is nearest; ties go to the first listed."""
    if not theory:
        raise ConfigurationError("empty theory table")
    labels = [lab for lab, _ in theory]
    if len(set(labels)) != len(labels):
        raise ConfigurationError("theory labels must be unique")
    f = feature.value if isinstance(feature, FeatureValue) else float(feature)
    dist = [abs(f - v) for _, v in theory]
    best = min(dist)
    winners = [lab for lab, d in zip(labels, dist) if d == best]
    if len(winners) > 1:
        log.info("classifier tie at feature %r between %s; chose %s", f, winners, winners[0])
    return winners[0]


def nmse(estimates: Sequence[complex], truth: float, N_tr: int | None = None) -> float:
    """(1/N_tr) sum (|est_i| - |truth|)^2 / truth^2."""
    est = np.abs(np.asarray(estimates, dtype=np.complex128))
    N = est.size if N_tr is None else int(N_tr)
    if N < 1 or N != est.size:
        raise ConfigurationError(f"expected {N} estimates, got {est.size}")
    t = abs(truth)
    if t == 0:
        raise UndefinedNMSEError("NMSE is undefined for a zero theoretical value")
    return float(np.sum((est - t) ** 2) / (N * t * t))


@dataclass
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: np.ndarray
    trials_per_class: int

    @classmethod
    def empty(cls, classes, trials_per_class: int) -> "ConfusionMatrix":
        classes = tuple(str(c) for c in classes)
        return cls(classes, np.zeros((len(classes), len(classes)), dtype=np.int64), trials_per_class)

    def add(self, true_label, decided_label):
        self.counts[self.classes.index(str(true_label)), self.classes.index(str(decided_label))] += 1

    def check(self):
        if np.any(self.counts < 0) or np.any(self.counts.sum(axis=1) != self.trials_per_class):
            raise ConfigurationError("confusion rows must sum to trials per class")

    @property
    def pcc(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())

    def to_text(self) -> str:
        w = max(6, max(len(c) for c in self.classes) + 1)
        head = " " * w + "".join(c.rjust(w) for c in self.classes)
        lines = [head]
        for c, row in zip(self.classes, self.counts):
            lines.append(c.rjust(w) + "".join(str(v).rjust(w) for v in row))
        lines.append(f"P_cc = {100 * self.pcc:.1f}%")
        return "\n".join(lines)

    def to_csv(self) -> str:
        rows = ["true\\decided," + ",".join(self.classes)]
        for c, row in zip(self.classes, self.counts):
            rows.append(c + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class NMSEReport:
    modulation: str
    n: int
    q: int
    gamma: float
    symbols: int
    cnr_db: float
    value: float | None
    trials: int
    skipped: str | None = None
    estimates: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("NMSE needs at least one trial")
        if self.value is not None and self.value < 0:
            raise ConfigurationError("NMSE cannot be negative")
