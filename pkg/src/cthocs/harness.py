"""Monte Carlo driver: NMSE sweeps and four-class classification runs.

Every trial is seeded from ``SeedSequence(base_seed, spawn_key=...)`` keyed
on the experiment kind, the cell coordinates and the trial index, so results
do not depend on execution order or worker count.  The symbols and noise of
a trial are shared by all compression rates of that trial; each rate gets
its own mask.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import (CLASSES, ConfusionMatrix, NMSEReport, classify_min_distance, extract_feature,
                       nmse, theory_table)
from .errors import ConfigurationError
from .estimators import CandidateFrequencyPlan, estimate_compressive_cyclic_cumulant
from .sampling import LagSpec, acquire, make_mask
from .signal_synth import (STANDARD_SETTINGS, Modulation, SignalParams, add_noise_at_cnr, generate_signal,
                           theoretical_cyclic_cumulant)
from .spectral import CfarConfig

log = logging.getLogger(__name__)

DEFAULT_PFA = 1e-2
_KIND_NMSE, _KIND_CLASSIFY = 0, 1
_STREAM_SIGNAL, _STREAM_NOISE, _STREAM_MASK = 0, 1, 2


def _tuple_of(v, conv):
    if isinstance(v, str):
        v = [s for s in v.replace(";", ",").split(",") if s.strip()]
    return tuple(conv(s.strip() if isinstance(s, str) else s) for s in v)


def _float(v):
    s = str(v).strip().lower()
    if s in ("inf", "+inf", "infinity", "noiseless", "none"):
        return math.inf
    return float(s)


def _order(v):
    if isinstance(v, str):
        n, q = v.replace("/", ":").split(":")
        return (int(n), int(q))
    return (int(v[0]), int(v[1]))


@dataclass(frozen=True)
class ExperimentConfig:
    modulations: tuple = tuple(str(c) for c in CLASSES)
    symbols: tuple = (13000, 6500, 3250, 1625, 800, 400)
    sample_rates: tuple | None = None
    cnrs_db: tuple = (math.inf, 9.0, 6.0, 3.0)
    gammas: tuple = (1.0, 0.5, 0.25, 0.1)
    trials: int = 50
    base_seed: int = 0
    orders: tuple = ((4, 0),)
    K: int = 6
    pfa: float = DEFAULT_PFA
    cfar: bool = True
    even_only: bool = True
    workers: int = 1

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)
        set_("modulations", tuple(str(Modulation.parse(m)) for m in _tuple_of(self.modulations, str)))
        set_("symbols", _tuple_of(self.symbols, int))
        if self.sample_rates is None:
            missing = [s for s in self.symbols if s not in STANDARD_SETTINGS]
            if missing:
                raise ConfigurationError(f"no default sample rate for symbol counts {missing}")
            set_("sample_rates", tuple(STANDARD_SETTINGS[s][1] for s in self.symbols))
        else:
            set_("sample_rates", _tuple_of(self.sample_rates, float))
        set_("cnrs_db", _tuple_of(self.cnrs_db, _float))
        set_("gammas", _tuple_of(self.gammas, float))
        set_("orders", tuple(_order(o) for o in (self.orders.split(",") if isinstance(self.orders, str)
                                                  else self.orders)))
        for k in ("trials", "base_seed", "K", "workers"):
            set_(k, int(getattr(self, k)))
        set_("pfa", float(self.pfa))
        for k in ("cfar", "even_only"):
            v = getattr(self, k)
            if isinstance(v, str):
                v = v.strip().lower() in ("1", "true", "yes", "on")
            set_(k, bool(v))
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if len(self.symbols) != len(self.sample_rates):
            raise ConfigurationError("symbols and sample_rates must be aligned")
        if not self.modulations or not self.symbols or not self.gammas or not self.cnrs_db:
            raise ConfigurationError("every sweep axis needs at least one value")
        for g in self.gammas:
            if not 0 < g <= 1:
                raise ConfigurationError(f"gamma {g} outside (0, 1]")
        for c in self.cnrs_db:
            if math.isnan(c):
                raise ConfigurationError("CNR may not be NaN")
        if self.K < 0:
            raise ConfigurationError("K must be >= 0")
        if not 0 < self.pfa < 1:
            raise ConfigurationError("pfa must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        for s, fs in zip(self.symbols, self.sample_rates):
            if s in STANDARD_SETTINGS and STANDARD_SETTINGS[s][1] != fs:
                log.warning("sample rate %s for %s symbols differs from the default", fs, s)

    # -- construction ------------------------------------------------------
    @classmethod
    def from_mapping(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Flat ``key = value`` file; ``#`` starts a comment, lists are comma separated."""
        d = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            d[k] = v
        return cls.from_mapping(d)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["cnrs_db"] = [c if math.isfinite(c) else "inf" for c in self.cnrs_db]
        d["orders"] = [list(o) for o in self.orders]
        d.pop("workers")
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def cfar_config(self) -> CfarConfig | None:
        return CfarConfig(pfa=self.pfa) if self.cfar else None

    def params(self, modulation, symbols: int, sample_rate: float) -> SignalParams:
        return SignalParams.standard(modulation, symbols, sample_rate=sample_rate)


def derive_seed(base_seed: int, *key: int) -> int:
    """64-bit seed from (base_seed, key...) via SeedSequence spawn keys."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class RunRecord:
    config_hash: str
    seeds: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    wall_clock: float = 0.0


def _cnr_label(c: float) -> str:
    return "inf" if math.isinf(c) else f"{c:g}"


def _trial_signal(cfg, kind, mi, si, ci, trial):
    mod, sym, fs, cnr = cfg.modulations[mi], cfg.symbols[si], cfg.sample_rates[si], cfg.cnrs_db[ci]
    p = cfg.params(mod, sym, fs)
    sseed = derive_seed(cfg.base_seed, kind, mi, si, ci, trial, _STREAM_SIGNAL)
    nseed = derive_seed(cfg.base_seed, kind, mi, si, ci, trial, _STREAM_NOISE)
    x = add_noise_at_cnr(generate_signal(p, sseed), cnr, nseed)
    return p, x, {"signal": sseed, "noise": nseed}


def _mask_seed(cfg, kind, mi, si, ci, trial, gi):
    return derive_seed(cfg.base_seed, kind, mi, si, ci, trial, _STREAM_MASK, gi)


def _classify_task(args):
    cfg, mi, si, ci, trial = args
    p, x, seeds = _trial_signal(cfg, _KIND_CLASSIFY, mi, si, ci, trial)
    theory = theory_table(p, [Modulation.parse(m) for m in cfg.modulations])
    out = []
    for gi, g in enumerate(cfg.gammas):
        mseed = _mask_seed(cfg, _KIND_CLASSIFY, mi, si, ci, trial, gi)
        mask = make_mask(p.length, g, mseed)
        fv = extract_feature(acquire(x, mask, LagSpec(4, 0)), p, g, cfg.cfar_config, cfg.K, cfg.even_only)
        out.append((fv.value, classify_min_distance(fv, theory), mseed))
    return seeds, out


def _nmse_task(args):
    cfg, mi, si, ci, trial = args
    p, x, seeds = _trial_signal(cfg, _KIND_NMSE, mi, si, ci, trial)
    out = []
    for gi, g in enumerate(cfg.gammas):
        mseed = _mask_seed(cfg, _KIND_NMSE, mi, si, ci, trial, gi)
        mask = make_mask(p.length, g, mseed)
        per_order = []
        for n, q in cfg.orders:
            spec = LagSpec(n, q, None, p.sample_rate)
            plan = CandidateFrequencyPlan.for_signal(p, n, q, 0, cfg.K)
            est = estimate_compressive_cyclic_cumulant(acquire(x, mask, spec), spec, plan, g,
                                                       cfg.cfar_config, cfg.even_only)
            per_order.append(est.value)
        out.append((per_order, mseed))
    return seeds, out


def _run_tasks(fn, tasks, workers):
    """Results in task order; failures are returned as exceptions."""
    def safe(t):
        try:
            return fn(t)
        except Exception as exc:  # recorded per cell, run continues
            return exc
    if workers <= 1:
        return [safe(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(fn, t) for t in tasks]
        res = []
        for f in futs:
            try:
                res.append(f.result())
            except Exception as exc:
                res.append(exc)
        return res


@dataclass
class ClassificationResult:
    confusions: dict
    pcc: list
    features: dict
    record: RunRecord


def run_classification_experiment(config: ExperimentConfig, out_dir=None) -> ClassificationResult:
    """Confusion matrix and P_cc for every (gamma, symbols, CNR) cell."""
    t0 = time.perf_counter()
    cfg = config
    rec = RunRecord(cfg.hash)
    tasks = [(cfg, mi, si, ci, tr)
             for si in range(len(cfg.symbols))
             for ci in range(len(cfg.cnrs_db))
             for mi in range(len(cfg.modulations))
             for tr in range(cfg.trials)]
    results = _run_tasks(_classify_task, tasks, cfg.workers)
    confusions, features = {}, {}
    for (_, mi, si, ci, tr), res in zip(tasks, results):
        mod = cfg.modulations[mi]
        if isinstance(res, Exception):
            rec.failures.append({"modulation": mod, "symbols": cfg.symbols[si],
                                 "cnr_db": _cnr_label(cfg.cnrs_db[ci]), "trial": tr, "error": repr(res)})
            log.error("trial failed (%s, %s symbols, cnr %s, trial %d): %r",
                      mod, cfg.symbols[si], cfg.cnrs_db[ci], tr, res)
            continue
        seeds, per_gamma = res
        rec.seeds[(mod, cfg.symbols[si], _cnr_label(cfg.cnrs_db[ci]), tr)] = dict(
            seeds, masks=[m for _, _, m in per_gamma])
        for gi, (val, label, _) in enumerate(per_gamma):
            cell = (cfg.gammas[gi], cfg.symbols[si], cfg.cnrs_db[ci])
            cm = confusions.setdefault(cell, ConfusionMatrix.empty(cfg.modulations, cfg.trials))
            cm.add(mod, label)
            features.setdefault(cell, {}).setdefault(mod, []).append(val)
    pcc = []
    for cell, cm in confusions.items():
        complete = bool(np.all(cm.counts.sum(axis=1) == cfg.trials))
        pcc.append({"gamma": cell[0], "symbols": cell[1], "cnr_db": _cnr_label(cell[2]),
                    "pcc": cm.pcc, "complete": complete})
    rec.outputs = {"features": features}
    rec.wall_clock = time.perf_counter() - t0
    result = ClassificationResult(confusions, pcc, features, rec)
    if out_dir is not None:
        _write_classification(Path(out_dir), cfg, result)
    return result


def _cell_name(gamma, symbols, cnr):
    return f"g{gamma:g}_s{symbols}_c{_cnr_label(cnr)}"


@dataclass
class NMSEResult:
    reports: list
    record: RunRecord


def run_nmse_experiment(config: ExperimentConfig, out_dir=None) -> NMSEResult:
    """NMSE of the compressive cyclic cumulant against theory for every cell and order."""
    t0 = time.perf_counter()
    cfg = config
    rec = RunRecord(cfg.hash)
    reports = []
    cells = [(mi, si, ci) for mi in range(len(cfg.modulations))
             for si in range(len(cfg.symbols)) for ci in range(len(cfg.cnrs_db))]
    for mi, si, ci in cells:
        mod, sym, fs, cnr = cfg.modulations[mi], cfg.symbols[si], cfg.sample_rates[si], cfg.cnrs_db[ci]
        p = cfg.params(mod, sym, fs)
        truths = [theoretical_cyclic_cumulant(p, n, q, 0) for n, q in cfg.orders]
        active = [abs(t) > 1e-12 for t in truths]
        for (n, q), act in zip(cfg.orders, active):
            if not act:
                for g in cfg.gammas:
                    reports.append(NMSEReport(mod, n, q, g, sym, cnr, None, cfg.trials,
                                              skipped="theoretical cumulant is zero"))
        if not any(active):
            continue
        sub = dataclasses.replace(cfg, orders=tuple(o for o, a in zip(cfg.orders, active) if a))
        tasks = [(sub, mi, si, ci, tr) for tr in range(cfg.trials)]
        results = _run_tasks(_nmse_task, tasks, cfg.workers)
        good = [r for r in results if not isinstance(r, Exception)]
        for (_, _, _, _, tr), r in zip(tasks, results):
            if isinstance(r, Exception):
                rec.failures.append({"modulation": mod, "symbols": sym, "cnr_db": _cnr_label(cnr),
                                     "trial": tr, "error": repr(r)})
            else:
                rec.seeds[(mod, sym, _cnr_label(cnr), tr)] = dict(r[0], masks=[m for _, m in r[1]])
        sub_truths = [t for t, a in zip(truths, active) if a]
        for oi, (n, q) in enumerate(sub.orders):
            for gi, g in enumerate(cfg.gammas):
                ests = [r[1][gi][0][oi] for r in good]
                if not ests:
                    reports.append(NMSEReport(mod, n, q, g, sym, cnr, None, cfg.trials, skipped="all trials failed"))
                    continue
                reports.append(NMSEReport(mod, n, q, g, sym, cnr, nmse(ests, sub_truths[oi]), len(ests),
                                          estimates=tuple(ests)))
    rec.wall_clock = time.perf_counter() - t0
    result = NMSEResult(reports, rec)
    if out_dir is not None:
        _write_nmse(Path(out_dir), cfg, result)
    return result


# -- run directory -----------------------------------------------------------

def _prepare_dir(out: Path, cfg: ExperimentConfig) -> logging.Handler:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(dict(cfg.to_json(), config_hash=cfg.hash), indent=2) + "\n")
    h = logging.FileHandler(out / "log", mode="a")
    h.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    return h


def _write_log(h, cfg, record, what):
    pkg = logging.getLogger("cthocs")
    old = pkg.level
    h.setLevel(logging.INFO)
    pkg.addHandler(h)
    pkg.setLevel(logging.INFO)
    try:
        pkg.info("%s run, config %s, %.1f s, %d failed trials", what, cfg.hash, record.wall_clock,
                    len(record.failures))
        for f in record.failures:
            pkg.warning("failure: %s", f)
    finally:
        pkg.removeHandler(h)
        pkg.setLevel(old)
        h.close()


def _write_classification(out: Path, cfg, result: ClassificationResult):
    h = _prepare_dir(out, cfg)
    for cell, cm in result.confusions.items():
        name = _cell_name(*cell)
        (out / f"confusion_{name}.csv").write_text(cm.to_csv())
        (out / f"confusion_{name}.txt").write_text(cm.to_text() + "\n")
    with open(out / "pcc.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["gamma", "symbols", "cnr_db", "pcc", "complete"])
        w.writeheader()
        for row in result.pcc:
            w.writerow(row)
    _write_log(h, cfg, result.record, "classification")


def _write_nmse(out: Path, cfg, result: NMSEResult):
    h = _prepare_dir(out, cfg)
    with open(out / "nmse.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["modulation", "n", "q", "gamma", "symbols", "cnr_db", "nmse", "trials", "note"])
        for r in result.reports:
            w.writerow([r.modulation, r.n, r.q, r.gamma, r.symbols, _cnr_label(r.cnr_db),
                        "" if r.value is None else repr(r.value), r.trials, r.skipped or ""])
    _write_log(h, cfg, result.record, "nmse")
