"""Command line entry point: ``cthocs {nmse,classify,spectrum,ripcheck}``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import CthocsError
from .harness import DEFAULT_PFA, ExperimentConfig, run_classification_experiment, run_nmse_experiment
from .sampling import LagSpec, acquire, lag_product_nonuniform, make_mask
from .signal_synth import ComplexSeries, SignalParams, add_noise_at_cnr, generate_signal
from .spectral import ALL, CfarConfig, cfar_detect, rip_bound_check, zero_padded_dft

_EXPERIMENT_FLAGS = {
    "modulations": "comma-separated modulations (2PSK,4PSK,8PSK,16QAM)",
    "symbols": "comma-separated symbol counts",
    "sample_rates": "comma-separated sample rates in Hz, aligned with --symbols",
    "cnrs_db": "comma-separated CNRs in dB ('inf' for noiseless)",
    "gammas": "comma-separated compression rates in (0, 1]",
    "trials": "trials per cell",
    "base_seed": "base seed",
    "orders": "comma-separated n:q pairs for the NMSE sweep",
    "K": "largest harmonic index in the candidate plan",
    "pfa": "CA-CFAR false-alarm probability",
    "cfar": "gate moments with CA-CFAR (true/false)",
    "even_only": "skip partitions with odd-sized blocks (true/false)",
    "workers": "worker processes",
}


def _add_experiment_args(p):
    p.add_argument("--config", type=Path, help="flat key = value config file")
    for name, help_ in _EXPERIMENT_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, help=help_)
    p.add_argument("--out", type=Path, required=True, help="run directory")


def _experiment_config(args) -> ExperimentConfig:
    base = {}
    if args.config is not None:
        base = dataclasses.asdict(ExperimentConfig.from_file(args.config))
    for name in _EXPERIMENT_FLAGS:
        v = getattr(args, name)
        if v is not None:
            base[name] = v
    if args.symbols is not None and args.sample_rates is None:
        base.pop("sample_rates", None)
    return ExperimentConfig.from_mapping(base)


def _cmd_nmse(args):
    cfg = _experiment_config(args)
    res = run_nmse_experiment(cfg, args.out)
    for r in res.reports:
        val = r.skipped if r.value is None else f"{r.value:.4g}"
        cnr = "inf" if math.isinf(r.cnr_db) else f"{r.cnr_db:g}"
        print(f"{r.modulation:>6} n={r.n} q={r.q} gamma={r.gamma:<5g} symbols={r.symbols:<6} cnr={cnr:<4} nmse={val}")
    return 0


def _cmd_classify(args):
    cfg = _experiment_config(args)
    res = run_classification_experiment(cfg, args.out)
    for cell, cm in res.confusions.items():
        g, s, c = cell
        print(f"gamma={g:g} symbols={s} cnr={'inf' if math.isinf(c) else f'{c:g}'}")
        print(cm.to_text())
        print()
    return 0


def _cmd_spectrum(args):
    if args.input is not None:
        x = io.read_samples(args.input)
    else:
        params = SignalParams.standard(args.modulation, args.symbols)
        x = generate_signal(params, args.seed)
        if args.cnr is not None:
            x = add_noise_at_cnr(x, args.cnr, args.seed + 1)
    spec = LagSpec(args.n, args.q, None, x.sample_rate)
    mask = make_mask(len(x), args.gamma, args.mask_seed)
    w = lag_product_nonuniform(acquire(x, mask, spec), spec)
    sp = zero_padded_dft(w)
    order = np.argsort(sp.freqs)
    io.write_spectrum_csv(args.out, sp.freqs[order], sp.bins[order])
    if args.peaks is not None:
        peaks = cfar_detect(sp, ALL, config=CfarConfig(pfa=args.pfa))
        io.write_peaks_csv(args.peaks, peaks)
        print(f"{len(peaks)} peaks written to {args.peaks}")
    if args.dump_samples is not None:
        io.write_samples(args.dump_samples, x)
    if args.dump_mask is not None:
        io.write_mask(args.dump_mask, mask)
    print(f"{sp.L} bins at {sp.bin_spacing:g} Hz spacing written to {args.out}")
    return 0


def _rip_test_vector(L, s, residue, rng) -> ComplexSeries:
    eta = residue * (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / math.sqrt(2)
    top = rng.choice(L, size=s, replace=False)
    eta[top] = np.exp(2j * np.pi * rng.random(s)) * (1 + rng.random(s))
    return ComplexSeries(np.fft.ifft(eta) * math.sqrt(L), 1.0)


def _cmd_ripcheck(args):
    rng = np.random.default_rng(args.seed)
    ok = 0
    deltas, ratios = [], []
    for i in range(args.masks):
        y = _rip_test_vector(args.L, args.s, args.residue, rng)
        mask = make_mask(args.L, args.gamma, args.seed + 1 + i)
        rep = rip_bound_check(y, mask, args.s)
        ok += rep.holds
        deltas.append(rep.delta)
        ratios.append(rep.max_error / rep.rhs if rep.rhs > 0 else 0.0)
    print(f"L={args.L} s={args.s} gamma={args.gamma:g} masks={args.masks}")
    print(f"bound held on {ok}/{args.masks} masks")
    print(f"delta: min {min(deltas):.4f} median {np.median(deltas):.4f} max {max(deltas):.4f}")
    print(f"max error / bound: {max(ratios):.4f}")
    return 0 if ok == args.masks else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cthocs", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nmse", help="NMSE sweep of compressive cyclic cumulants")
    _add_experiment_args(p)
    p.set_defaults(func=_cmd_nmse)

    p = sub.add_parser("classify", help="four-class classification run")
    _add_experiment_args(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("spectrum", help="zero-padded DFT of a compressive lag product")
    p.add_argument("--input", type=Path, help="sample file (CTH1); otherwise a signal is synthesized")
    p.add_argument("--modulation", default="4PSK")
    p.add_argument("--symbols", type=int, default=3250)
    p.add_argument("--cnr", type=float, default=None, help="CNR in dB (default noiseless)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--mask-seed", type=int, default=1)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--pfa", type=float, default=DEFAULT_PFA)
    p.add_argument("--out", type=Path, required=True, help="spectrum CSV")
    p.add_argument("--peaks", type=Path, help="CFAR peak CSV")
    p.add_argument("--dump-samples", type=Path)
    p.add_argument("--dump-mask", type=Path)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("ripcheck", help="exact check of the zero-padded DFT error bound")
    p.add_argument("--L", type=int, default=16)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--masks", type=int, default=100)
    p.add_argument("--residue", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_ripcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CthocsError, ValueError, KeyError, OSError) as exc:
        print(f"cthocs: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
