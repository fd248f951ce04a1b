"""Binary and CSV dumps for samples, masks, spectra, peaks and estimates.

Sample file: ``b"CTH1"``, u32 L, f64 sample_rate, then L little-endian
interleaved f64 (re, im) pairs.

Mask file: ``b"CTHM"``, u32 L, f64 gamma, u64 seed, one byte holding the
first bit, then u32 run lengths of alternating bit values until L bits are
covered.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .sampling import NonuniformStream, SamplingMask
from .signal_synth import ComplexSeries

SAMPLE_MAGIC = b"CTH1"
MASK_MAGIC = b"CTHM"
_SAMPLE_HDR = struct.Struct("<4sId")
_MASK_HDR = struct.Struct("<4sIdQ")


def write_samples(path, x: ComplexSeries):
    L = len(x)
    inter = np.empty(2 * L, dtype="<f8")
    inter[0::2] = x.samples.real
    inter[1::2] = x.samples.imag
    with open(path, "wb") as f:
        f.write(_SAMPLE_HDR.pack(SAMPLE_MAGIC, L, float(x.sample_rate)))
        f.write(inter.tobytes())


def read_samples(path) -> ComplexSeries:
    data = Path(path).read_bytes()
    if len(data) < _SAMPLE_HDR.size:
        raise ShapeError("sample file shorter than its header")
    magic, L, fs = _SAMPLE_HDR.unpack_from(data)
    if magic != SAMPLE_MAGIC:
        raise ShapeError(f"bad sample file magic {magic!r}")
    body = np.frombuffer(data, dtype="<f8", offset=_SAMPLE_HDR.size)
    if body.size != 2 * L:
        raise ShapeError(f"sample file holds {body.size // 2} samples, header says {L}")
    return ComplexSeries(body[0::2] + 1j * body[1::2], fs)


def write_samples_csv(path, x: ComplexSeries):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["index", "re", "im"])
        for i, v in enumerate(x.samples):
            w.writerow([i, repr(float(v.real)), repr(float(v.imag))])


def write_stream_csv(path, s: NonuniformStream):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["index", "re", "im"])
        for i, v in zip(s.sample_indices, s.values):
            w.writerow([int(i), repr(float(v.real)), repr(float(v.imag))])


def read_indexed_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """(indices, complex values) from an ``index,re,im`` CSV."""
    idx, vals = [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            idx.append(int(row["index"]))
            vals.append(complex(float(row["re"]), float(row["im"])))
    return np.asarray(idx, dtype=np.int64), np.asarray(vals, dtype=np.complex128)


def _runs(bits: np.ndarray) -> list[int]:
    change = np.flatnonzero(np.diff(bits.astype(np.int8))) + 1
    edges = np.concatenate([[0], change, [bits.size]])
    return np.diff(edges).tolist()


def write_mask(path, mask: SamplingMask):
    runs = _runs(mask.bits)
    with open(path, "wb") as f:
        f.write(_MASK_HDR.pack(MASK_MAGIC, mask.L, float(mask.gamma), int(mask.seed) & ((1 << 64) - 1)))
        f.write(struct.pack("<B", int(mask.bits[0])))
        f.write(np.asarray(runs, dtype="<u4").tobytes())


def read_mask(path) -> SamplingMask:
    data = Path(path).read_bytes()
    if len(data) < _MASK_HDR.size + 1:
        raise ShapeError("mask file shorter than its header")
    magic, L, gamma, seed = _MASK_HDR.unpack_from(data)
    if magic != MASK_MAGIC:
        raise ShapeError(f"bad mask file magic {magic!r}")
    bit = data[_MASK_HDR.size]
    runs = np.frombuffer(data, dtype="<u4", offset=_MASK_HDR.size + 1)
    if int(runs.sum()) != L:
        raise ShapeError(f"mask runs cover {int(runs.sum())} bits, header says {L}")
    vals = (np.arange(runs.size) + bit) % 2
    return SamplingMask(np.repeat(vals, runs).astype(bool), gamma, seed)


def write_spectrum_csv(path, freqs, values):
    values = np.asarray(values, dtype=np.complex128)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["freq_hz", "re", "im", "mag"])
        for fr, v in zip(freqs, values):
            w.writerow([repr(float(fr)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v)))])


def write_peaks_csv(path, peaks):
    write_spectrum_csv(path, [p.freq for p in peaks], [p.value for p in peaks])


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_estimates(path, estimates):
    """CSV or JSON (by suffix) with columns kind, n, q, tau_1.., freq_hz, re, im, gamma, T_hat, seed."""
    rows = [e.as_row() for e in estimates]
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps([{k: _json_safe(v) for k, v in r.items()} for r in rows], indent=2))
        return
    ntau = max((e.n for e in estimates), default=0)
    cols = ["kind", "n", "q"] + [f"tau_{i}" for i in range(1, ntau + 1)] + \
        ["freq_hz", "re", "im", "gamma", "T_hat", "seed"]
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=cols, restval="")
        w.writeheader()
        for r in rows:
            w.writerow(r)
