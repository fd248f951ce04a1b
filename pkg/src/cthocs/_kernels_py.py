"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors every signature.
"""
import numpy as np


def rc_pulse(x, rolloff):
    """Raised-cosine pulse at normalized time x = t/T, unit peak at x=0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.sinc(x)
    if rolloff == 0.0:
        return out
    den = 1.0 - (2.0 * rolloff * x) ** 2
    sing = np.abs(den) < 1e-10
    with np.errstate(divide="ignore", invalid="ignore"):
        out = out * np.cos(np.pi * rolloff * x) / den
    if np.any(sing):
        out[sing] = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
    return out


def pulse_train(symbols, k0, symbol_period, t0, sample_rate, length, span, rolloff):
    """sum_k symbols[k-k0] p(t - kT - t0) at t = m/fs, RC pulse truncated to |t| <= span*T."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    t = np.arange(length, dtype=np.float64) / sample_rate
    kc = np.floor((t - t0) / symbol_period).astype(np.int64)
    out = np.zeros(length, dtype=np.complex128)
    nsym = symbols.shape[0]
    for off in range(-span - 1, span + 2):
        k = kc + off
        x = (t - k * symbol_period - t0) / symbol_period
        ok = (np.abs(x) <= span) & (k - k0 >= 0) & (k - k0 < nsym)
        if not np.any(ok):
            continue
        out[ok] += symbols[k[ok] - k0] * rc_pulse(x[ok], rolloff)
    return out


def project(values, indices, freqs, dt):
    """sum_k values[k] exp(-j 2 pi f indices[k] dt) for each f in freqs."""
    values = np.asarray(values, dtype=np.complex128)
    idx = np.asarray(indices, dtype=np.float64)
    freqs = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
    out = np.empty(freqs.shape[0], dtype=np.complex128)
    for i, f in enumerate(freqs):
        cyc = f * dt * idx
        cyc -= np.floor(cyc)
        out[i] = np.dot(values, np.exp(-2j * np.pi * cyc))
    return out


def lag_product(channel_values, channel_valid, factor_channel, n_conj):
    """Entrywise product of the selected channel rows, first ``n_conj`` factors conjugated."""
    vals = np.asarray(channel_values, dtype=np.complex128)
    valid = np.asarray(channel_valid, dtype=bool)
    out = np.ones(vals.shape[1], dtype=np.complex128)
    ok = np.ones(vals.shape[1], dtype=bool)
    for i, c in enumerate(factor_channel):
        row = vals[c]
        out *= np.conj(row) if i < n_conj else row
        ok &= valid[c]
    return out, ok


def cfar_noise(power, bins, guard, train):
    """Mean of the 2*train training cells around each bin, wrapping circularly."""
    power = np.asarray(power, dtype=np.float64)
    bins = np.asarray(bins, dtype=np.int64)
    n = power.shape[0]
    offs = np.concatenate(
        [np.arange(-guard - train, -guard), np.arange(guard + 1, guard + train + 1)]
    )
    cells = (bins[:, None] + offs[None, :]) % n
    return power[cells].mean(axis=1)
