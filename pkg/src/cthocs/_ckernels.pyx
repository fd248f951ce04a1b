# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, floor, fabs, M_PI

cnp.import_array()


cdef inline double _sinc(double x) nogil:
    if fabs(x) < 1e-12:
        return 1.0
    return sin(M_PI * x) / (M_PI * x)


cdef inline double _rc(double x, double rolloff, double sing_val) nogil:
    cdef double den
    if rolloff == 0.0:
        return _sinc(x)
    den = 1.0 - (2.0 * rolloff * x) * (2.0 * rolloff * x)
    if fabs(den) < 1e-10:
        return sing_val
    return _sinc(x) * cos(M_PI * rolloff * x) / den


def rc_pulse(x, double rolloff):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double sing_val = 0.0
    if rolloff != 0.0:
        sing_val = (M_PI / 4.0) * _sinc(1.0 / (2.0 * rolloff))
    with nogil:
        for i in range(n):
            ov[i] = _rc(xv[i], rolloff, sing_val)
    return out.reshape(np.shape(x))


def pulse_train(symbols, long k0, double symbol_period, double t0,
                double sample_rate, Py_ssize_t length, int span, double rolloff):
    cdef double complex[::1] sym = np.ascontiguousarray(symbols, dtype=np.complex128)
    cdef Py_ssize_t nsym = sym.shape[0]
    out = np.zeros(length, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t m
    cdef long kc, k, idx
    cdef int off
    cdef double t, x, p, sing_val = 0.0
    cdef double complex acc
    if rolloff != 0.0:
        sing_val = (M_PI / 4.0) * _sinc(1.0 / (2.0 * rolloff))
    with nogil:
        for m in range(length):
            t = m / sample_rate
            kc = <long>floor((t - t0) / symbol_period)
            acc = 0
            for off in range(-span - 1, span + 2):
                k = kc + off
                idx = k - k0
                if idx < 0 or idx >= nsym:
                    continue
                x = (t - k * symbol_period - t0) / symbol_period
                if fabs(x) > span:
                    continue
                p = _rc(x, rolloff, sing_val)
                acc = acc + sym[idx] * p
            ov[m] = acc
    return out


def project(values, indices, freqs, double dt):
    cdef double complex[::1] v = np.ascontiguousarray(values, dtype=np.complex128)
    cdef long long[::1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] f = np.ascontiguousarray(np.atleast_1d(freqs), dtype=np.float64)
    cdef Py_ssize_t nf = f.shape[0], npts = v.shape[0], i, k
    out = np.empty(nf, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef double cyc, ph, re, im, step, c, s, vr, vi
    with nogil:
        for i in range(nf):
            step = f[i] * dt
            re = 0.0
            im = 0.0
            for k in range(npts):
                cyc = step * idx[k]
                cyc = cyc - floor(cyc)
                ph = -2.0 * M_PI * cyc
                c = cos(ph)
                s = sin(ph)
                vr = v[k].real
                vi = v[k].imag
                re = re + vr * c - vi * s
                im = im + vr * s + vi * c
            ov[i] = re + 1j * im
    return out


def lag_product(channel_values, channel_valid, factor_channel, int n_conj):
    cdef double complex[:, ::1] vals = np.ascontiguousarray(channel_values, dtype=np.complex128)
    cdef cnp.uint8_t[:, ::1] valid = np.ascontiguousarray(channel_valid, dtype=bool).view(np.uint8)
    cdef long long[::1] fc = np.ascontiguousarray(factor_channel, dtype=np.int64)
    cdef Py_ssize_t npts = vals.shape[1], nfac = fc.shape[0], k, i
    out = np.empty(npts, dtype=np.complex128)
    ok = np.empty(npts, dtype=bool)
    cdef double complex[::1] ov = out
    cdef cnp.uint8_t[::1] okv = ok.view(np.uint8)
    cdef double ar, ai, zr, zi, tr
    cdef cnp.uint8_t good
    with nogil:
        for k in range(npts):
            ar = 1.0
            ai = 0.0
            good = 1
            for i in range(nfac):
                zr = vals[fc[i], k].real
                zi = vals[fc[i], k].imag
                if i < n_conj:
                    zi = -zi
                tr = ar * zr - ai * zi
                ai = ar * zi + ai * zr
                ar = tr
                good = good & valid[fc[i], k]
            ov[k].real = ar
            ov[k].imag = ai
            okv[k] = good
    return out, ok


def cfar_noise(power, bins, int guard, int train):
    cdef double[::1] pw = np.ascontiguousarray(power, dtype=np.float64)
    cdef long long[::1] b = np.ascontiguousarray(bins, dtype=np.int64)
    cdef Py_ssize_t n = pw.shape[0], nb = b.shape[0], i
    cdef long long j, c
    out = np.empty(nb, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double acc
    with nogil:
        for i in range(nb):
            acc = 0.0
            for j in range(guard + 1, guard + train + 1):
                c = (b[i] + j) % n
                if c < 0:
                    c = c + n
                acc = acc + pw[c]
                c = (b[i] - j) % n
                if c < 0:
                    c = c + n
                acc = acc + pw[c]
            ov[i] = acc / (2.0 * train)
    return out
