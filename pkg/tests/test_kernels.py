import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cthocs import kernels
from cthocs import _kernels_py as ref

from conftest import crandn


def test_backend_selected():
    assert kernels.BACKEND in kernels.available_backends()
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_rc_pulse_values(backend):
    x = np.array([0.0, 1.0, 2.0, -3.0, 1 / 0.6, 0.5])
    p = backend.rc_pulse(x, 0.3)
    assert p[0] == 1.0
    assert np.allclose(p[1:4], 0.0, atol=1e-15)
    assert np.isclose(p[4], np.pi / 4 * np.sinc(1 / 0.6))
    assert np.allclose(backend.rc_pulse(x, 0.0), np.sinc(x))


def test_rc_pulse_continuous_at_singularity(backend):
    s = 1 / 0.6
    near = backend.rc_pulse(np.array([s - 1e-6, s, s + 1e-6]), 0.3)
    assert np.ptp(near) < 1e-5


@pytest.mark.parametrize("name", ["rc_pulse", "pulse_train", "project", "lag_product", "cfar_noise"])
def test_backends_agree(name, rng):
    if "cython" not in kernels.available_backends():
        pytest.skip("compiled backend not built")
    c = kernels.get_backend("cython")
    if name == "rc_pulse":
        x = rng.uniform(-9, 9, 500)
        assert np.allclose(c.rc_pulse(x, 0.3), ref.rc_pulse(x, 0.3), rtol=1e-12, atol=1e-14)
    elif name == "pulse_train":
        s = crandn(rng, 60)
        args = (s, -12, 1 / 9.7, 0.013, 100.0, 400, 8, 0.3)
        assert np.allclose(c.pulse_train(*args), ref.pulse_train(*args), atol=1e-12)
    elif name == "project":
        v = crandn(rng, 300)
        idx = np.sort(rng.choice(5000, 300, replace=False))
        f = rng.uniform(-400, 400, 7)
        assert np.allclose(c.project(v, idx, f, 1 / 1024), ref.project(v, idx, f, 1 / 1024), atol=1e-9)
    elif name == "lag_product":
        vals = crandn(rng, 3, 50)
        valid = rng.random((3, 50)) > 0.1
        fc = np.array([0, 2, 2, 1])
        a, ok_a = c.lag_product(vals, valid, fc, 2)
        b, ok_b = ref.lag_product(vals, valid, fc, 2)
        assert np.allclose(a, b, atol=1e-13) and np.array_equal(ok_a, ok_b)
    else:
        p = rng.random(200)
        bins = np.array([0, 5, 100, 199])
        assert np.allclose(c.cfar_noise(p, bins, 2, 16), ref.cfar_noise(p, bins, 2, 16))


def test_lag_product_oracle(backend, rng):
    vals = crandn(rng, 2, 16)
    valid = np.ones((2, 16), bool)
    out, ok = backend.lag_product(vals, valid, np.array([1, 0, 0]), 1)
    for k in range(16):
        assert np.isclose(out[k], np.conj(vals[1, k]) * vals[0, k] * vals[0, k])
    assert ok.all()


def test_project_matches_direct_sum(backend, rng):
    v = crandn(rng, 40)
    idx = np.arange(0, 80, 2)
    f = 13.37
    direct = np.sum(v * np.exp(-2j * np.pi * f * idx / 256))
    assert np.isclose(backend.project(v, idx, [f], 1 / 256)[0], direct, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(40, 200), st.integers(0, 4), st.integers(1, 16))
def test_cfar_noise_is_circular_mean(n, guard, train):
    rng = np.random.default_rng(n * 31 + guard * 7 + train)
    p = rng.random(n)
    bins = np.arange(0, n, max(1, n // 7))
    for backend in (kernels.get_backend(b) for b in kernels.available_backends()):
        got = backend.cfar_noise(p, bins, guard, train)
        for i, b in enumerate(bins):
            cells = [(b + j) % n for j in range(guard + 1, guard + train + 1)]
            cells += [(b - j) % n for j in range(guard + 1, guard + train + 1)]
            assert np.isclose(got[i], p[cells].mean())
