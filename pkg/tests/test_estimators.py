import math

import numpy as np
import pytest

from cthocs.errors import ConfigurationError, IncompleteInputError
from cthocs.estimators import (CandidateFrequencyPlan, _plan_terms, assemble_cumulant, bias_oracle,
                               estimate_compressive_cyclic_cumulant, estimate_compressive_cyclic_moment,
                               measure_block_moments, variance_probe)
from cthocs.sampling import LagSpec, acquire, apply_mask, lag_product_nonuniform, lag_product_uniform, make_mask
from cthocs.signal_synth import (ComplexSeries, SignalParams, generate_signal, theoretical_cyclic_cumulant,
                                 theoretical_cyclic_moment, theoretical_feature)
from cthocs.spectral import project_unrescaled

from conftest import crandn


@pytest.fixture(scope="module")
def qpsk13000():
    p = SignalParams.standard("4PSK", 13000)
    return p, generate_signal(p, 21)


def moment_stream(x, gamma, seed, spec):
    return lag_product_nonuniform(acquire(x, make_mask(len(x), gamma, seed), spec), spec)


def test_gamma_one_matches_full_rate_estimator(qpsk13000):
    p, x = qpsk13000
    spec = LagSpec(4, 0)
    a = 4 * p.carrier_offset
    est = estimate_compressive_cyclic_moment(moment_stream(x, 1.0, 0, spec), a)
    y = lag_product_uniform(x, spec)
    t = np.arange(len(y)) / p.sample_rate
    full = np.sum(y.samples * np.exp(-2j * np.pi * a * t)) / len(y)
    assert abs(est.value - full) < 1e-12
    assert est.rescaled and est.kind == "moment"


def test_rescaling_exact(qpsk13000):
    p, x = qpsk13000
    spec = LagSpec(4, 0)
    w = moment_stream(x, 0.3, 4, spec)
    a = 4 * p.carrier_offset
    assert estimate_compressive_cyclic_moment(w, a, 0.3).value == complex(project_unrescaled(w, [a])[0] * (1 / 0.3))


def test_fourth_order_moment_matches_theory(qpsk13000):
    p, x = qpsk13000
    est = estimate_compressive_cyclic_moment(moment_stream(x, 1.0, 0, LagSpec(4, 0)), 4 * p.carrier_offset)
    assert abs(abs(est.value) / theoretical_feature(p) - 1) < 0.05


def test_mask_mean_matches_full_rate(qpsk13000):
    p, x = qpsk13000
    spec = LagSpec(4, 0)
    a = 4 * p.carrier_offset
    ref = estimate_compressive_cyclic_moment(moment_stream(x, 1.0, 0, spec), a).value
    vals = np.array([estimate_compressive_cyclic_moment(moment_stream(x, 0.1, s, spec), a).value
                     for s in range(500)])
    se = np.std(vals, ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - ref) < 3 * se * math.sqrt(2)


def test_plan_candidates():
    plan = CandidateFrequencyPlan.build(4, 0, 23.0625, 1 / 3249.5625, 32768.0)
    T = 1 / 3249.5625
    assert plan.candidates[(4, 0)] == tuple(92.25 + k / T for k in range(-6, 7) if abs(92.25 + k / T) < 16384)
    assert len(plan.candidates[(4, 0)]) == 11
    assert plan.beta == 4 * 23.0625
    with pytest.raises(ConfigurationError):
        CandidateFrequencyPlan.build(4, 0, 1.0, 1.0, 10.0, K=-1)
    narrow = CandidateFrequencyPlan.build(2, 0, 1.0, 0.1, 50.0, K=6)
    assert all(abs(f) < 25 for f in narrow.candidates[(2, 0)])


def test_incomplete_plan():
    plan = CandidateFrequencyPlan({(4, 0): (1.0,)}, 1.0)
    with pytest.raises(IncompleteInputError):
        assemble_cumulant(lambda s, a: 1.0, LagSpec(4, 0), plan)


def test_even_partitions_for_42():
    plan = CandidateFrequencyPlan.build(4, 2, 1.0, 0.1, 100.0)
    needs = _plan_terms(LagSpec(4, 2), plan, 0.0, 0.5, even_only=True)
    assert sorted(str(t[0]) for t in needs.terms) == sorted(["{1 2 3 4}", "{1 2}{3 4}", "{1 3}{2 4}",
                                                             "{1 4}{2 3}"])


def test_zero_mean_second_order_reduces_to_moment(rng):
    x = ComplexSeries(crandn(rng, 4096), 4096.0)
    spec = LagSpec(2, 1, None, 4096.0)
    plan = CandidateFrequencyPlan.build(2, 1, 0.0, 1 / 400.0, 4096.0, K=0)
    chans = acquire(x, make_mask(4096, 0.5, 1), spec)
    est = estimate_compressive_cyclic_cumulant(chans, spec, plan, even_only=True)
    mom = estimate_compressive_cyclic_moment(lag_product_nonuniform(chans, spec), 0.0)
    assert abs(est.value - mom.value) < 1e-12
    assert est.kind == "cumulant"


def _theory_lookup(p):
    def get(sig, a):
        n_i, q_i = sig[0], sig[1]
        k = round((a - (n_i - 2 * q_i) * p.carrier_offset) * p.symbol_period)
        return theoretical_cyclic_moment(p, n_i, q_i, k)
    return get


@pytest.mark.parametrize("mod", ["2PSK", "4PSK", "16QAM"])
@pytest.mark.parametrize("nq", [(4, 0), (4, 2), (2, 0), (2, 1)])
def test_cumulant_from_theoretical_moments_rect(mod, nq):
    # rectangular pulses have a single nonzero harmonic, so truncation is exact
    n, q = nq
    p = SignalParams(mod, symbol_period=0.01, sample_rate=1000.0, carrier_offset=1.5, pulse="rect",
                     carrier_phase=0.3)
    plan = CandidateFrequencyPlan.for_signal(p, n, q)
    got = assemble_cumulant(_theory_lookup(p), LagSpec(n, q), plan, tol=1e-6)
    assert abs(got - theoretical_cyclic_cumulant(p, n, q, 0)) < 1e-10


def test_cumulant_from_theoretical_moments_rc():
    p = SignalParams.standard("2PSK", 3250, carrier_phase=0.2)
    plan = CandidateFrequencyPlan.for_signal(p, 4, 0)
    got = assemble_cumulant(_theory_lookup(p), LagSpec(4, 0), plan, tol=1e-6)
    th = theoretical_cyclic_cumulant(p, 4, 0, 0)
    assert abs(got - th) < 1e-6 * abs(th)


@pytest.mark.parametrize("mod", ["4PSK", "16QAM"])
def test_cumulant_equals_top_moment_without_second_order(mod):
    p = SignalParams.standard(mod, 3250)
    x = generate_signal(p, 3)
    spec = LagSpec(4, 0, None, p.sample_rate)
    plan = CandidateFrequencyPlan.for_signal(p, 4, 0)
    needs = _plan_terms(spec, plan, plan.beta, 0.5, False)
    moms = measure_block_moments(acquire(x, make_mask(p.length, 0.5, 1), spec), needs.blocks, needs.freqs, 0.5)
    zeroed = {k: (v if k[0][0] == 4 else 0j) for k, v in moms.items()}
    got = assemble_cumulant(zeroed, spec, plan, tol=0.5)
    assert abs(got - moms[((4, 0, (), (0, 0, 0, 0)), plan.beta)]) < 1e-10


def test_bpsk_feature_matches_theory():
    p = SignalParams.standard("2PSK", 13000)
    x = generate_signal(p, 5)
    spec = LagSpec(4, 0, None, p.sample_rate)
    plan = CandidateFrequencyPlan.for_signal(p, 4, 0)
    est = estimate_compressive_cyclic_cumulant(acquire(x, make_mask(p.length, 1.0, 0), spec), spec, plan)
    assert abs(abs(est.value) / theoretical_feature(p) - 1) < 0.05
    assert "moments" in est.meta


def test_bias_oracle_single_line():
    spec = LagSpec(2, 1, (0, 10), 1000.0)
    got = bias_oracle(spec, 5.0, 2.0, {5.0: 1 + 1j})
    assert abs(got - (1 + 1j) * (2.0 - 0.01) / 2.0) < 1e-14


def test_bias_oracle_zero_delay_form():
    spec = LagSpec(2, 0, None, 1000.0)
    T, t = 1.0, 0.4
    moms = {3.0: 1.0, 3.7: 0.5j, -2.2: 0.3}
    expect = 1.0 + sum(R * np.sinc((3.0 - b) * T) * np.exp(-2j * np.pi * (3.0 - b) * t)
                       for b, R in moms.items() if b != 3.0)
    assert abs(bias_oracle(spec, 3.0, T, moms, t=t) - expect) < 1e-14


def test_bias_oracle_matches_finite_sum():
    # noiseless two-line lag product: the finite-window estimate is deterministic
    fs, L = 512.0, 512
    t = np.arange(L) / fs
    R = {20.0: 1.0 + 0.5j, 27.3: 0.8 - 0.2j}
    spec = LagSpec(1, 0, None, fs)
    x = ComplexSeries(sum(v * np.exp(2j * np.pi * b * t) for b, v in R.items()), fs)
    est = estimate_compressive_cyclic_moment(apply_mask(x, make_mask(L, 1.0, 0)), 20.0).value
    assert abs(est - bias_oracle(spec, 20.0, L / fs, R)) < 2e-3


def test_bias_leakage_shrinks_with_record_length():
    spec = LagSpec(2, 0, None, 1000.0)
    moms = {10.0: 1.0, 13.3: 1.0}
    leak = [abs(bias_oracle(spec, 10.0, T, moms) - 1.0) for T in (0.5, 5.0)]
    assert leak[1] < leak[0]


@pytest.mark.slow
def test_variance_probe_monotone_in_gamma():
    p = SignalParams.standard("4PSK", 400)
    rows = variance_probe(p, LagSpec(4, 0), 4 * p.carrier_offset, [1.0, 0.25, 0.1], 150, base_seed=1)
    v = [r.variance for r in rows]
    se = [r.variance_se for r in rows]
    assert v[2] - v[1] > 1.645 * math.hypot(se[2], se[1])
    assert v[1] - v[0] > 1.645 * math.hypot(se[1], se[0])


@pytest.mark.slow
def test_variance_probe_longer_record():
    p = SignalParams.standard("4PSK", 400)
    p2 = p.with_(duration=2.0)
    a = 4 * p.carrier_offset
    r1 = variance_probe(p, LagSpec(4, 0), a, [0.25], 150, base_seed=2)[0]
    r2 = variance_probe(p2, LagSpec(4, 0), a, [0.25], 150, base_seed=3)[0]
    assert r2.variance < r1.variance
    assert r1.variance - r2.variance > 1.645 * math.hypot(r1.variance_se, r2.variance_se)


def test_variance_probe_guard():
    with pytest.raises(ConfigurationError):
        variance_probe(SignalParams.standard("4PSK", 400), LagSpec(4, 0), 92.25, [1.0], 10)
