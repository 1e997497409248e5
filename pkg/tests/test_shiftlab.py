import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from normflow import shiftlab as sl
from normflow.errors import CoverageError, DomainError
from normflow.experiments import truncation_entry_check
from normflow.flowengine import integrate_direct, spectral_domain
from normflow.generators import shift_truncation
from normflow.integrator import StepControl
from normflow.philib import builtin_pair


def test_weight_sequence_validation():
    with pytest.raises(DomainError):
        sl.WeightSequence([1.0, -1.0])
    with pytest.raises(DomainError):
        sl.WeightSequence([1.0, 0.1], floor=0.5)
    with pytest.raises(DomainError):
        sl.WeightSequence([1.0, 0.0]).log()
    f = sl.WeightSequence([1.0, 2.0])
    assert np.array_equal(f.window(4), [1, 2, 2, 2])
    with pytest.raises(CoverageError):
        sl.WeightSequence([1.0, 2.0], tail="none").window(3)


def test_poisson_average_examples():
    g = np.array([0.3, -1.0, 2.0, 0.5])
    assert np.array_equal(sl.poisson_average(g, 0.0), g)
    assert np.allclose(sl.poisson_average(np.full(10, 1.7), 3.0), 1.7, atol=1e-12)
    ind = np.zeros(200)
    ind[0] = 1.0
    assert sl.poisson_average(ind, 1.0, tail="constant")[0] == pytest.approx(math.exp(-1), abs=1e-15)
    with pytest.raises(DomainError):
        sl.poisson_average(g, -1.0)


def test_poisson_cutoff_mass():
    for t in (0.5, 10.0, 300.0):
        w = sl.poisson_weights(t)
        assert 1 - w.sum() <= 1e-12
        assert len(w) - 1 >= t + 10 * math.sqrt(t) + 50


def test_poisson_none_tail_coverage():
    g = np.linspace(0, 1, 30)
    with pytest.raises(CoverageError):
        sl.poisson_average(g, 5.0, tail="none")
    out = sl.poisson_average(np.linspace(0, 1, 500), 5.0, tail="none")
    assert len(out) == 500 - len(sl.poisson_weights(5.0)) + 1


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=40), st.floats(0, 20))
def test_poisson_sup_contraction(vals, t):
    g = np.array(vals)
    assert np.max(np.abs(sl.poisson_average(g, t))) <= np.max(np.abs(g)) + 1e-12


@pytest.mark.parametrize("s,t", [(0.5, 1.0), (2.0, 3.0), (5.0, 5.0)])
def test_poisson_semigroup(s, t):
    g = np.sin(np.arange(80) * 0.7) + np.log1p(np.arange(80))
    a = sl.poisson_average(sl.poisson_average(g, t), s)
    b = sl.poisson_average(g, s + t)
    assert np.max(np.abs(a - b)) <= 1e-9


def test_aluthge_flow_shift_constant_and_bump():
    f = sl.WeightSequence(np.full(20, 1.5))
    assert np.allclose(sl.aluthge_flow_shift(f, 7.0).values, 1.5)
    bump = sl.WeightSequence(np.r_[np.full(5, 3.0), np.full(400, 1.5)])
    devs = [np.max(np.abs(sl.aluthge_flow_shift(bump, t).values - 1.5)) for t in (1, 10, 100)]
    assert devs[0] > devs[1] > devs[2]
    with pytest.raises(DomainError):
        sl.aluthge_flow_shift(sl.WeightSequence([1.0, 0.0]), 1.0)


@pytest.mark.parametrize("t", [1.0, 2.5, 4.0])
def test_truncated_matrix_matches_closed_form(t):
    m = 64
    w = 1.0 + 0.5 * np.cos(np.arange(m) * 0.9)
    S = shift_truncation(w, m)
    p = builtin_pair("aluthge", spectral_domain(S))
    X = integrate_direct(p, S, t, StepControl(normality_tol=0), sample_times=[]).final
    cf = sl.aluthge_flow_shift(sl.WeightSequence(w), t).values
    k = m - math.ceil(t + 5 * math.sqrt(t))
    assert np.max(np.abs(np.diag(np.asarray(X), -1)[:k] - cf[:k])) <= 1e-5


def test_lambda_aluthge_examples():
    f = sl.WeightSequence([1.0, math.e**2, 1.0, 1.0])
    assert np.array_equal(sl.lambda_aluthge_shift(f, 0.5, 0).values, f.values)
    assert sl.lambda_aluthge_shift(f, 0.5, 1).values[0] == pytest.approx(math.e)
    with pytest.raises(DomainError):
        sl.lambda_aluthge_shift(f, 0.0, 1)


def test_binomial_approaches_poisson():
    w = np.exp(np.sin(np.arange(300) * 0.3))
    f = sl.WeightSequence(w)
    ref = sl.aluthge_flow_shift(f, 1.0).values[:200]
    d = [np.max(np.abs(sl.lambda_aluthge_shift(f, 1.0 / n, n).values[:200] - ref)) for n in (10, 100, 1000)]
    assert d[0] > d[1] > d[2]
    assert d[2] / d[1] == pytest.approx(0.1, rel=0.2)


def test_cesaro_average():
    g = np.log(np.tile([1.0, 2.0], 50))  # periodic window
    for k in (1, 3, 10):
        assert np.allclose(sl.cesaro_average(g, 2 * k, tail="periodic"), math.log(2) / 2)


def test_spectral_radius_limit_constant_and_periodic():
    rep = sl.spectral_radius_limit(sl.WeightSequence(np.full(30, 2.0)), [1, 5], [1, 4])
    assert np.allclose(rep["poisson_norms"], math.log(2)) and np.allclose(rep["cesaro_norms"], math.log(2))
    per = sl.WeightSequence([1.0, 2.0], tail="periodic")
    rep = sl.spectral_radius_limit(per, [50, 200], [50, 200])
    assert rep["cesaro_norms"][0] == pytest.approx(math.log(2) / 2)
    assert rep["lim_gap"] <= 1e-3


def test_sawtooth_values():
    g = sl.sawtooth_g(1024)
    assert np.all((g >= 0) & (g <= 1))
    for N in range(6):
        assert g[4**N] == 0
        if 2 * 4**N <= 1024:
            assert g[2 * 4**N] == 1
    assert g[0] == 0
    with pytest.raises(ValueError):
        sl.sawtooth_g(3)


def test_oscillation_certificate_n3():
    rep = sl.oscillation_certificate(sl.SawtoothParams(1024), 1, N_range=[3])
    assert rep["t_low"] == 63 and rep["t_high"] == 127
    assert rep["low"] <= 0.45 and rep["high"] >= 0.6 and rep["gap"] >= 0.1


def test_oscillation_certificate_default_uses_largest_N():
    rep = sl.oscillation_certificate(sl.SawtoothParams(1024))
    assert rep["N"] == 4 and rep["certified"]
    assert [r["N"] for r in rep["per_N"]] == [1, 2, 3, 4]


def test_oscillation_coverage_error():
    with pytest.raises(CoverageError, match="n_max >= "):
        sl.oscillation_certificate(sl.SawtoothParams(1024), 1, N_range=[5])


def test_oscillation_constant_negative_control():
    g = np.full(1025, 0.4)
    rep = sl.oscillation_certificate(sl.SawtoothParams(1024), 1, g=g)
    assert abs(rep["gap"]) <= 1e-12
    assert not rep["certified"]


def test_truncation_entry_matches_poisson_sum():
    g = sl.sawtooth_g(1024)
    assert truncation_entry_check(g, 128, 5.0) <= 1e-6


def test_weights_roundtrip(tmp_path):
    w = np.exp(sl.sawtooth_g(64))
    p = tmp_path / "w.csv"
    sl.write_weights(p, w)
    assert np.array_equal(sl.read_weights(p), w)
    assert p.read_text().splitlines()[0] == "index,value"
