import math

import numpy as np
import pytest

from normflow import diagnostics as dg
from normflow.flowengine import integrate_decomposed, integrate_direct, spectral_domain
from normflow.generators import complex_gaussian, jordan, random_matrix, random_normal, triangular_random
from normflow.integrator import StepControl
from normflow.matcore import schur_triangularize
from normflow.philib import builtin_pair

HAAG = builtin_pair("haagerup", (0, 4))


def test_record_identity():
    r = dg.record(np.eye(3))
    assert r.normality_defect == 0 and r.op_norm == pytest.approx(1.0)
    assert np.allclose(r.s_products, 1.0)
    assert r.y_energy is None and r.commutator_energy is None
    assert math.isnan(r.t)


def test_record_nilpotent():
    r = dg.record(np.array([[0, 1], [0, 0]]), t=2.0)
    assert r.normality_defect == pytest.approx(math.sqrt(2))
    assert r.op_norm == pytest.approx(1.0)
    assert r.t == 2.0
    assert r.schatten[2] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_record_energy_identity(seed):
    r = dg.record(complex_gaussian(4, seed))
    assert abs(r.haagerup_energy - r.normality_defect**2 / 4) <= 1e-12 * max(1, r.haagerup_energy)
    assert all(v >= 0 for v in r.schatten.values())
    s = r.singular_values
    assert r.schatten[4] == pytest.approx(np.sum(s**4) ** 0.25)


def test_record_with_context():
    T = triangular_random(3, 1)
    tri, tr = integrate_decomposed(HAAG, schur_triangularize(T), 0.5)
    r = dg.record(tri[-1].lam + tri[-1].y, tri[-1])
    assert r.t == tri[-1].t
    assert r.y_energy == pytest.approx(np.linalg.norm(tri[-1].y) ** 2)
    recs = dg.trajectory_records(tr, tri)
    assert len(recs) == len(tri)
    assert all(r.y_energy is not None for r in recs)
    assert dg.max_increase([r.y_energy for r in recs]) <= 1e-9


def test_diag_row_lengths():
    r = dg.record(complex_gaussian(3, 0), t=0.0)
    assert len(dg.diag_row(r)) == len(dg.diag_header(3))
    assert len(dg.spectrum_row(r)) == len(dg.spectrum_header(3))


def test_rate_predict_haagerup():
    k = dg.rate_predict(HAAG, np.diag([0.0, 1.0]))
    assert k == {(0, 1): pytest.approx(2.0)}


def test_rate_predict_aluthge():
    p = builtin_pair("aluthge", (0.5, 3))
    k = dg.rate_predict(p, [1.0, math.e])
    assert k[(0, 1)] == pytest.approx((math.e - 1) / (math.e + 1), rel=1e-12)


def test_rate_predict_equal_and_equal_modulus():
    k = dg.rate_predict(HAAG, [1.0, 1.0, 1j])
    assert (0, 1) not in k
    # |1| = |i| but 1 != i: derivative branch, (x^2)' = 2 twice
    assert k[(0, 2)] == pytest.approx(4 / 2 * 2)


def test_measured_decay_matches_rate():
    T = np.array([[1.0, 0.5], [0, 0.3]])
    tr = integrate_direct(HAAG, T, 40.0, StepControl(normality_tol=0))
    y = [abs(schur_triangularize(X).triangular[0, 1]) for X in tr.states]
    rate, npts = dg.fit_decay_rate(tr.times, y, 1e-9, 1e-3)
    assert npts >= 3
    kappa = dg.rate_predict(HAAG, [1.0, 0.3])[(0, 1)]
    assert abs(rate - kappa) <= 0.1 * kappa


def test_gradient_check_examples():
    assert dg.gradient_check(np.array([[0, 1], [0, 0]]), 1e-5) <= 1e-8
    assert dg.gradient_check(complex_gaussian(5, 3), 1e-5) <= 1e-6
    # normal: both sides vanish, the absolute numerator is tiny
    N = random_normal(3, 1)
    C = dg.self_commutator(N)
    F = C @ N - N @ C
    G = dg.energy_gradient_fd(N, 1e-5)
    assert np.linalg.norm(F + G) <= 1e-8


def test_fixed_point_residual():
    assert dg.fixed_point_residual(HAAG, random_normal(4, 2)) <= 1e-10
    assert dg.fixed_point_residual(HAAG, jordan(0, 2)) >= 0.1
    assert dg.fixed_point_residual(HAAG, jordan(0, 2)) == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(3))
def test_frobenius_rate_matches_slope(seed):
    T = random_matrix(4, seed)
    p = builtin_pair("haagerup", spectral_domain(T, True))
    ts = list(np.linspace(0.0, 0.05, 51)[1:])
    tr = integrate_direct(p, T, 0.05, StepControl(rtol=1e-11, atol=1e-13, normality_tol=0), sample_times=ts)
    f2 = np.array([np.linalg.norm(X) ** 2 for X in tr.states])
    t = np.array(tr.times)
    for k in range(1, len(t) - 1):
        slope = (f2[k + 1] - f2[k - 1]) / (t[k + 1] - t[k - 1])
        pred = dg.frobenius_rate(p, tr.states[k])
        assert abs(slope - pred) <= 1e-3 * abs(pred)
        assert dg.trace_positivity(p, tr.states[k]) >= -1e-10


def test_haagerup_energy_non_increasing():
    T = random_matrix(5, 8)
    p = builtin_pair("haagerup", spectral_domain(T, True))
    tr = integrate_direct(p, T, 20.0)
    E = [dg.haagerup_energy(X) for X in tr.states]
    assert dg.max_increase(E) <= 1e-9


def test_spectrum_helpers():
    a = np.array([1, 2j, -1])
    assert dg.spectrum_distance(a, a[::-1]) == 0
    assert dg.spectrum_distance(a, a + 1e-3) == pytest.approx(1e-3)
    tracked = dg.track_spectrum([a, a[[2, 0, 1]] + 0.01])
    assert np.allclose(tracked[1], a + 0.01)


def test_sequence_helpers():
    assert dg.max_increase([3, 2, 2, 1]) <= 0
    assert dg.max_decrease([1, 2, 3]) <= 0
    t = np.linspace(0, 10, 50)
    rate, n = dg.fit_decay_rate(t, 2 * np.exp(-0.7 * t), 1e-4, 1.0)
    assert rate == pytest.approx(0.7) and n > 3
    assert math.isnan(dg.fit_decay_rate([0, 1], [1, 0.5], 0, 2)[0])
