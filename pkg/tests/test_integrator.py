import numpy as np
import pytest
from scipy.integrate._ivp.rk import RK45

from normflow.errors import DomainError, IntegrationError, StiffnessError
from normflow.integrator import A, B, B_LOW, C, E, StepControl, geometric_grid, integrate


def test_tableau_matches_scipy_dopri():
    assert np.allclose(C[:6], RK45.C)
    assert np.allclose(B[:6], RK45.B)
    for s in range(1, 6):
        assert np.allclose(A[s], RK45.A[s, :s])
    # scipy stores the error weights with the opposite sign
    assert np.allclose(E, -RK45.E)
    assert np.isclose(B.sum(), 1.0) and np.isclose(B_LOW.sum(), 1.0)


def test_linear_decay_accuracy():
    lam = -1.3 + 0.7j
    ctrl = StepControl(rtol=1e-10, atol=1e-12, normality_tol=0)
    res = integrate(lambda y: lam * y, np.array([1.0 + 0j]), 5.0, ctrl, sample_times=[1, 2, 3])
    assert res.times == [0.0, 1.0, 2.0, 3.0, 5.0]
    exact = np.exp(lam * np.array(res.times))
    got = np.array([s[0] for s in res.states])
    assert np.max(np.abs(got - exact)) <= 1e-9
    assert res.status == "t_end_reached"


def test_fifth_order_convergence():
    # fixed steps through h_max; observed order close to 5
    errs = []
    for h in (0.1, 0.05, 0.025):
        ctrl = StepControl(rtol=1e3, atol=1e3, h_init=h, h_max=h)
        res = integrate(lambda y: -y**2, np.array([1.0 + 0j]), 2.0, ctrl)
        errs.append(abs(res.y_final[0] - 1 / 3))
    orders = np.log2([errs[0] / errs[1], errs[1] / errs[2]])
    assert np.all((orders > 4.5) & (orders < 6.5)), orders


def test_zero_horizon():
    res = integrate(lambda y: y, np.ones(2), 0.0, StepControl())
    assert res.times == [0.0] and res.status == "t_end_reached"


def test_stop_check_converges():
    ctrl = StepControl(settle_steps=5)
    res = integrate(lambda y: -y, np.array([1.0 + 0j]), 100.0, ctrl, stop_check=lambda y: abs(y[0]) < 1e-3)
    assert res.status == "converged"
    assert res.t_final < 100
    assert abs(res.y_final[0]) < 1e-3
    assert res.times[-1] == res.t_final


def test_domain_error_rejects_then_fails():
    def f(y):
        if y[0].real > 1.5:
            raise DomainError("left domain")
        return np.array([1.0 + 0j])

    with pytest.raises(IntegrationError) as info:
        integrate(f, np.array([0.0 + 0j]), 3.0, StepControl())
    assert info.value.last_state is not None
    assert info.value.last_state[0].real <= 1.5


def test_stiffness_error():
    ctrl = StepControl(h_min=1e-3)
    with pytest.raises(StiffnessError):
        integrate(lambda y: y**3, np.array([1.0 + 0j]), 1.0, ctrl)


def test_post_step_residual_rejects():
    calls = []

    def post(y):
        calls.append(1)
        return y, 0.0

    res = integrate(lambda y: -y, np.ones(3, complex), 1.0, StepControl(), post_step=post)
    assert len(calls) == len(res.step_stats)


def test_geometric_grid():
    g = geometric_grid(10.0, 0.01, 1.3)
    assert g[0] == 0.0 and g[1] == 0.01 and g[-1] == 10.0
    assert np.all(np.diff(g) > 0)
    assert geometric_grid(0.0) == [0.0]
