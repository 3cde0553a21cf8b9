import math

import numpy as np
import pytest

from stabcert import classical
from stabcert.classical import (
    DiscreteSystem,
    DivergenceError,
    OdeSystem,
    check_derivative_condition,
    check_derivative_equivalence,
    check_discrete_lyapunov,
    discrete_flow,
    integrate_flow,
)
from stabcert.lyapunov import CandidateV

SQ = CandidateV(lambda x: float(np.dot(x, x)), "|x|^2")
ABS = CandidateV(lambda x: float(np.linalg.norm(x)), "|x|")


def test_integrate_examples():
    assert integrate_flow(classical.linear_decay(), 1.0, np.array([1.0]))[0] == \
        pytest.approx(math.exp(-1), abs=1e-6)
    still = OdeSystem(2, lambda x: np.zeros_like(x))
    x = np.array([0.3, -1.2])
    np.testing.assert_array_equal(integrate_flow(still, 3.7, x), x)
    y = integrate_flow(classical.rotation(), math.pi / 2, np.array([1.0, 0.0]))
    np.testing.assert_allclose(y, [0.0, 1.0], atol=1e-6)


def test_off_grid_time_uses_short_final_step():
    y = integrate_flow(classical.linear_decay(), 0.123, np.array([2.0]))
    assert y[0] == pytest.approx(2.0 * math.exp(-0.123), abs=1e-7)


def test_divergence_detected():
    blowup = OdeSystem(1, lambda x: x ** 2 * 1e3, step_size=0.5)
    with pytest.raises(DivergenceError):
        integrate_flow(blowup, 50.0, np.array([10.0]))


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        integrate_flow(classical.linear_decay(), -1.0, np.array([1.0]))


def test_discrete_examples():
    half = classical.halving_map()
    assert discrete_flow(half, 3, np.array([8.0]))[0] == 1.0
    np.testing.assert_array_equal(discrete_flow(half, 0, np.array([5.0])), [5.0])
    aff = DiscreteSystem(1, lambda x: 0.9 * x + 0.1)
    assert discrete_flow(aff, 2, np.array([1.0]))[0] == pytest.approx(1.0, abs=1e-15)


def test_trajectory_matches_pointwise():
    flow = classical.ode_flow(classical.rotation())
    x = np.array([0.4, 1.1])
    ts = [0.0, 0.05, 0.5, 1.37, 4.0]
    for t, y in zip(ts, flow.trajectory(x, ts)):
        np.testing.assert_allclose(y, flow.act(t, x), atol=1e-12)


def test_discrete_lyapunov_examples():
    assert check_discrete_lyapunov(ABS, classical.halving_map(), seed=1).passed
    assert not check_discrete_lyapunov(ABS, DiscreteSystem(1, lambda x: 2 * x), seed=1).passed
    c, s = math.cos(0.3), math.sin(0.3)
    rot = DiscreteSystem(2, lambda x: np.array([c * x[0] - s * x[1], s * x[0] + c * x[1]]))
    assert check_discrete_lyapunov(SQ, rot, seed=1).passed


def test_derivative_condition_examples():
    assert check_derivative_condition(SQ, classical.linear_decay(), seed=1).passed
    assert check_derivative_condition(SQ, classical.rotation(), seed=1).passed
    rep = check_derivative_condition(SQ, classical.linear_growth(), seed=1)
    assert not rep.passed and abs(rep.counterexample[0][0]) > 0


@pytest.mark.parametrize("system", [classical.linear_decay, classical.rotation,
                                    classical.linear_growth])
def test_derivative_equivalence(system):
    flow = classical.ode_flow(system(), horizon=5.0)
    assert check_derivative_equivalence(SQ, flow, seed=2, sample_count=100).passed


def test_rk4_fourth_order():
    x = np.array([1.0])
    errs = []
    for h in (0.1, 0.05):
        y = integrate_flow(classical.linear_decay(h), 2.0, x)[0]
        errs.append(abs(y - math.exp(-2.0)))
    assert errs[0] / errs[1] > 14
