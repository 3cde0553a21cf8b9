import math

import numpy as np
import pytest

from stabcert import classical, enriched
from stabcert.classk import Envelope, identity_k, power_k
from stabcert.core import CheckFailed, ConfigurationError, make_rng
from stabcert.flows import check_stable
from stabcert.lyapunov import (
    CandidateV,
    HorizonMode,
    HorizonPolicy,
    InconclusiveTail,
    check_decrescent,
    check_positive_definite,
    check_suprema_axioms,
    construct_converse_V,
    converse_envelope,
    orbit,
    search_envelope,
    supremum_V,
    theorem_alpha,
    verify_lyapunov_theorem,
)

ZERO1, ZERO2 = np.zeros(1), np.zeros(2)
SQ = CandidateV(lambda x: float(np.dot(x, x)), "|x|^2")
SQ_ENV = Envelope(power_k(1.0, 2.0), power_k(1.0, 2.0))


@pytest.fixture(scope="module")
def decay():
    return classical.ode_flow(classical.linear_decay())


@pytest.fixture(scope="module")
def rotation():
    return classical.ode_flow(classical.rotation())


@pytest.fixture(scope="module")
def growth():
    return classical.ode_flow(classical.linear_growth(), horizon=3.0)


def test_positive_definite_examples(decay):
    s = decay.setting
    assert check_positive_definite(SQ, ZERO1, SQ_ENV, s).passed
    nrm = CandidateV(lambda x: float(np.linalg.norm(x)), "|x|")
    assert check_positive_definite(nrm, ZERO1, Envelope(identity_k(), identity_k()), s).passed
    signed = CandidateV(lambda x: float(x[0]), "x")
    rep = check_positive_definite(signed, ZERO1, Envelope(identity_k(), identity_k()), s)
    assert not rep.passed and rep.counterexample[0][0] < 0


def test_decrescent_examples(decay, rotation, growth):
    assert check_decrescent(SQ, decay, seed=1).passed
    rep = check_decrescent(SQ, rotation, seed=1)
    assert rep.passed and rep.worst_residual <= 1e-6
    assert not check_decrescent(SQ, growth, seed=1).passed


def test_theorem_alpha_is_identity_for_square_envelope():
    a = theorem_alpha(SQ_ENV)
    for r in (0.0, 0.3, 2.0, 17.0):
        assert a(r) == pytest.approx(r, rel=1e-12)


def test_lyapunov_theorem_decay(decay):
    w = verify_lyapunov_theorem(SQ, decay, ZERO1, SQ_ENV, seed=2, sample_count=100)
    assert w.passed and w.report.law_name == "lyapunov_theorem"


def test_lyapunov_theorem_halving():
    flow = classical.discrete_system_flow(classical.halving_map())
    V = CandidateV(lambda x: float(abs(x[0])))
    w = verify_lyapunov_theorem(V, flow, ZERO1, Envelope(identity_k(), identity_k()), seed=2)
    assert w.passed and w.alpha(3.0) == 3.0


def test_lyapunov_theorem_gates_on_preconditions(growth):
    with pytest.raises(CheckFailed) as exc:
        verify_lyapunov_theorem(SQ, growth, ZERO1, SQ_ENV, seed=1, sample_count=50)
    assert exc.value.report.law_name == "decrescent"


def test_search_envelope(decay):
    env = search_envelope(SQ, ZERO1, decay.setting, seed=1)
    assert env.lower(2.0) == pytest.approx(4.0) and env.upper(2.0) == pytest.approx(4.0)
    with pytest.raises(ConfigurationError):
        search_envelope(CandidateV(lambda x: 1.0), ZERO1, decay.setting, seed=1)


def _reals(rng, n):
    return [0.0] + rng.uniform(0, 5, size=n - 1).tolist()


def test_suprema_axioms_examples():
    ok = check_suprema_axioms(lambda a, b: b * math.exp(-a), lambda b: b, lambda b: b,
                              lambda c: c, _reals, _reals, _reals, seed=1, sample_count=20)
    assert ok.passed
    ok2 = check_suprema_axioms(lambda a, b: min(a, b), lambda b: b, lambda b: b, lambda c: c,
                               lambda rng, n: _reals(rng, n) + [10.0], _reals, _reals,
                               seed=1, sample_count=20)
    assert ok2.passed
    bad = check_suprema_axioms(lambda a, b: b * math.exp(-a), lambda b: b, lambda b: b / 2,
                               lambda c: c, _reals, _reals, _reals, seed=1, sample_count=20)
    assert not bad.passed
    assert bad.counterexample[0] == 0.0


def test_converse_decay_and_rotation(decay, rotation):
    for flow, xs, policy in ((decay, ZERO1, HorizonPolicy()),
                             (rotation, ZERO2, HorizonPolicy(tail_factor=1.0))):
        w = check_stable(flow, xs, identity_k(), seed=5, sample_count=50)
        V = construct_converse_V(flow, xs, w, policy)
        for x in flow.setting.sample(make_rng(9), 30):
            assert abs(V(x) - np.linalg.norm(x)) <= 1e-6
        assert check_positive_definite(V, xs, converse_envelope(w), flow.setting,
                                       seed=3, sample_count=30).passed
        assert check_decrescent(V, flow, seed=3, sample_count=30).passed


def test_converse_requires_passing_witness(growth):
    w = check_stable(growth, ZERO1, identity_k(), seed=1, sample_count=20)
    with pytest.raises(CheckFailed):
        construct_converse_V(growth, ZERO1, w)


def test_tail_check_raises_on_growth_and_conserved_norm(growth, rotation):
    with pytest.raises(InconclusiveTail):
        supremum_V(growth, ZERO1, HorizonPolicy(horizon=3.0))(np.array([1.0]))
    with pytest.raises(InconclusiveTail):
        supremum_V(rotation, ZERO2, HorizonPolicy(tail_factor=0.5))(np.array([1.0, 0.0]))


def test_horizon_policy_validation():
    with pytest.raises(ValueError):
        HorizonPolicy(tail_factor=0.0)
    with pytest.raises(ValueError):
        HorizonPolicy(tail_factor=1.5)


def test_cycle_detect_matches_brute_force():
    sys = enriched.SetSystem.from_mapping({"a": "a", "b": "c", "c": "b", "d": "a"})
    flow = enriched.powerset_setflow(sys)
    star = sys.subset(["a"])
    V = supremum_V(flow, star, HorizonPolicy(HorizonMode.CYCLE_DETECT))
    Vex = supremum_V(flow, star, HorizonPolicy(HorizonMode.EXHAUSTIVE_FINITE))
    for U in enriched.all_subsets(sys.size):
        # oracle: plain python sets, iterate 2^|E| steps
        cur, acc = set(sys.labels(U)), set()
        for _ in range(1 << sys.size):
            acc |= (cur - {"a"}) | ({"a"} - cur)
            cur = {{"a": "a", "b": "c", "c": "b", "d": "a"}[x] for x in cur}
        assert set(sys.labels(V(U))) == acc
        assert V(U) == Vex(U)


def test_orbit_lists_each_state_once():
    sys = enriched.SetSystem.from_mapping({"a": "b", "b": "c", "c": "a"})
    flow = enriched.powerset_setflow(sys)
    assert len(orbit(flow, sys.subset(["a"]), 1)) == 3


def test_policy_mode_mismatch(decay):
    with pytest.raises(ConfigurationError):
        supremum_V(decay, ZERO1, HorizonPolicy(HorizonMode.CYCLE_DETECT))
    with pytest.raises(ConfigurationError):
        supremum_V(decay, ZERO1, HorizonPolicy(HorizonMode.EXHAUSTIVE_FINITE))
