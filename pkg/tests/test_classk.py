import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabcert.classk import (
    ClassKMorphism,
    Envelope,
    bisection_inverse,
    check_class_k,
    check_classk_inverse_lemma,
    check_envelope,
    identity_k,
    numeric_k,
    power_k,
)
from stabcert.core import real_stable_space

R = real_stable_space()


@pytest.mark.parametrize("alpha", [power_k(2.0, 1.0), power_k(1.0, 2.0), identity_k()])
def test_class_k_examples(alpha):
    assert check_class_k(alpha, R, seed=1).passed
    assert check_classk_inverse_lemma(alpha, R, seed=1).passed


def test_class_k_shift_fails_zero():
    shift = ClassKMorphism(lambda r: r + 1, lambda r: r - 1, "r+1")
    rep = check_class_k(shift, R)
    assert not rep.passed
    assert rep.counterexample == (0.0,)
    assert rep.worst_residual >= 1


def test_non_monotone_fails():
    bad = ClassKMorphism(lambda r: math.sin(r) ** 2 + 0 * r, lambda r: r, "sin^2")
    assert not check_class_k(bad, R, seed=2).passed


def test_cubic_numeric_inverse():
    alpha = numeric_k(lambda r: r ** 3 + r, "r^3+r")
    assert check_class_k(alpha, R, seed=3).passed
    assert check_classk_inverse_lemma(alpha, R, seed=3).passed
    # independent oracle: Cardano's formula for s^3 + s = 10 gives s = 2
    assert alpha.inverse(10.0) == pytest.approx(2.0, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 1e4))
def test_power_round_trip(r):
    for a in (power_k(2.0, 1.0), power_k(0.5, 2.0), power_k(3.0, 0.5)):
        assert a.inverse(a(r)) == pytest.approx(r, rel=1e-9, abs=1e-12)


def test_composition_and_inverse():
    a, b = power_k(2.0, 1.0), power_k(1.0, 2.0)
    ab = a.after(b)
    assert ab(3.0) == 18.0
    assert ab.inverse(18.0) == pytest.approx(3.0)
    assert a.inverted()(4.0) == 2.0
    assert power_k(2.0, 1.0)(math.inf) == math.inf


def test_power_k_validates():
    with pytest.raises(ValueError):
        power_k(0.0, 1.0)


def test_bisection_inverse():
    assert bisection_inverse(lambda s: s * s, 9.0) == pytest.approx(3.0, abs=1e-10)
    assert bisection_inverse(lambda s: s, 0.0) == 0.0


def test_envelope_order():
    assert check_envelope(Envelope(power_k(1.0, 1.0), power_k(2.0, 1.0)), R).passed
    assert not check_envelope(Envelope(power_k(2.0, 1.0), power_k(1.0, 1.0)), R).passed
