"""Lyapunov morphisms: positive definiteness, decrescence, the theorem and its converse."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Any, Callable, Optional, Sequence

from .classk import ClassKMorphism, Envelope, identity_k, power_k
from .core import (
    CheckFailed,
    CheckReport,
    ConfigurationError,
    NumericError,
    Setting,
    StableSpace,
    Tally,
    TimeKind,
    make_rng,
    merge_reports,
    norm,
    real_stable_space,
)
from .flows import Flow, StabilityWitness, check_stable, time_state_pairs


@dataclass(frozen=True)
class CandidateV:
    fn: Callable[[Any], Any]
    label: str = "V"

    def __call__(self, x):
        return self.fn(x)


class HorizonMode(Enum):
    EXHAUSTIVE_FINITE = "exhaustive-finite"
    CYCLE_DETECT = "cycle-detect"
    FINITE_HORIZON = "finite-horizon-with-tail-check"


@dataclass(frozen=True)
class HorizonPolicy:
    mode: HorizonMode = HorizonMode.FINITE_HORIZON
    horizon: float = 20.0
    tail_factor: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.tail_factor <= 1.0:
            raise ValueError("tail_factor must lie in (0, 1]")


class InconclusiveTail(NumericError):
    """The trajectory norm at the horizon is too large to trust a finite supremum."""

    def __init__(self, x, at_horizon, running_sup, tail_factor):
        self.x = x
        super().__init__(
            f"norm {at_horizon:.6g} at the horizon exceeds {tail_factor:g} x "
            f"running supremum {running_sup:.6g}"
        )


def check_positive_definite(V: CandidateV, x_star, envelope: Envelope, setting: Setting,
                            seed: int = 0, sample_count: int = 200) -> CheckReport:
    """lower(||x||) <= V(x) <= upper(||x||) on samples and at x*; V >= 0, V(x*) = 0."""
    stable = setting.stable
    points = setting.sample(make_rng(seed), sample_count)
    points = [x_star] + [p for p in points if not setting.same_point(p, x_star)]
    tally = Tally("positive_definite", stable.tolerance)
    for x in points:
        n = norm(setting, x_star, x)
        v = V(x)
        tally.record(stable.excess(envelope.lower(n), v), (x,), "V below lower envelope")
        tally.record(stable.excess(v, envelope.upper(n)), (x,), "V above upper envelope")
        tally.record(stable.excess(stable.zero, v), (x,), "V is negative")
    tally.record(stable.gap(V(x_star), stable.zero), (x_star,), "V(x*) is not zero")
    return tally.report()


def check_decrescent(V: CandidateV, flow: Flow, seed: int = 0, sample_count: int = 200,
                     pairs: Optional[list] = None) -> CheckReport:
    """V(phi(t, x)) <= V(x) on sampled (t, x)."""
    stable = flow.setting.stable
    tally = Tally("decrescent", max(stable.tolerance, flow.tolerance))
    if pairs is None:
        pairs = time_state_pairs(flow, make_rng(seed), sample_count)
    for t, x in pairs:
        tally.record(stable.excess(V(flow.act(t, x)), V(x)), (t, x), "V increases along the flow")
    return tally.report()


def theorem_alpha(envelope: Envelope) -> ClassKMorphism:
    """The stability witness lower^-1 o upper."""
    return envelope.lower.inverted().after(envelope.upper)


def verify_lyapunov_theorem(V: CandidateV, flow: Flow, x_star, envelope: Envelope,
                            seed: int = 0, sample_count: int = 200) -> StabilityWitness:
    """Check both Lyapunov conditions, then certify stability with lower^-1 o upper."""
    pd = check_positive_definite(V, x_star, envelope, flow.setting, seed, sample_count)
    if not pd.passed:
        raise CheckFailed(pd)
    dec = check_decrescent(V, flow, seed, sample_count)
    if not dec.passed:
        raise CheckFailed(dec)
    witness = check_stable(flow, x_star, theorem_alpha(envelope), seed, sample_count)
    report = merge_reports("lyapunov_theorem", [pd, dec, witness.report])
    return StabilityWitness(witness.alpha, report)


def search_envelope(V: CandidateV, x_star, setting: Setting, seed: int = 0,
                    sample_count: int = 200,
                    coefficients: Sequence[float] = (0.01, 0.02, 0.05, 0.1, 0.2, 0.25, 0.5, 1.0,
                                                     2.0, 4.0, 5.0, 10.0, 20.0, 50.0, 100.0),
                    powers: Sequence[float] = (1.0, 2.0)) -> Envelope:
    """Find c*r^p bounds below and above V on samples.

    The lower bound takes the largest admissible coefficient, the upper the
    smallest.  Raises :class:`ConfigurationError` when the family has no fit.
    """
    stable = setting.stable
    points = setting.sample(make_rng(seed), sample_count)
    data = [(norm(setting, x_star, x), V(x)) for x in points]
    coefficients = sorted(coefficients)

    def fits(k, below):
        for n, v in data:
            a = k(n)
            if below and not stable.leq(a, v):
                return False
            if not below and not stable.leq(v, a):
                return False
        return True

    lower = upper = None
    for p in powers:
        if lower is None:
            ok = [c for c in coefficients if fits(power_k(c, p), True)]
            if ok:
                lower = power_k(ok[-1], p)
        if upper is None:
            ok = [c for c in coefficients if fits(power_k(c, p), False)]
            if ok:
                upper = power_k(ok[0], p)
    if lower is None or upper is None:
        raise ConfigurationError(f"no envelope c*r^p fits {V.label} on the samples")
    return Envelope(lower, upper)


def check_suprema_axioms(f: Callable[[Any, Any], Any], bound: Callable[[Any], Any],
                         sup_candidate: Callable[[Any], Any], whisker: Callable[[Any], Any],
                         sample_a: Callable, sample_b: Callable, sample_c: Callable,
                         stable: Optional[StableSpace] = None, seed: int = 0,
                         sample_count: int = 50) -> CheckReport:
    """Upper bound, lowest upper bound and whiskering commutation, on samples.

    (i) f(a, b) <= bound(b); (ii) f(a, b) <= sup(b) <= bound(b);
    (iii) sup(r(c)) equals the join of f(a, r(c)) over the sampled a.
    """
    stable = stable or real_stable_space()
    rng = make_rng(seed)
    As = list(sample_a(rng, sample_count))
    Bs = list(sample_b(rng, sample_count))
    Cs = list(sample_c(rng, sample_count))
    upper = Tally("sup_upper_bound", stable.tolerance)
    lowest = Tally("sup_lowest_bound", stable.tolerance)
    whisk = Tally("sup_whiskering", stable.tolerance)
    for a, b in product(As, Bs):
        v = f(a, b)
        upper.record(stable.excess(v, bound(b)), (a, b), "f(a,b) exceeds the bound")
        lowest.record(stable.excess(v, sup_candidate(b)), (a, b), "f(a,b) exceeds the supremum")
    for b in Bs:
        lowest.record(stable.excess(sup_candidate(b), bound(b)), (b,), "supremum exceeds the bound")
    for c in Cs:
        b = whisker(c)
        acc = None
        for a in As:
            v = f(a, b)
            acc = v if acc is None else stable.join(acc, v)
        whisk.record(stable.gap(acc, sup_candidate(b)), (c,),
                     "supremum does not commute with whiskering")
    return merge_reports("suprema_axioms", [upper.report(), lowest.report(), whisk.report()])


def orbit(flow: Flow, x, step) -> list:
    """States of the eventually periodic orbit of x, each listed once."""
    seen = set()
    out = []
    while x not in seen:
        seen.add(x)
        out.append(x)
        x = flow.act(step, x)
    return out


def construct_converse_V(flow: Flow, x_star, witness: StabilityWitness,
                         policy: HorizonPolicy = HorizonPolicy()) -> CandidateV:
    """V(x) = sup over time of ||phi(t, x)||, gated on a passing stability witness.

    The witness supplies the upper bound alpha(||x||) that makes the
    supremum exist; the result satisfies the envelope (id, alpha).
    """
    if not witness.report.passed:
        raise CheckFailed(witness.report, "converse construction needs a passing stability check")
    return supremum_V(flow, x_star, policy)


def supremum_V(flow: Flow, x_star, policy: HorizonPolicy = HorizonPolicy()) -> CandidateV:
    """The supremum of the trajectory norm, evaluated per ``policy``.

    ``EXHAUSTIVE_FINITE`` joins over every element of a finite time carrier,
    ``CYCLE_DETECT`` over the orbit of the unit step on a finite space (exact),
    ``FINITE_HORIZON`` over the time grid up to the horizon and raises
    :class:`InconclusiveTail` when the norm at the horizon exceeds
    ``tail_factor`` times the running supremum.
    """
    setting = flow.setting
    stable = setting.stable
    time = setting.time

    def nrm(y):
        return norm(setting, x_star, y)

    def join_all(values):
        acc = stable.zero
        for v in values:
            acc = stable.join(acc, v)
        return acc

    if policy.mode is HorizonMode.EXHAUSTIVE_FINITE:
        if time.kind is not TimeKind.DISCRETE_EXHAUSTIVE or time.elements is None:
            raise ConfigurationError("exhaustive supremum needs a finite time carrier")
        ts = list(time.elements())

        def V(x):
            return join_all(nrm(y) for y in flow.trajectory(x, ts))

    elif policy.mode is HorizonMode.CYCLE_DETECT:
        if time.kind is TimeKind.CONTINUOUS_SAMPLED or not setting.finite:
            raise ConfigurationError("cycle detection needs discrete time on a finite space")
        step = time.op(time.unit, 1)

        def V(x):
            return join_all(nrm(y) for y in orbit(flow, x, step))

    else:
        if not stable.numeric:
            raise ConfigurationError("the tail check needs a real-valued stable space")
        ts = time.grid(policy.horizon)

        def V(x):
            values = [float(nrm(y)) for y in flow.trajectory(x, ts)]
            sup = max(values)
            if values[-1] > policy.tail_factor * sup + stable.tolerance:
                raise InconclusiveTail(x, values[-1], sup, policy.tail_factor)
            return sup

    return CandidateV(V, f"sup_t ||phi_t(.)|| [{policy.mode.value}]")


def converse_envelope(witness: StabilityWitness) -> Envelope:
    """(id, alpha): the envelope the converse V satisfies by construction."""
    return Envelope(identity_k(), witness.alpha)
