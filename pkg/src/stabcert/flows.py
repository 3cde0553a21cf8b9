"""Flows (monoid actions on a space), equilibria and Lyapunov stability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .classk import ClassKMorphism, identity_k
from .core import (
    CheckFailed,
    CheckReport,
    ConfigurationError,
    NumericError,
    Setting,
    Tally,
    TimeKind,
    make_rng,
    norm,
)


class Flow:
    """An action ``act(t, x)`` of the setting's time monoid on its space.

    ``trajectory`` evaluates the action at an increasing sequence of times;
    subclasses override it when incremental evaluation is cheaper.
    """

    def __init__(self, setting: Setting, act: Callable[[Any, Any], Any],
                 tolerance: float = 0.0, name: str = "flow"):
        self.setting = setting
        self.act = act
        self.tolerance = tolerance
        self.name = name

    def __call__(self, t, x):
        return self.act(t, x)

    def trajectory(self, x, times: Sequence) -> list:
        return [self.act(t, x) for t in times]

    def __repr__(self):
        return f"Flow({self.name!r} on {self.setting.name!r})"


@dataclass(frozen=True)
class EquilibriumWitness:
    point: Any
    checked_times: int
    worst_residual: float


@dataclass(frozen=True)
class StabilityWitness:
    alpha: Optional[ClassKMorphism]
    report: CheckReport

    @property
    def passed(self) -> bool:
        return self.report.passed


def _finite(x) -> bool:
    if isinstance(x, np.ndarray):
        return bool(np.all(np.isfinite(x)))
    if isinstance(x, float):
        return math.isfinite(x)
    return True


def _safe_act(flow: Flow, t, x):
    y = flow.act(t, x)
    if not _finite(y):
        raise NumericError(f"non-finite state at t={t!r}")
    return y


def time_state_pairs(flow: Flow, rng: np.random.Generator, sample_count: int) -> list:
    """(t, x) pairs: exhaustive on finite carriers, sampled otherwise."""
    setting = flow.setting
    time = setting.time
    exhaustive_time = time.kind is TimeKind.DISCRETE_EXHAUSTIVE and time.elements is not None
    if setting.finite and exhaustive_time:
        return list(product(time.elements(), setting.elements()))
    xs = setting.sample(rng, sample_count)
    if exhaustive_time:
        return list(product(time.elements(), xs))
    ts = time.sample(rng, len(xs))
    return list(zip(ts, xs))


def check_flow_laws(flow: Flow, seed: int = 0, sample_count: int = 100) -> CheckReport:
    """Initialization and composition squares of the action."""
    rng = make_rng(seed)
    setting, time = flow.setting, flow.setting.time
    tally = Tally("flow_laws", flow.tolerance)
    xs = setting.sample(rng, sample_count)
    for x in xs:
        try:
            y = _safe_act(flow, time.unit, x)
        except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
            tally.fail((time.unit, x), f"action failed: {exc}")
            continue
        tally.record(setting.gap(y, x), (time.unit, x), "unit does not act as identity")

    if time.kind is TimeKind.DISCRETE_EXHAUSTIVE and time.elements is not None:
        ts = list(time.elements())
        triples = [(a, b, x) for x in xs for a, b in product(ts, repeat=2)]
    else:
        t1 = time.sample(rng, len(xs))
        t2 = time.sample(rng, len(xs))
        triples = list(zip(t1, t2, xs))
    for a, b, x in triples:
        try:
            lhs = _safe_act(flow, a, _safe_act(flow, b, x))
            rhs = _safe_act(flow, time.op(a, b), x)
        except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
            tally.fail((a, b, x), f"action failed: {exc}")
            continue
        tally.record(setting.gap(lhs, rhs), (a, b, x), "composition law violated")
    return tally.report()


def check_flow_morphism(p: Callable[[Any], Any], flow_x: Flow, flow_y: Flow,
                        seed: int = 0, sample_count: int = 100) -> CheckReport:
    """p(phi_X(t, x)) = phi_Y(t, p(x)) on samples."""
    if flow_x.setting.time is not flow_y.setting.time and \
            flow_x.setting.time.name != flow_y.setting.time.name:
        raise ConfigurationError("flow morphism needs both flows over the same time monoid")
    tol = max(flow_x.tolerance, flow_y.tolerance)
    tally = Tally("flow_morphism", tol)
    for t, x in time_state_pairs(flow_x, make_rng(seed), sample_count):
        lhs = p(flow_x.act(t, x))
        rhs = flow_y.act(t, p(x))
        tally.record(flow_y.setting.gap(lhs, rhs), (t, x), "p does not intertwine the flows")
    return tally.report()


def check_equilibrium(flow: Flow, x_star, seed: int = 0,
                      time_sample_count: int = 100) -> EquilibriumWitness:
    """Raise :class:`CheckFailed` unless phi(t, x*) = x* on all sampled t."""
    time = flow.setting.time
    ts = time.sample(make_rng(seed), time_sample_count)
    tally = Tally("equilibrium", flow.tolerance)
    for t in ts:
        tally.record(flow.setting.gap(flow.act(t, x_star), x_star), (t,),
                     "x* moves under the flow")
    report = tally.report()
    if not report.passed:
        raise CheckFailed(report)
    return EquilibriumWitness(x_star, report.samples_checked, report.worst_residual)


def check_stable(flow: Flow, x_star, alpha: ClassKMorphism, seed: int = 0,
                 sample_count: int = 200, pairs: Optional[list] = None) -> StabilityWitness:
    """||phi(t, x)|| <= alpha(||x||) on every checked (t, x).

    A failed report only says that this alpha does not certify stability on
    the samples; it is never a proof of instability.
    """
    setting = flow.setting
    stable = setting.stable
    tol = max(stable.tolerance, flow.tolerance)
    tally = Tally("stable", tol)
    if pairs is None:
        pairs = time_state_pairs(flow, make_rng(seed), sample_count)
    for t, x in pairs:
        try:
            lhs = norm(setting, x_star, _safe_act(flow, t, x))
        except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
            tally.fail((t, x), f"action failed: {exc}")
            continue
        rhs = alpha(norm(setting, x_star, x))
        tally.record(stable.excess(lhs, rhs), (t, x),
                     f"||phi(t,x)|| exceeds {alpha.label}(||x||)")
    return StabilityWitness(alpha, tally.report())


def check_weakly_contracting(flow: Flow, seed: int = 0, sample_count: int = 200) -> CheckReport:
    """d(phi_t(x), phi_t(y)) <= d(x, y) on sampled (t, x, y)."""
    rng = make_rng(seed)
    setting = flow.setting
    stable = setting.stable
    time = setting.time
    pairs = setting.pairs(rng, sample_count)
    if time.kind is TimeKind.DISCRETE_EXHAUSTIVE and time.elements is not None:
        triples = [(t, x, y) for x, y in pairs for t in time.elements()]
    else:
        ts = time.sample(rng, len(pairs))
        triples = [(t, x, y) for t, (x, y) in zip(ts, pairs)]
    tally = Tally("weakly_contracting", max(stable.tolerance, flow.tolerance))
    for t, x, y in triples:
        lhs = setting.distance(flow.act(t, x), flow.act(t, y))
        tally.record(stable.excess(lhs, setting.distance(x, y)), (t, x, y),
                     "the flow expands this pair")
    return tally.report()


def stability_from_contraction(flow: Flow, x_star, seed: int = 0,
                               sample_count: int = 200) -> StabilityWitness:
    """Weak contraction plus equilibrium yields stability with alpha = id.

    Both preconditions are re-checked; the returned witness carries the
    report of ``check_stable`` with the identity.
    """
    contraction = check_weakly_contracting(flow, seed, sample_count)
    if not contraction.passed:
        raise CheckFailed(contraction)
    check_equilibrium(flow, x_star, seed, sample_count)
    return check_stable(flow, x_star, identity_k(), seed, sample_count)


def epsilon_delta_check(flow: Flow, x_star, witness: StabilityWitness,
                        epsilons: Sequence[float], seed: int = 0,
                        sample_count: int = 100) -> CheckReport:
    """For each eps take delta = alpha^-1(eps); starts in the delta ball stay eps close."""
    setting = flow.setting
    if setting.ball_sampler is None or not setting.stable.numeric:
        raise ConfigurationError("epsilon-delta check needs a real-valued Euclidean setting")
    if witness.alpha is None:
        raise ConfigurationError("witness carries no class K morphism")
    rng = make_rng(seed)
    tally = Tally("epsilon_delta", max(setting.stable.tolerance, flow.tolerance))
    for eps in epsilons:
        delta = witness.alpha.inverse(eps)
        xs = setting.ball_sampler(rng, x_star, delta, sample_count)
        ts = setting.time.sample(rng, len(xs))
        for t, x in zip(ts, xs):
            d = norm(setting, x_star, flow.act(t, x))
            tally.record(d - eps, (eps, delta, t, x), "trajectory leaves the eps ball")
    return tally.report()
