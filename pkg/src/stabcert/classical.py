"""Euclidean instances: ODE flows by fixed-step RK4 and iterated discrete maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT
from .core import (
    CheckReport,
    NumericError,
    Setting,
    Tally,
    continuous_time,
    make_rng,
    naturals_time,
    real_stable_space,
)
from .flows import Flow, time_state_pairs
from .lyapunov import CandidateV, check_decrescent


class DivergenceError(NumericError):
    def __init__(self, t: float):
        self.t = t
        super().__init__(f"state became non-finite at t={t:.6g}")


@dataclass(frozen=True)
class OdeSystem:
    dimension: int
    vector_field: Callable[[np.ndarray], np.ndarray]
    step_size: float = 0.05
    integrator: str = "RK4"
    name: str = "ode"

    def __post_init__(self):
        if self.integrator != "RK4":
            raise ValueError(f"unsupported integrator {self.integrator!r}")
        if self.step_size <= 0:
            raise ValueError("step size must be positive")


@dataclass(frozen=True)
class DiscreteSystem:
    dimension: int
    step: Callable[[np.ndarray], np.ndarray]
    name: str = "map"


def _rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _advance(ode: OdeSystem, x: np.ndarray, t0: float, duration: float) -> np.ndarray:
    h = ode.step_size
    n = int(math.floor(duration / h + 1e-9))
    rest = duration - n * h
    f = ode.vector_field
    with np.errstate(over="ignore", invalid="ignore"):
        return _advance_steps(f, x, t0, h, n, rest, duration)


def _advance_steps(f, x, t0, h, n, rest, duration):
    for i in range(n):
        x = _rk4_step(f, x, h)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(t0 + (i + 1) * h)
    if rest > 1e-12:
        x = _rk4_step(f, x, rest)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(t0 + duration)
    return x


def integrate_flow(ode: OdeSystem, t: float, x) -> np.ndarray:
    """RK4 from 0 to t with step h; the final partial step is shortened."""
    if t < 0:
        raise ValueError("flows are only defined for t >= 0")
    return _advance(ode, np.array(x, dtype=float), 0.0, float(t))


def discrete_flow(sys: DiscreteSystem, k: int, x) -> np.ndarray:
    if k < 0:
        raise ValueError("iteration count must be nonnegative")
    x = np.array(x, dtype=float)
    for _ in range(int(k)):
        x = np.asarray(sys.step(x), dtype=float)
    return x


def euclidean_setting(dimension: int, time, radius: float = 2.0,
                      tolerance: float = DEFAULT.real_eq, name: str = "euclidean") -> Setting:
    """R^n with the Euclidean metric, sampled uniformly from the box [-radius, radius]^n."""

    def sampler(rng, count):
        return list(rng.uniform(-radius, radius, size=(count, dimension)))

    def ball_sampler(rng, center, r, count):
        center = np.asarray(center, dtype=float)
        out = []
        for _ in range(count):
            u = rng.normal(size=dimension)
            u /= np.linalg.norm(u) or 1.0
            out.append(center + r * rng.uniform() ** (1.0 / dimension) * u)
        return out

    return Setting(
        name=name,
        stable=real_stable_space(tolerance),
        time=time,
        distance=lambda x, y: float(np.linalg.norm(np.asarray(x) - np.asarray(y))),
        sampler=sampler,
        ball_sampler=ball_sampler,
        metadata={"dimension": dimension, "radius": radius},
    )


class OdeFlow(Flow):
    def __init__(self, ode: OdeSystem, setting: Setting, tolerance: float = DEFAULT.ode):
        super().__init__(setting, lambda t, x: integrate_flow(ode, t, x), tolerance, ode.name)
        self.ode = ode

    def trajectory(self, x, times: Sequence) -> list:
        out = []
        cur = np.array(x, dtype=float)
        last = 0.0
        for t in times:
            if t < last:
                return super().trajectory(x, times)
            cur = _advance(self.ode, cur, last, float(t) - last)
            last = float(t)
            out.append(cur)
        return out


def ode_flow(ode: OdeSystem, horizon: float = 20.0, radius: float = 2.0,
             tolerance: float = DEFAULT.ode) -> OdeFlow:
    time = continuous_time(horizon, ode.step_size)
    setting = euclidean_setting(ode.dimension, time, radius, name=f"euclidean-{ode.name}")
    return OdeFlow(ode, setting, tolerance)


def discrete_system_flow(sys: DiscreteSystem, radius: float = 2.0,
                         sample_max: int = 50) -> Flow:
    setting = euclidean_setting(sys.dimension, naturals_time(sample_max=sample_max), radius,
                                name=f"euclidean-{sys.name}")
    return Flow(setting, lambda k, x: discrete_flow(sys, k, x), DEFAULT.real_eq, sys.name)


def check_discrete_lyapunov(V: CandidateV, sys: DiscreteSystem, seed: int = 0,
                            sample_count: int = 200, radius: float = 2.0,
                            tolerance: float = DEFAULT.real_eq) -> CheckReport:
    """V(F(x)) - V(x) <= 0 on samples."""
    rng = make_rng(seed)
    tally = Tally("discrete_lyapunov", tolerance)
    for x in rng.uniform(-radius, radius, size=(sample_count, sys.dimension)):
        tally.record(V(np.asarray(sys.step(x), dtype=float)) - V(x), (x,), "V(F(x)) > V(x)")
    return tally.report()


def check_derivative_condition(V: CandidateV, ode: OdeSystem, seed: int = 0,
                               sample_count: int = 200, fd_step: float = DEFAULT.fd_step,
                               radius: float = 2.0, rel_tol: float = DEFAULT.fd_rel) -> CheckReport:
    """Directional derivative of V along f is <= 0, by central differences.

    The admissible residual at x is ``rel_tol * (1 + |V(x)|)``; the check
    reports residuals already divided by that scale, against tolerance 1.
    """
    rng = make_rng(seed)
    tally = Tally("derivative_condition", 1.0)
    for x in rng.uniform(-radius, radius, size=(sample_count, ode.dimension)):
        fx = np.asarray(ode.vector_field(x), dtype=float)
        dv = (V(x + fd_step * fx) - V(x - fd_step * fx)) / (2.0 * fd_step)
        scale = rel_tol * (1.0 + abs(V(x)))
        tally.record(max(dv, 0.0) / scale, (x,), f"dV/dt = {dv:.3g} > 0")
    return tally.report()


def check_derivative_equivalence(V: CandidateV, flow: OdeFlow, seed: int = 0,
                                 sample_count: int = 200, small_t: float = 0.5) -> CheckReport:
    """The derivative condition holds iff V decreases along the flow for small t."""
    deriv = check_derivative_condition(V, flow.ode, seed, sample_count,
                                       radius=flow.setting.metadata.get("radius", 2.0))
    rng = make_rng(seed)
    pairs = [(float(t), x) for t, x in time_state_pairs(flow, rng, sample_count)]
    pairs = [(min(t, small_t), x) for t, x in pairs]
    dec = check_decrescent(V, flow, seed, sample_count, pairs=pairs)
    agree = deriv.passed == dec.passed
    return CheckReport(
        law_name="derivative_equivalence",
        passed=agree,
        samples_checked=deriv.samples_checked + dec.samples_checked,
        worst_residual=0.0 if agree else 1.0,
        counterexample=None if agree else (deriv.passed, dec.passed),
        detail=f"derivative condition {'passes' if deriv.passed else 'fails'}, "
               f"decrescent {'passes' if dec.passed else 'fails'}",
    )


# named systems selectable from scenarios

def linear_decay(step_size: float = 0.05) -> OdeSystem:
    return OdeSystem(1, lambda x: -x, step_size, name="linear-decay")


def linear_growth(step_size: float = 0.05) -> OdeSystem:
    return OdeSystem(1, lambda x: x, step_size, name="linear-growth")


def rotation(step_size: float = 0.05) -> OdeSystem:
    return OdeSystem(2, lambda x: np.array([-x[1], x[0]]), step_size, name="rotation")


def halving_map() -> DiscreteSystem:
    return DiscreteSystem(1, lambda x: x / 2.0, name="halving-map")


def affine_map() -> DiscreteSystem:
    """F(x) = x/2 + 1 with fixed point 2."""
    return DiscreteSystem(1, lambda x: x / 2.0 + 1.0, name="affine-map")
