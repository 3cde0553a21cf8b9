"""Settings for stability: ordered measurement spaces, time monoids, distances.

A :class:`Setting` bundles a space of states, a time monoid acting on it, a
posetal "stable" space of measurement values with a zero, and a distance map
into that stable space.  Every check in the package consumes a setting and
returns a :class:`CheckReport`.

Universally quantified laws are verified exhaustively on finite carriers and
by seeded sampling otherwise.  All randomness flows from
``numpy.random.default_rng(seed)`` so reports are reproducible.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .config import DEFAULT


class PosetCompare(Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"

    def flipped(self) -> "PosetCompare":
        if self is PosetCompare.LESS:
            return PosetCompare.GREATER
        if self is PosetCompare.GREATER:
            return PosetCompare.LESS
        return self


class ConfigurationError(ValueError):
    """A setting, scenario or argument is malformed."""


class PreconditionError(ValueError):
    """An operation was called on inputs that violate its precondition."""


class NumericError(ArithmeticError):
    """A numeric routine diverged or failed to converge."""


class CheckFailed(Exception):
    """Raised when a check that gates a construction does not pass."""

    def __init__(self, report: "CheckReport", message: str = ""):
        self.report = report
        super().__init__(message or f"{report.law_name} failed: {report.detail}")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class CheckReport:
    law_name: str
    passed: bool
    samples_checked: int
    worst_residual: Any
    counterexample: Optional[tuple] = None
    detail: str = ""

    def __post_init__(self):
        if self.passed and self.counterexample is not None:
            raise ValueError("a passing report cannot carry a counterexample")

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "lawName": self.law_name,
            "passed": self.passed,
            "samplesChecked": self.samples_checked,
            "worstResidual": to_jsonable(self.worst_residual),
            "counterexample": to_jsonable(self.counterexample),
            "detail": self.detail,
        }


class Tally:
    """Accumulates residuals for one law, keeping the first counterexample."""

    def __init__(self, law_name: str, tolerance: float = 0.0):
        self.law_name = law_name
        self.tolerance = tolerance
        self.count = 0
        self.worst = 0.0
        self.counterexample = None
        self.detail = ""

    def record(self, residual, inputs: tuple, note: str = "") -> bool:
        self.count += 1
        residual = float(residual)
        if math.isnan(residual):
            residual = math.inf
        if residual > self.worst:
            self.worst = residual
        ok = residual <= self.tolerance
        if not ok and self.counterexample is None:
            self.counterexample = inputs
            self.detail = note or f"residual {residual:.6g} exceeds {self.tolerance:.3g}"
        return ok

    def fail(self, inputs: tuple, note: str) -> None:
        self.record(math.inf, inputs, note)

    def report(self) -> CheckReport:
        passed = self.counterexample is None
        return CheckReport(
            law_name=self.law_name,
            passed=passed,
            samples_checked=self.count,
            worst_residual=self.worst,
            counterexample=self.counterexample,
            detail=self.detail,
        )


def merge_reports(law_name: str, reports: Sequence[CheckReport]) -> CheckReport:
    """Combine sub-reports in order; the first failure supplies the counterexample."""
    failing = next((r for r in reports if not r.passed), None)
    worst = max((r.worst_residual for r in reports), default=0.0)
    return CheckReport(
        law_name=law_name,
        passed=failing is None,
        samples_checked=sum(r.samples_checked for r in reports),
        worst_residual=worst,
        counterexample=None if failing is None else failing.counterexample,
        detail="" if failing is None else f"{failing.law_name}: {failing.detail}",
    )


def to_jsonable(value):
    """Convert report payloads (arrays, subsets, infinities) to plain JSON."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if hasattr(value, "to_jsonable"):
        return value.to_jsonable()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Real):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    return repr(value)


# --------------------------------------------------------------------------
# stable spaces


@dataclass(frozen=True)
class StableSpace:
    """A posetal carrier of measurement values with a distinguished zero.

    ``gap`` measures how far apart two values are and ``excess`` how much the
    first exceeds the second (zero when ``a <= b`` holds exactly).  The
    optional bimonoidal data is ``add`` with unit ``zero``, ``mul`` with unit
    ``one`` and a binary ``join`` used for suprema.
    """

    name: str
    zero: Any
    compare_fn: Callable[[Any, Any], PosetCompare]
    gap: Callable[[Any, Any], float]
    excess: Callable[[Any, Any], float]
    contains: Callable[[Any], bool]
    tolerance: float = 0.0
    numeric: bool = True
    sampler: Optional[Callable[[np.random.Generator, int], list]] = None
    elements: Optional[Callable[[], Sequence]] = None
    add: Optional[Callable[[Any, Any], Any]] = None
    mul: Optional[Callable[[Any, Any], Any]] = None
    one: Any = None
    join: Optional[Callable[[Any, Any], Any]] = None

    def compare(self, a, b) -> PosetCompare:
        return compare(self, a, b)

    def leq(self, a, b) -> bool:
        return self.compare(a, b) in (PosetCompare.LESS, PosetCompare.EQUAL)

    def equal(self, a, b) -> bool:
        return self.compare(a, b) is PosetCompare.EQUAL

    def sample(self, rng: np.random.Generator, count: int) -> list:
        if self.elements is not None:
            return list(self.elements())
        if self.sampler is None:
            raise ConfigurationError(f"stable space {self.name!r} has no sampler")
        return list(self.sampler(rng, count))

    @property
    def bimonoidal(self) -> bool:
        return self.add is not None and self.mul is not None


def compare(stable: StableSpace, a, b) -> PosetCompare:
    if not (stable.contains(a) and stable.contains(b)):
        raise ConfigurationError(
            f"values {a!r}, {b!r} are not both in stable space {stable.name!r}"
        )
    return stable.compare_fn(a, b)


def _is_real(v) -> bool:
    return isinstance(v, numbers.Real) and not isinstance(v, bool) and not math.isnan(v)


def _is_nonneg(v) -> bool:
    return _is_real(v) and v >= 0


def _real_gap(a, b) -> float:
    if a == b:
        return 0.0
    return abs(float(a) - float(b))


def _real_excess(a, b) -> float:
    if a <= b:
        return 0.0
    return float(a) - float(b)


def ext_add(a, b):
    return math.inf if (a == math.inf or b == math.inf) else a + b


def ext_mul(a, b):
    # zero absorbs infinity
    if a == 0 or b == 0:
        return 0.0
    return a * b


def real_stable_space(tolerance: float = DEFAULT.real_eq, upper: float = 10.0,
                      name: str = "nonneg-reals") -> StableSpace:
    """[0, inf) with the usual order; equality means |a-b| <= tolerance."""

    def cmp(a, b):
        if a == b or abs(a - b) <= tolerance:
            return PosetCompare.EQUAL
        return PosetCompare.LESS if a < b else PosetCompare.GREATER

    def sampler(rng, count):
        vals = rng.uniform(0.0, upper, size=max(count - 1, 0)).tolist()
        return [0.0] + vals

    return StableSpace(
        name=name, zero=0.0, compare_fn=cmp, gap=_real_gap, excess=_real_excess,
        contains=_is_nonneg, tolerance=tolerance, numeric=True, sampler=sampler,
        add=ext_add, mul=ext_mul, one=1.0, join=max,
    )


def extended_real_stable_space(upper: float = 10.0, tolerance: float = 0.0) -> StableSpace:
    """[0, inf], exact by default; the carrier of Lawvere distances."""

    def cmp(a, b):
        if a == b or abs(a - b) <= tolerance:
            return PosetCompare.EQUAL
        return PosetCompare.LESS if a < b else PosetCompare.GREATER

    def sampler(rng, count):
        vals = rng.uniform(0.0, upper, size=max(count - 2, 0)).tolist()
        return [0.0, math.inf] + vals

    return StableSpace(
        name="extended-nonneg-reals", zero=0.0, compare_fn=cmp, gap=_real_gap,
        excess=_real_excess, contains=_is_nonneg, tolerance=tolerance, numeric=True,
        sampler=sampler, add=ext_add, mul=ext_mul, one=1.0, join=max,
    )


def check_partial_order(stable: StableSpace, values: Sequence) -> CheckReport:
    """Reflexivity, antisymmetry, transitivity and flip symmetry on all triples."""
    tally = Tally("partial_order")
    for a in values:
        tally.record(stable.compare(a, a) is not PosetCompare.EQUAL, (a,), "not reflexive")
    for a, b in product(values, repeat=2):
        ab, ba = stable.compare(a, b), stable.compare(b, a)
        tally.record(ab is not ba.flipped(), (a, b), "compare not flip-symmetric")
    for a, b, c in product(values, repeat=3):
        if stable.leq(a, b) and stable.leq(b, c):
            tally.record(not stable.leq(a, c), (a, b, c), "not transitive")
    return tally.report()


def check_bimonoidal_laws(stable: StableSpace, seed: int = 0, sample_count: int = 20) -> CheckReport:
    """Distributivity of mul over add and absorption of zero under mul."""
    if not stable.bimonoidal:
        raise ConfigurationError(f"{stable.name!r} carries no bimonoidal data")
    values = stable.sample(make_rng(seed), sample_count)
    tally = Tally("bimonoidal_laws", stable.tolerance)
    for a in values:
        tally.record(stable.gap(stable.mul(stable.zero, a), stable.zero), (a,), "zero does not absorb")
        tally.record(stable.gap(stable.mul(stable.one, a), a), (a,), "one is not a unit")
        tally.record(stable.gap(stable.add(stable.zero, a), a), (a,), "zero is not additive unit")
    for a, b, c in product(values, repeat=3):
        lhs = stable.mul(a, stable.add(b, c))
        rhs = stable.add(stable.mul(a, b), stable.mul(a, c))
        tally.record(stable.gap(lhs, rhs), (a, b, c), "mul does not distribute over add")
    return tally.report()


# --------------------------------------------------------------------------
# time monoids


class TimeKind(Enum):
    DISCRETE_EXHAUSTIVE = "discrete-exhaustive"
    DISCRETE_SAMPLED = "discrete-sampled"
    CONTINUOUS_SAMPLED = "continuous-sampled"


def default_gap(a, b) -> float:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if a.shape != b.shape:
            return math.inf
        return float(np.max(np.abs(a - b))) if a.size else 0.0
    if _is_real(a) and _is_real(b):
        return _real_gap(a, b)
    return 0.0 if a == b else 1.0


@dataclass(frozen=True)
class TimeMonoid:
    name: str
    op: Callable[[Any, Any], Any]
    unit: Any
    kind: TimeKind
    sampler: Optional[Callable[[np.random.Generator, int], list]] = None
    elements: Optional[Callable[[], Sequence]] = None
    gap: Callable[[Any, Any], float] = default_gap
    tolerance: float = 0.0
    grid_fn: Optional[Callable[[float], list]] = None

    def sample(self, rng: np.random.Generator, count: int) -> list:
        if self.kind is TimeKind.DISCRETE_EXHAUSTIVE and self.elements is not None:
            return list(self.elements())
        if self.sampler is None:
            raise ConfigurationError(f"time monoid {self.name!r} has no sampler")
        return list(self.sampler(rng, count))

    def grid(self, horizon) -> list:
        if self.grid_fn is None:
            raise ConfigurationError(f"time monoid {self.name!r} has no time grid")
        return list(self.grid_fn(horizon))


def naturals_time(bound: Optional[int] = None, sample_max: int = 50) -> TimeMonoid:
    """(Z>=0, +, 0); exhaustive over {0..bound} when a bound is given."""
    if bound is not None:
        return TimeMonoid(
            name=f"naturals<= {bound}", op=lambda a, b: a + b, unit=0,
            kind=TimeKind.DISCRETE_EXHAUSTIVE,
            elements=lambda: range(bound + 1),
            grid_fn=lambda horizon: range(int(horizon) + 1),
        )

    def sampler(rng, count):
        return [0] + rng.integers(0, sample_max + 1, size=max(count - 1, 0)).tolist()

    return TimeMonoid(
        name="naturals", op=lambda a, b: a + b, unit=0, kind=TimeKind.DISCRETE_SAMPLED,
        sampler=sampler, grid_fn=lambda horizon: range(int(horizon) + 1),
    )


def time_grid(horizon: float, step: float) -> list:
    n = int(round(horizon / step))
    return [i * step for i in range(n + 1)]


def continuous_time(horizon: float = 20.0, step: float = 0.05,
                    tolerance: float = DEFAULT.monoid_float) -> TimeMonoid:
    """(R>=0, +, 0) sampled on the grid {0, h, ..., H} mixed with uniform draws."""
    grid = time_grid(horizon, step)

    def sampler(rng, count):
        out = []
        for i in range(count):
            if i == 0:
                out.append(0.0)
            elif i % 2:
                out.append(float(grid[rng.integers(len(grid))]))
            else:
                out.append(float(rng.uniform(0.0, horizon)))
        return out

    return TimeMonoid(
        name="nonneg-reals", op=lambda a, b: a + b, unit=0.0,
        kind=TimeKind.CONTINUOUS_SAMPLED, sampler=sampler, tolerance=tolerance,
        grid_fn=lambda h_: time_grid(h_, step),
    )


# --------------------------------------------------------------------------
# settings


def default_same_point(x, y) -> bool:
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return np.array_equal(np.asarray(x), np.asarray(y))
    return x == y


@dataclass(frozen=True)
class Setting:
    """The bundle (space, time, stable space, distance) for one instance.

    ``hom_norm`` selects the argument order of the norm: ``d(x*, x)`` for
    enriched instances, ``d(x, x*)`` otherwise.
    """

    name: str
    stable: StableSpace
    time: TimeMonoid
    distance: Callable[[Any, Any], Any]
    sampler: Optional[Callable[[np.random.Generator, int], list]] = None
    elements: Optional[Callable[[], Sequence]] = None
    same_point: Callable[[Any, Any], bool] = default_same_point
    hom_norm: bool = False
    ball_sampler: Optional[Callable[..., list]] = None
    metadata: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return self.elements is not None

    def sample(self, rng: np.random.Generator, count: int) -> list:
        if self.elements is not None:
            return list(self.elements())
        if self.sampler is None:
            raise ConfigurationError(f"setting {self.name!r} has no sampler")
        out = list(self.sampler(rng, count))
        if not out:
            raise ConfigurationError(f"setting {self.name!r} sampler returned nothing")
        return out

    def pairs(self, rng: np.random.Generator, count: int) -> list:
        """All ordered pairs on finite spaces; sampled pairs otherwise."""
        if self.finite:
            pts = self.sample(rng, count)
            return list(product(pts, repeat=2))
        xs = self.sample(rng, count)
        ys = self.sample(rng, count)
        return list(zip(xs, ys))

    def gap(self, x, y) -> float:
        """Numeric discrepancy between two states used for law residuals."""
        if self.stable.numeric and not self.finite:
            return float(self.distance(x, y))
        return 0.0 if self.same_point(x, y) else 1.0


def norm(setting: Setting, x_star, x):
    """The norm of ``x`` relative to ``x_star``: the distance to the base point."""
    if setting.hom_norm:
        return setting.distance(x_star, x)
    return setting.distance(x, x_star)


def check_monoid_laws(time: TimeMonoid, seed: int = 0, sample_count: int = 100) -> CheckReport:
    rng = make_rng(seed)
    if time.kind is TimeKind.DISCRETE_EXHAUSTIVE and time.elements is not None:
        ts = list(time.elements())
        triples = list(product(ts, repeat=3))
    else:
        ts = time.sample(rng, sample_count)
        bs = time.sample(rng, sample_count)
        cs = time.sample(rng, sample_count)
        triples = list(zip(ts, bs, cs))
    if not ts:
        raise ConfigurationError(f"time monoid {time.name!r} yielded no samples")

    tally = Tally("monoid_laws", time.tolerance)
    e = time.unit
    for t in ts:
        tally.record(time.gap(time.op(e, t), t), (e, t), "left unit law violated")
        tally.record(time.gap(time.op(t, e), t), (t, e), "right unit law violated")
    for a, b, c in triples:
        lhs = time.op(time.op(a, b), c)
        rhs = time.op(a, time.op(b, c))
        tally.record(time.gap(lhs, rhs), (a, b, c), "associativity violated")
    return tally.report()


def check_distance_axioms(setting: Setting, seed: int = 0, sample_count: int = 200) -> CheckReport:
    """d(x, y) >= 0 and d(x, y) = 0 exactly on the diagonal."""
    rng = make_rng(seed)
    stable = setting.stable
    pairs = setting.pairs(rng, sample_count)
    if not setting.finite:
        pairs += [(x, x) for x, _ in pairs]
    tally = Tally("distance_axioms", stable.tolerance)
    for x, y in pairs:
        d = setting.distance(x, y)
        if not tally.record(stable.excess(stable.zero, d), (x, y), "negative distance"):
            continue
        if setting.same_point(x, y):
            tally.record(stable.gap(d, stable.zero), (x, y), "d(x, x) is not zero")
        else:
            tally.record(math.inf if stable.equal(d, stable.zero) else 0.0, (x, y),
                         "distinct points at distance zero")
    return tally.report()


def check_norm_properties(setting: Setting, x_star, seed: int = 0, sample_count: int = 200,
                          norm_fn: Optional[Callable[[Any], Any]] = None) -> CheckReport:
    """||x|| >= 0 everywhere and ||x|| = 0 exactly at x*.

    ``norm_fn`` overrides the setting's norm, which is how deliberately
    broken norms are exercised.
    """
    stable = setting.stable
    nrm = norm_fn if norm_fn is not None else (lambda x: norm(setting, x_star, x))
    points = setting.sample(make_rng(seed), sample_count)
    if not any(setting.same_point(p, x_star) for p in points):
        points = [x_star] + points
    tally = Tally("norm_properties", stable.tolerance)
    for x in points:
        v = nrm(x)
        if not tally.record(stable.excess(stable.zero, v), (x,), "negative norm"):
            continue
        if setting.same_point(x, x_star):
            tally.record(stable.gap(v, stable.zero), (x,), "norm at x* is not zero")
        else:
            tally.record(math.inf if stable.equal(v, stable.zero) else 0.0, (x,),
                         "norm vanishes away from x*")
    return tally.report()
