"""Class K morphisms: order isomorphisms of the stable space fixing zero."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Any, Callable

from .core import CheckReport, PosetCompare, StableSpace, Tally, make_rng


@dataclass(frozen=True)
class ClassKMorphism:
    forward: Callable[[Any], Any]
    inverse: Callable[[Any], Any]
    label: str = "alpha"

    def __call__(self, r):
        return self.forward(r)

    def inverted(self) -> "ClassKMorphism":
        return ClassKMorphism(self.inverse, self.forward, f"({self.label})^-1")

    def after(self, other: "ClassKMorphism") -> "ClassKMorphism":
        """The composite ``self o other``."""
        f, g = self, other
        return ClassKMorphism(
            lambda r: f.forward(g.forward(r)),
            lambda r: g.inverse(f.inverse(r)),
            f"{f.label} o {g.label}",
        )


def identity_k() -> ClassKMorphism:
    return ClassKMorphism(lambda r: r, lambda r: r, "id")


def power_k(coeff: float = 1.0, power: float = 1.0) -> ClassKMorphism:
    """r -> coeff * r**power on [0, inf], with its explicit inverse."""
    if coeff <= 0 or power <= 0:
        raise ValueError("class K power maps need coeff > 0 and power > 0")

    def fwd(r):
        return coeff * r ** power if r != math.inf else math.inf

    def inv(r):
        return (r / coeff) ** (1.0 / power) if r != math.inf else math.inf

    label = f"{coeff:g}*r^{power:g}" if power != 1 else f"{coeff:g}*r"
    return ClassKMorphism(fwd, inv, label)


def bisection_inverse(f: Callable[[float], float], r: float, tol: float = 1e-12,
                      max_iter: int = 400) -> float:
    """Solve f(s) = r for s >= 0 with f increasing and f(0) = 0."""
    if r <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while f(hi) < r:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("no bracket for bisection inverse")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) < r:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def numeric_k(f: Callable[[float], float], label: str) -> ClassKMorphism:
    """Class K morphism whose inverse is found by bisection."""
    return ClassKMorphism(f, lambda r: bisection_inverse(f, r), label)


@dataclass(frozen=True)
class Envelope:
    lower: ClassKMorphism
    upper: ClassKMorphism


def _strictly_below(stable: StableSpace, a, b) -> bool:
    # raw order without tolerance, so monotonicity is tested on the carrier itself
    if stable.numeric:
        return a < b
    return stable.compare(a, b) is PosetCompare.LESS


def check_class_k(alpha: ClassKMorphism, stable: StableSpace, seed: int = 0,
                  sample_count: int = 200, law_name: str = "class_k") -> CheckReport:
    """Zero preservation, strict monotonicity both ways, and round trips."""
    values = stable.sample(make_rng(seed), sample_count)
    tol = stable.tolerance
    tally = Tally(law_name, tol)
    tally.record(stable.gap(alpha.forward(stable.zero), stable.zero), (stable.zero,),
                 "forward does not fix zero")
    tally.record(stable.gap(alpha.inverse(stable.zero), stable.zero), (stable.zero,),
                 "inverse does not fix zero")
    for r in values:
        f = alpha.forward(r)
        tally.record(stable.gap(alpha.inverse(f), r), (r,), "inverse(forward(r)) != r")
        tally.record(stable.gap(alpha.forward(alpha.inverse(r)), r), (r,),
                     "forward(inverse(r)) != r")
    if stable.numeric:
        # transitivity makes consecutive pairs of the sorted sample sufficient
        ordered = sorted(set(values))
        pairs = list(zip(ordered, ordered[1:]))
    else:
        pairs = list(product(values, repeat=2))
    for a, b in pairs:
        if _strictly_below(stable, a, b):
            for m, name in ((alpha.forward, "forward"), (alpha.inverse, "inverse")):
                ok = _strictly_below(stable, m(a), m(b))
                tally.record(0.0 if ok else math.inf, (a, b), f"{name} is not order preserving")
    return tally.report()


def check_classk_inverse_lemma(alpha: ClassKMorphism, stable: StableSpace, seed: int = 0,
                               sample_count: int = 200) -> CheckReport:
    """The inverse of a class K morphism is again class K."""
    return check_class_k(alpha.inverted(), stable, seed, sample_count,
                         law_name="class_k_inverse")


def check_envelope(envelope: Envelope, stable: StableSpace, seed: int = 0,
                   sample_count: int = 200) -> CheckReport:
    """lower(r) <= upper(r) on sampled r."""
    tally = Tally("envelope_order", stable.tolerance)
    for r in stable.sample(make_rng(seed), sample_count):
        tally.record(stable.excess(envelope.lower(r), envelope.upper(r)), (r,),
                     "lower envelope exceeds upper")
    return tally.report()
