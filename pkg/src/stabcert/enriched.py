"""Enriched instances: finite Lawvere metric spaces and set-based stability.

Distances in a Lawvere metric space live in [0, inf] and need be neither
symmetric nor separating.  The power set of a finite set, ordered by
reverse inclusion and measured by symmetric difference, is a stable space in
its own right; point maps on the base set induce flows on subsets whose
stability is decided here by exhaustive enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

from .classk import ClassKMorphism, Envelope, identity_k
from .core import (
    CheckReport,
    ConfigurationError,
    PosetCompare,
    PreconditionError,
    Setting,
    StableSpace,
    Tally,
    ext_add,
    extended_real_stable_space,
    merge_reports,
    naturals_time,
)
from .flows import Flow, StabilityWitness, check_stable
from .lyapunov import (
    HorizonMode,
    HorizonPolicy,
    check_decrescent,
    check_positive_definite,
    orbit,
    supremum_V,
)

INF = math.inf

# --------------------------------------------------------------------------
# Lawvere metric spaces


@dataclass(frozen=True)
class LawvereSpace:
    objects: tuple
    hom: tuple  # hom[i][j] = distance from objects[i] to objects[j]

    def __post_init__(self):
        n = len(self.objects)
        if len(set(self.objects)) != n:
            raise ValueError("object labels must be distinct")
        if len(self.hom) != n or any(len(row) != n for row in self.hom):
            raise ValueError("hom must be a square matrix over the objects")
        for row in self.hom:
            for v in row:
                if not (v >= 0):
                    raise ValueError(f"distances must lie in [0, inf], got {v!r}")

    @classmethod
    def from_matrix(cls, objects: Sequence, hom) -> "LawvereSpace":
        return cls(tuple(objects), tuple(tuple(float(v) for v in row) for row in hom))

    def index(self, x) -> int:
        return self.objects.index(x)

    def d(self, x, y) -> float:
        return self.hom[self.index(x)][self.index(y)]

    def __len__(self):
        return len(self.objects)


def discrete_space(objects: Sequence) -> LawvereSpace:
    n = len(objects)
    return LawvereSpace.from_matrix(objects, [[0.0 if i == j else INF for j in range(n)]
                                              for i in range(n)])


def shortest_path_closure(nodes: Sequence, edges: Iterable[tuple]) -> LawvereSpace:
    """Min-plus transitive closure of a weighted digraph (missing edges are inf)."""
    nodes = list(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    d = [[0.0 if i == j else INF for j in range(n)] for i in range(n)]
    for src, dst, w in edges:
        w = float(w)
        if w < 0 or math.isnan(w):
            raise ValueError(f"edge weights must lie in [0, inf], got {w!r}")
        i, j = idx[src], idx[dst]
        if i != j and w < d[i][j]:
            d[i][j] = w
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik == INF:
                continue
            di = d[i]
            for j in range(n):
                via = dik + dk[j]
                if via < di[j]:
                    di[j] = via
    return LawvereSpace(tuple(nodes), tuple(tuple(row) for row in d))


def _triangle_excess(dxy, dyz, dxz) -> float:
    rhs = ext_add(dxy, dyz)
    if rhs == INF or dxz <= rhs:
        return 0.0
    return INF if dxz == INF else dxz - rhs


def check_enriched_axioms(space: LawvereSpace) -> CheckReport:
    """0 >= d(x, x) and d(x, y) + d(y, z) >= d(x, z), over every triple."""
    h = space.hom
    n = len(space)
    tally = Tally("enriched_axioms")
    for i in range(n):
        tally.record(h[i][i], (space.objects[i],), "self-distance is not zero")
    for i, j, k in product(range(n), repeat=3):
        tally.record(_triangle_excess(h[i][j], h[j][k], h[i][k]),
                     (space.objects[i], space.objects[j], space.objects[k]),
                     "triangle inequality violated")
    return tally.report()


def check_enriched_distance_props(space: LawvereSpace) -> CheckReport:
    """Positivity, separability up to isomorphism, triangle inequality."""
    h = space.hom
    n = len(space)
    obj = space.objects
    pos = Tally("positivity")
    for i, j in product(range(n), repeat=2):
        pos.record(0.0 if h[i][j] >= 0 else INF, (obj[i], obj[j]), "negative distance")
    sep = Tally("separability_up_to_iso")
    for i, j in product(range(n), repeat=2):
        if i < j and h[i][j] == 0 and h[j][i] == 0:
            same = all(h[i][k] == h[j][k] and h[k][i] == h[k][j] for k in range(n))
            sep.record(0.0 if same else INF, (obj[i], obj[j]),
                       "objects at mutual distance zero are distinguishable")
    tri = Tally("triangle")
    for i, j, k in product(range(n), repeat=3):
        tri.record(_triangle_excess(h[i][j], h[j][k], h[i][k]), (obj[i], obj[j], obj[k]),
                   "triangle inequality violated")
    return merge_reports("enriched_distance_props", [pos.report(), sep.report(), tri.report()])


def _as_map(f) -> Callable[[Any], Any]:
    if isinstance(f, Mapping):
        return f.__getitem__
    return f


def lipschitz_constant(f, dom: LawvereSpace, cod: LawvereSpace) -> float:
    """Least K with K * dom(x, y) >= cod(f x, f y) over all ordered pairs.

    Pairs at infinite domain distance impose nothing; a positive codomain
    distance over a zero domain distance (or an infinite one over a finite)
    makes K infinite.
    """
    fm = _as_map(f)
    K = 0.0
    for x, y in product(dom.objects, repeat=2):
        dx = dom.d(x, y)
        dy = cod.d(fm(x), fm(y))
        if dx == INF or dy == 0:
            continue
        if dx == 0 or dy == INF:
            return INF
        K = max(K, dy / dx)
    return K


def product_space(C: LawvereSpace, D: LawvereSpace) -> LawvereSpace:
    """Objects are pairs; the distance is the max of the component distances."""
    objs = tuple(product(C.objects, D.objects))
    hom = tuple(
        tuple(max(C.d(c1, c2), D.d(d1, d2)) for (c2, d2) in objs)
        for (c1, d1) in objs
    )
    return LawvereSpace(objs, hom)


def projections(C: LawvereSpace, D: LawvereSpace):
    return (lambda pair: pair[0]), (lambda pair: pair[1])


def symmetrize(space: LawvereSpace) -> LawvereSpace:
    h = space.hom
    n = len(space)
    return LawvereSpace(space.objects, tuple(
        tuple(max(h[i][j], h[j][i]) for j in range(n)) for i in range(n)))


def lawvere_setting(space: LawvereSpace, time_bound: Optional[int] = None) -> Setting:
    """Objects as states, [0, inf] as stable space, norm hom(x*, x)."""
    bound = len(space) if time_bound is None else time_bound
    return Setting(
        name=f"lawvere-{len(space)}",
        stable=extended_real_stable_space(),
        time=naturals_time(bound),
        distance=space.d,
        elements=lambda: space.objects,
        hom_norm=True,
    )


def lawvere_flow(space: LawvereSpace, point_map, time_bound: Optional[int] = None) -> Flow:
    fm = _as_map(point_map)
    for x in space.objects:
        if fm(x) not in space.objects:
            raise ConfigurationError(f"point map sends {x!r} outside the space")

    def act(k, x):
        for _ in range(int(k)):
            x = fm(x)
        return x

    return Flow(lawvere_setting(space, time_bound), act, 0.0, "point-map")


# --------------------------------------------------------------------------
# power sets


@dataclass(frozen=True, order=True)
class SubsetValue:
    """A subset of {0, ..., base_size - 1} encoded as a bit mask."""

    bits: int
    base_size: int

    def __post_init__(self):
        if not 0 <= self.base_size <= 63:
            raise ValueError("base size must lie in [0, 63]")
        if not 0 <= self.bits < (1 << self.base_size):
            raise ValueError(f"bits {self.bits:#x} exceed base size {self.base_size}")

    @classmethod
    def of(cls, base_size: int, elements: Iterable[int] = ()) -> "SubsetValue":
        bits = 0
        for e in elements:
            bits |= 1 << e
        return cls(bits, base_size)

    @classmethod
    def empty(cls, base_size: int) -> "SubsetValue":
        return cls(0, base_size)

    @classmethod
    def full(cls, base_size: int) -> "SubsetValue":
        return cls((1 << base_size) - 1, base_size)

    def _check(self, other: "SubsetValue"):
        if not isinstance(other, SubsetValue) or other.base_size != self.base_size:
            raise ConfigurationError("subsets of different base sets")

    def __or__(self, other):
        self._check(other)
        return SubsetValue(self.bits | other.bits, self.base_size)

    def __and__(self, other):
        self._check(other)
        return SubsetValue(self.bits & other.bits, self.base_size)

    def __sub__(self, other):
        self._check(other)
        return SubsetValue(self.bits & ~other.bits, self.base_size)

    def __xor__(self, other):
        self._check(other)
        return SubsetValue(self.bits ^ other.bits, self.base_size)

    def __contains__(self, e: int) -> bool:
        return bool(self.bits >> e & 1)

    def __iter__(self):
        return (i for i in range(self.base_size) if self.bits >> i & 1)

    def __len__(self):
        return bin(self.bits).count("1")

    def issubset(self, other) -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def to_jsonable(self):
        return list(self)

    def __repr__(self):
        return "{" + ",".join(map(str, self)) + "}"


def all_subsets(base_size: int) -> list:
    return [SubsetValue(b, base_size) for b in range(1 << base_size)]


def powerset_stable_space(base_size: int) -> StableSpace:
    """P(E) ordered by inclusion (larger set = greater), zero the empty set.

    Addition is union with unit the empty set, multiplication intersection
    with unit E, and the join is union.
    """

    def cmp(a, b):
        if a == b:
            return PosetCompare.EQUAL
        if a.bits & ~b.bits == 0:
            return PosetCompare.LESS
        if b.bits & ~a.bits == 0:
            return PosetCompare.GREATER
        return PosetCompare.INCOMPARABLE

    return StableSpace(
        name=f"powerset-{base_size}",
        zero=SubsetValue.empty(base_size),
        compare_fn=cmp,
        gap=lambda a, b: len(a ^ b),
        excess=lambda a, b: len(a - b),
        contains=lambda v: isinstance(v, SubsetValue) and v.base_size == base_size,
        tolerance=0.0,
        numeric=False,
        elements=lambda: all_subsets(base_size),
        add=lambda a, b: a | b,
        mul=lambda a, b: a & b,
        one=SubsetValue.full(base_size),
        join=lambda a, b: a | b,
    )


def powerset_distance(U: SubsetValue, V: SubsetValue) -> SubsetValue:
    """(U - V) | (V - U)."""
    return (U - V) | (V - U)


@dataclass(frozen=True)
class SetSystem:
    """A point map on a finite base set, given as indices: ``point_map[i] = F(i)``."""

    base: tuple
    point_map: tuple

    def __post_init__(self):
        n = len(self.base)
        if len(self.point_map) != n or any(not 0 <= j < n for j in self.point_map):
            raise ValueError("point map must be total on the base set")
        if n > 63:
            raise ValueError("base sets are limited to 63 elements")

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "SetSystem":
        base = tuple(mapping)
        idx = {v: i for i, v in enumerate(base)}
        try:
            return cls(base, tuple(idx[mapping[v]] for v in base))
        except KeyError as exc:
            raise ValueError(f"point map leaves the base set at {exc.args[0]!r}") from None

    @property
    def size(self) -> int:
        return len(self.base)

    def index(self, x) -> int:
        if isinstance(x, int) and not isinstance(x, bool) and 0 <= x < self.size \
                and x not in self.base:
            return x
        return self.base.index(x)

    def subset(self, labels: Iterable) -> SubsetValue:
        return SubsetValue.of(self.size, (self.index(v) for v in labels))

    def labels(self, U: SubsetValue) -> list:
        return [self.base[i] for i in U]

    def image(self, U: SubsetValue) -> SubsetValue:
        bits = 0
        for i in U:
            bits |= 1 << self.point_map[i]
        return SubsetValue(bits, self.size)

    def fixed_points(self) -> list:
        return [i for i, j in enumerate(self.point_map) if i == j]


def powerset_flow(sys: SetSystem, k: int, U: SubsetValue) -> SubsetValue:
    """Forward image of U under the point map, k times."""
    if k < 0:
        raise ValueError("iteration count must be nonnegative")
    for _ in range(int(k)):
        U = sys.image(U)
    return U


def powerset_norm(U: SubsetValue, x_star: int) -> SubsetValue:
    """U - {x*} when x* is in U, {x*} otherwise."""
    return powerset_distance(U, SubsetValue.of(U.base_size, [x_star]))


def powerset_setting(sys: SetSystem) -> Setting:
    n = sys.size
    return Setting(
        name=f"powerset-{n}",
        stable=powerset_stable_space(n),
        # subset orbits are eventually periodic within 2^|E| steps
        time=naturals_time(1 << n),
        distance=powerset_distance,
        elements=lambda: all_subsets(n),
    )


def powerset_setflow(sys: SetSystem) -> Flow:
    return Flow(powerset_setting(sys), lambda k, U: powerset_flow(sys, k, U), 0.0, "set-flow")


def classk_from_permutation(sigma: Sequence[int]) -> ClassKMorphism:
    """alpha(U) = sigma(U) elementwise, with inverse sigma^-1."""
    sigma = tuple(sigma)
    n = len(sigma)
    if sorted(sigma) != list(range(n)):
        raise ValueError(f"{sigma} is not a permutation of range({n})")
    inv = [0] * n
    for i, j in enumerate(sigma):
        inv[j] = i

    def apply(perm):
        def f(U: SubsetValue) -> SubsetValue:
            bits = 0
            for i in U:
                bits |= 1 << perm[i]
            return SubsetValue(bits, U.base_size)
        return f

    return ClassKMorphism(apply(sigma), apply(tuple(inv)), f"perm{sigma}")


def permutation_family(n: int) -> list:
    """Every order isomorphism of P(E) fixing the empty set, |E| = n."""
    return [classk_from_permutation(p) for p in permutations(range(n))]


def _require_fixed(sys: SetSystem, x_star) -> int:
    i = sys.index(x_star)
    if sys.point_map[i] != i:
        raise PreconditionError(f"{sys.base[i]!r} is not a fixed point of the point map")
    return i


def _orbit_pairs(flow: Flow) -> list:
    """(k, U) for every subset U and every step k along its orbit."""
    pairs = []
    for U in flow.setting.elements():
        for k, _ in enumerate(orbit(flow, U, 1)):
            pairs.append((k, U))
    return pairs


def check_set_stability(sys: SetSystem, x_star,
                        alpha_family: Optional[Sequence[ClassKMorphism]] = None) -> StabilityWitness:
    """Search the family for alpha with ||phi_k(U)|| inside alpha(||U||) for all U, k.

    Exhaustive over every subset and every step of its (eventually periodic)
    orbit.  Returns the first working alpha, or a witness with ``alpha=None``
    and a failed report.
    """
    star = SubsetValue.of(sys.size, [_require_fixed(sys, x_star)])
    flow = powerset_setflow(sys)
    family = permutation_family(sys.size) if alpha_family is None else list(alpha_family)
    pairs = _orbit_pairs(flow)
    first_failure = None
    for alpha in family:
        witness = check_stable(flow, star, alpha, pairs=pairs)
        if witness.passed:
            return StabilityWitness(alpha, CheckReport(
                "set_stability", True, witness.report.samples_checked, 0,
                detail=f"certified by {alpha.label}"))
        if first_failure is None:
            first_failure = witness.report
    return StabilityWitness(None, CheckReport(
        "set_stability", False,
        len(family) * len(pairs),
        first_failure.worst_residual if first_failure is not None else 0,
        first_failure.counterexample if first_failure is not None else ("empty family",),
        f"no class K morphism among {len(family)} candidates certifies stability"))


def exhaustive_converse_check(sys: SetSystem, x_star,
                              alpha: Optional[ClassKMorphism] = None) -> CheckReport:
    """Build V(U) = union over k of ||phi_k(U)|| and check it is a Lyapunov map.

    V is positive definite with envelope (id, alpha) and decrescent, both
    checked over every subset and every orbit step.  Without ``alpha`` the
    permutation family is searched for an upper envelope.
    """
    star = SubsetValue.of(sys.size, [_require_fixed(sys, x_star)])
    flow = powerset_setflow(sys)
    setting = flow.setting
    V = supremum_V(flow, star, HorizonPolicy(HorizonMode.CYCLE_DETECT))
    pairs = _orbit_pairs(flow)
    dec = check_decrescent(V, flow, pairs=pairs)
    family = [alpha] if alpha is not None else permutation_family(sys.size)
    first_failure = None
    for a in family:
        pd = check_positive_definite(V, star, Envelope(identity_k(), a), setting)
        if pd.passed:
            report = merge_reports("converse_exhaustive", [pd, dec])
            if report.passed:
                return CheckReport(report.law_name, True, report.samples_checked,
                                   report.worst_residual, None, f"upper envelope {a.label}")
            return report
        if first_failure is None:
            first_failure = pd
    if first_failure is None:
        raise ConfigurationError("empty class K family")
    return merge_reports("converse_exhaustive", [first_failure, dec])
