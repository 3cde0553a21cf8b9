import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabcert.classk import check_class_k, identity_k
from stabcert.core import ConfigurationError, PreconditionError, check_bimonoidal_laws
from stabcert.enriched import (
    LawvereSpace,
    SetSystem,
    SubsetValue,
    all_subsets,
    check_enriched_axioms,
    check_enriched_distance_props,
    check_set_stability,
    classk_from_permutation,
    discrete_space,
    exhaustive_converse_check,
    lawvere_flow,
    lipschitz_constant,
    permutation_family,
    powerset_distance,
    powerset_flow,
    powerset_norm,
    powerset_stable_space,
    product_space,
    projections,
    shortest_path_closure,
    symmetrize,
)
from stabcert.flows import check_flow_laws, check_weakly_contracting

INF = math.inf


def brute_closure(nodes, edges):
    # oracle: Bellman-Ford style relaxation to a fixed point
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    d = [[0.0 if i == j else INF for j in range(n)] for i in range(n)]
    for s, t, w in edges:
        d[idx[s]][idx[t]] = min(d[idx[s]][idx[t]], float(w))
    changed = True
    while changed:
        changed = False
        for i, j, k in itertools.product(range(n), repeat=3):
            if d[i][k] + d[k][j] < d[i][j]:
                d[i][j] = d[i][k] + d[k][j]
                changed = True
    return d


def test_closure_examples():
    s = shortest_path_closure(["a", "b"], [("a", "b", 3)])
    assert s.d("a", "b") == 3 and s.d("b", "a") == INF
    s = shortest_path_closure(["a", "b", "c"], [("a", "b", 1), ("b", "c", 1), ("a", "c", 5)])
    assert s.d("a", "c") == 2
    assert all(s.d(x, x) == 0 for x in "abc")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 9)),
                max_size=12))
def test_closure_matches_oracle(raw):
    nodes = list("abcde")
    edges = [(nodes[s], nodes[t], w) for s, t, w in raw]
    space = shortest_path_closure(nodes, edges)
    oracle = brute_closure(nodes, edges)
    for i, j in itertools.product(range(5), repeat=2):
        assert space.d(nodes[i], nodes[j]) == oracle[i][j]
    assert check_enriched_axioms(space).passed


def test_closure_against_scipy():
    import numpy as np
    from scipy.sparse.csgraph import floyd_warshall
    rng = np.random.default_rng(3)
    n = 7
    w = rng.integers(1, 10, size=(n, n)).astype(float)
    w[rng.uniform(size=(n, n)) < 0.5] = 0.0   # csgraph reads 0 as "no edge"
    nodes = list(range(n))
    edges = [(i, j, w[i, j]) for i in range(n) for j in range(n) if w[i, j] > 0 and i != j]
    space = shortest_path_closure(nodes, edges)
    oracle = floyd_warshall(w, directed=True)
    for i, j in itertools.product(range(n), repeat=2):
        assert space.d(i, j) == oracle[i, j]


def test_axiom_violation_and_discrete():
    bad = LawvereSpace.from_matrix(["a", "b", "c"], [[0, 1, 5], [INF, 0, 1], [INF, INF, 0]])
    rep = check_enriched_axioms(bad)
    assert not rep.passed and rep.counterexample == ("a", "b", "c")
    assert check_enriched_axioms(discrete_space("xyz")).passed
    assert check_enriched_distance_props(discrete_space("xyz")).passed


def test_distance_props():
    s = shortest_path_closure(list("abc"), [("a", "b", 1), ("b", "a", 1), ("b", "c", 2)])
    assert check_enriched_distance_props(s).passed
    twins = LawvereSpace.from_matrix(list("abc"), [[0, 0, 1], [0, 0, 3], [1, 3, 0]])
    rep = check_enriched_distance_props(twins)
    assert not rep.passed


def test_lipschitz_examples():
    s = shortest_path_closure(list("abc"), [("a", "b", 1), ("b", "c", 1)])
    assert lipschitz_constant(lambda x: x, s, s) == 1
    assert lipschitz_constant(lambda x: x, discrete_space("a"), discrete_space("a")) == 0
    assert lipschitz_constant(lambda x: "a", s, s) == 0
    doubled = LawvereSpace(s.objects, [[2 * v for v in row] for row in s.hom])
    assert lipschitz_constant(lambda x: x, s, doubled) == 2
    glued = LawvereSpace.from_matrix(list("ab"), [[0, 0], [0, 0]])
    apart = LawvereSpace.from_matrix(list("ab"), [[0, 1], [1, 0]])
    assert lipschitz_constant(lambda x: x, glued, apart) == INF


def test_lipschitz_composition_bound():
    s = shortest_path_closure(list("abcd"), [(x, y, 1) for x, y in zip("abc", "bcd")]
                              + [(y, x, 1) for x, y in zip("abc", "bcd")])
    maps = [dict(zip("abcd", img)) for img in itertools.product("abcd", repeat=4)][:60]
    for f in maps:
        for g in maps[:15]:
            kf = lipschitz_constant(f.get, s, s)
            kg = lipschitz_constant(g.get, s, s)
            kgf = lipschitz_constant(lambda x: g[f[x]], s, s)
            assert kgf <= kg * kf or (kf == 0 and kgf == 0)


def test_product_examples():
    one = discrete_space(["*"])
    D = shortest_path_closure(list("ab"), [("a", "b", 2), ("b", "a", 2)])
    P = product_space(one, D)
    assert P.d(("*", "a"), ("*", "b")) == 2
    C = LawvereSpace.from_matrix([0, 1], [[0, 1], [1, 0]])
    E = LawvereSpace.from_matrix([0, 1], [[0, 3], [3, 0]])
    CE = product_space(C, E)
    assert CE.d((0, 0), (1, 1)) == 3
    p, q = projections(C, E)
    assert lipschitz_constant(p, CE, C) <= 1 and lipschitz_constant(q, CE, E) <= 1


def test_diagonal_pairing_constant():
    s = shortest_path_closure(list("abc"), [("a", "b", 1), ("b", "a", 1), ("b", "c", 1),
                                            ("c", "b", 1)])
    f = {"a": "a", "b": "a", "c": "b"}.get
    g = {"a": "a", "b": "c", "c": "c"}.get
    pair = lambda x: (f(x), g(x))  # noqa: E731
    kf, kg = lipschitz_constant(f, s, s), lipschitz_constant(g, s, s)
    assert lipschitz_constant(pair, s, product_space(s, s)) == max(kf, kg)


def test_symmetrize_examples():
    sym = shortest_path_closure(list("ab"), [("a", "b", 1), ("b", "a", 1)])
    assert symmetrize(sym).hom == sym.hom
    one_way = shortest_path_closure(list("ab"), [("a", "b", 3)])
    assert symmetrize(one_way).d("a", "b") == INF == symmetrize(one_way).d("b", "a")
    uneven = shortest_path_closure(list("ab"), [("a", "b", 1), ("b", "a", 2)])
    s2 = symmetrize(uneven)
    assert s2.d("a", "b") == 2 == s2.d("b", "a")
    assert check_enriched_axioms(s2).passed
    assert symmetrize(s2).hom == s2.hom


def test_powerset_distance_and_norm():
    a, b, c = (SubsetValue.of(3, [i]) for i in range(3))
    assert powerset_distance(a, a) == SubsetValue.empty(3)
    assert powerset_distance(a | b, b | c) == a | c
    assert powerset_distance(a | c, SubsetValue.empty(3)) == a | c
    assert powerset_norm(SubsetValue.of(2, [0, 1]), 0) == SubsetValue.of(2, [1])
    assert powerset_norm(SubsetValue.of(2, [0]), 0) == SubsetValue.empty(2)
    assert powerset_norm(SubsetValue.empty(2), 0) == SubsetValue.of(2, [0])
    with pytest.raises(ConfigurationError):
        powerset_distance(SubsetValue.of(2, [0]), SubsetValue.of(3, [0]))


def test_subset_value_invariants():
    with pytest.raises(ValueError):
        SubsetValue(8, 3)
    U = SubsetValue.of(4, [0, 3])
    assert list(U) == [0, 3] and len(U) == 2 and 3 in U
    assert U.issubset(SubsetValue.full(4))
    assert len(all_subsets(4)) == 16


def test_powerset_flow_examples():
    const = SetSystem.from_mapping({"a": "a", "b": "a", "c": "a"})
    assert powerset_flow(const, 1, SubsetValue.full(3)) == const.subset(["a"])
    U = const.subset(["b", "c"])
    assert powerset_flow(const, 0, U) == U
    cyc = SetSystem.from_mapping({"a": "b", "b": "c", "c": "a"})
    for U in all_subsets(3):
        assert powerset_flow(cyc, 3, U) == U


def test_permutation_classk():
    ident = classk_from_permutation((0, 1, 2))
    for U in all_subsets(3):
        assert ident(U) == U
    swap = classk_from_permutation((1, 0, 2))
    assert swap(SubsetValue.of(3, [0, 2])) == SubsetValue.of(3, [1, 2])
    stable = powerset_stable_space(3)
    for alpha in permutation_family(3):
        for U in all_subsets(3):
            assert alpha.inverse(alpha(U)) == U
        assert check_class_k(alpha, stable).passed
    assert len(permutation_family(3)) == 6


def test_set_stability_examples():
    const = SetSystem.from_mapping({"a": "a", "b": "a"})
    w = check_set_stability(const, "a", [identity_k()])
    assert w.passed
    with pytest.raises(PreconditionError):
        check_set_stability(SetSystem.from_mapping({"a": "b", "b": "c", "c": "a"}), "a")
    with pytest.raises(PreconditionError):
        check_set_stability(SetSystem.from_mapping({"a": "b", "b": "a"}), "a")
    ident = SetSystem.from_mapping({"a": "a", "b": "b"})
    assert check_set_stability(ident, "a", [identity_k()]).passed


def test_converse_examples():
    const = SetSystem.from_mapping({"a": "a", "b": "a"})
    assert exhaustive_converse_check(const, "a").passed
    ident = SetSystem.from_mapping({"a": "a", "b": "b", "c": "c"})
    assert exhaustive_converse_check(ident, "a").passed


def brute_set_stable(mapping, x):
    # oracle: python sets, identity is the only permutation that can work
    # (k = 0 forces ||U|| inside sigma(||U||)), but all permutations are tried
    base = list(mapping)
    subsets = [set(c) for r in range(len(base) + 1) for c in itertools.combinations(base, r)]

    def nrm(U):
        return (U - {x}) | ({x} - U)

    for perm in itertools.permutations(base):
        sigma = dict(zip(base, perm))
        ok = True
        for U in subsets:
            cur = set(U)
            for _ in range(2 ** len(base) + 1):
                if not nrm(cur) <= {sigma[e] for e in nrm(U)}:
                    ok = False
                cur = {mapping[e] for e in cur}
        if ok:
            return True
    return False


def test_chain_example_is_not_stable():
    chain = {"a": "a", "b": "a", "c": "b"}
    sys = SetSystem.from_mapping(chain)
    assert brute_set_stable(chain, "a") is False
    w = check_set_stability(sys, "a")
    assert not w.passed and w.alpha is None
    assert not exhaustive_converse_check(sys, "a").passed


@pytest.mark.parametrize("n", [2, 3])
def test_set_stability_matches_oracle(n):
    base = "abc"[:n]
    for img in itertools.product(base, repeat=n):
        mapping = dict(zip(base, img))
        sys = SetSystem.from_mapping(mapping)
        for x in base:
            if mapping[x] != x:
                continue
            assert check_set_stability(sys, x).passed == brute_set_stable(mapping, x)


def test_powerset_setting_laws():
    from stabcert.enriched import powerset_setflow
    sys = SetSystem.from_mapping({"a": "a", "b": "c", "c": "b", "d": "a"})
    assert check_flow_laws(powerset_setflow(sys)).passed
    assert check_bimonoidal_laws(powerset_stable_space(4)).passed


def test_lawvere_flow_contracts():
    nodes = list("abcde")
    edges = [(x, y, 1) for x, y in zip(nodes, nodes[1:])]
    space = shortest_path_closure(nodes, edges + [(y, x, w) for x, y, w in edges])
    flow = lawvere_flow(space, {"a": "a", "b": "a", "c": "b", "d": "c", "e": "d"})
    assert check_flow_laws(flow).passed
    assert check_weakly_contracting(flow).passed
