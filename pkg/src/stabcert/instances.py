"""Registry of named instances and the checks a scenario can run against them."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np

from . import classical, enriched, kalman
from .classk import ClassKMorphism, Envelope, check_class_k, identity_k, power_k
from .config import DEFAULT
from .core import (
    CheckFailed,
    CheckReport,
    ConfigurationError,
    check_bimonoidal_laws,
    check_distance_axioms,
    check_monoid_laws,
    check_norm_properties,
)
from .flows import (
    Flow,
    check_equilibrium,
    check_flow_laws,
    check_stable,
    check_weakly_contracting,
    epsilon_delta_check,
    stability_from_contraction,
)
from .lyapunov import (
    CandidateV,
    HorizonMode,
    HorizonPolicy,
    check_decrescent,
    check_positive_definite,
    construct_converse_V,
    converse_envelope,
    verify_lyapunov_theorem,
)


@dataclass
class Bundle:
    """Everything a scenario needs about one constructed instance."""

    instance: str
    flow: Flow
    x_star: Any
    V: Optional[CandidateV] = None
    envelope: Optional[Envelope] = None
    alpha: ClassKMorphism = field(default_factory=identity_k)
    policy: HorizonPolicy = field(default_factory=HorizonPolicy)
    extras: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Instance:
    name: str
    description: str
    parameters: Dict[str, dict]
    build: Callable[[dict, Path], Bundle]

    def schema(self) -> dict:
        return {"name": self.name, "description": self.description,
                "parameters": self.parameters}


REGISTRY: Dict[str, Instance] = {}


def register(name: str, description: str, parameters: Dict[str, dict]):
    def deco(fn):
        REGISTRY[name] = Instance(name, description, parameters, fn)
        return fn
    return deco


def _param(params: dict, key: str, default, kind=float):
    if key not in params:
        return default
    try:
        return kind(params[key])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"parameter {key!r}: {exc}") from None


_ODE_PARAMS = {
    "stepSize": {"type": "number", "default": 0.05},
    "horizon": {"type": "number", "default": 20.0},
    "radius": {"type": "number", "default": 2.0},
    "tolerance": {"type": "number", "default": DEFAULT.ode},
}


def _ode_bundle(name, system_fn, params, V, envelope, tail_factor=0.5):
    h = _param(params, "stepSize", 0.05)
    horizon = _param(params, "horizon", 20.0)
    ode = system_fn(h)
    flow = classical.ode_flow(ode, horizon, _param(params, "radius", 2.0),
                              _param(params, "tolerance", DEFAULT.ode))
    return Bundle(name, flow, np.zeros(ode.dimension), V, envelope,
                  policy=HorizonPolicy(HorizonMode.FINITE_HORIZON, horizon,
                                       _param(params, "tailFactor", tail_factor)),
                  extras={"ode": ode})


def _square_norm_V():
    return CandidateV(lambda x: float(np.dot(x, x)), "|x|^2")


def _square_envelope():
    return Envelope(power_k(1.0, 2.0), power_k(1.0, 2.0))


@register("linear-decay", "dx/dt = -x on R, x* = 0, V = x^2", _ODE_PARAMS)
def _linear_decay(params, base):
    return _ode_bundle("linear-decay", classical.linear_decay, params,
                       _square_norm_V(), _square_envelope())


@register("rotation", "planar rotation dx/dt = -y, dy/dt = x, x* = 0, V = |x|^2",
          {**_ODE_PARAMS, "tailFactor": {"type": "number", "default": 1.0}})
def _rotation(params, base):
    return _ode_bundle("rotation", classical.rotation, params,
                       _square_norm_V(), _square_envelope(), tail_factor=1.0)


@register("linear-growth", "dx/dt = +x on R, x* = 0 (unstable), V = x^2", _ODE_PARAMS)
def _linear_growth(params, base):
    return _ode_bundle("linear-growth", classical.linear_growth, params,
                       _square_norm_V(), _square_envelope())


_MAP_PARAMS = {
    "radius": {"type": "number", "default": 2.0},
    "sampleMax": {"type": "integer", "default": 50},
}


def _map_bundle(name, sys, x_star, params):
    flow = classical.discrete_system_flow(sys, _param(params, "radius", 2.0),
                                          _param(params, "sampleMax", 50, int))
    x_star = np.array([x_star], dtype=float)
    V = CandidateV(lambda x: float(np.linalg.norm(x - x_star)), "|x - x*|")
    return Bundle(name, flow, x_star, V, Envelope(identity_k(), identity_k()),
                  policy=HorizonPolicy(HorizonMode.FINITE_HORIZON,
                                       _param(params, "horizon", 50, int), 0.5),
                  extras={"system": sys})


@register("halving-map", "x_{k+1} = x_k / 2, x* = 0, V = |x|", _MAP_PARAMS)
def _halving(params, base):
    return _map_bundle("halving-map", classical.halving_map(), 0.0, params)


@register("affine-map", "x_{k+1} = x_k / 2 + 1, x* = 2, V = |x - 2|", _MAP_PARAMS)
def _affine(params, base):
    return _map_bundle("affine-map", classical.affine_map(), 2.0, params)


def _matrix(params, key, base: Path):
    v = params[key]
    if isinstance(v, str):
        raise ConfigurationError(f"{key} must be an inline nested array")
    return np.array(v, dtype=float).reshape(len(v), -1) if np.ndim(v) == 2 else \
        np.array(v, dtype=float).reshape(1, 1)


def _kalman_bundle(name, model, params):
    P_star, fixed = kalman.find_riccati_fixed_point(model)
    Mk = kalman.build_Mk(model)
    flow = kalman.riccati_flow([Mk], _param(params, "maxWord", 8, int))
    flow.tolerance = _param(params, "tolerance", DEFAULT.kalman)
    V = CandidateV(lambda P: kalman.spd_distance(P, P_star), "d(., P*)")
    return Bundle(name, flow, P_star, V, Envelope(identity_k(), identity_k()),
                  extras={"model": model, "Mk": Mk, "fixed_point": fixed})


@register("kalman-scalar", "scalar Riccati flow with A = F = C = 1 by default; V = d(P, P*)",
          {"a": {"type": "number", "default": 1.0}, "f": {"type": "number", "default": 1.0},
           "c": {"type": "number", "default": 1.0}, "maxWord": {"type": "integer", "default": 8},
           "tolerance": {"type": "number", "default": DEFAULT.kalman}})
def _kalman_scalar(params, base):
    model = kalman.KalmanModel.scalar(_param(params, "a", 1.0), _param(params, "f", 1.0),
                                      _param(params, "c", 1.0))
    return _kalman_bundle("kalman-scalar", model, params)


@register("kalman", "Riccati flow of a model given inline (A, F, C) or by modelFile",
          {"A": {"type": "matrix"}, "F": {"type": "matrix"}, "C": {"type": "matrix"},
           "modelFile": {"type": "path"}, "maxWord": {"type": "integer", "default": 8},
           "tolerance": {"type": "number", "default": DEFAULT.kalman}})
def _kalman_general(params, base):
    if "modelFile" in params:
        path = base / params["modelFile"]
        if not path.exists():
            raise ConfigurationError(f"model file {path} does not exist")
        model = kalman.load_model(path)
    else:
        try:
            model = kalman.KalmanModel(*(np.atleast_2d(np.array(params[k], dtype=float))
                                         for k in ("A", "F", "C")))
        except KeyError as exc:
            raise ConfigurationError(f"missing matrix {exc.args[0]}") from None
    return _kalman_bundle("kalman", model, params)


def parse_set_system(text: str) -> enriched.SetSystem:
    """Lines ``element -> element``; every element must have exactly one image."""
    mapping = {}
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "->" not in ln:
            raise ConfigurationError(f"expected 'element -> element', got {ln!r}")
        src, dst = (s.strip() for s in ln.split("->", 1))
        if src in mapping:
            raise ConfigurationError(f"element {src!r} mapped twice")
        mapping[src] = dst
    try:
        return enriched.SetSystem.from_mapping(mapping)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def parse_graph(text: str):
    """Edge list lines ``src dst weight``; ``inf`` is an allowed weight."""
    nodes, edges = [], []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        parts = ln.split()
        if len(parts) != 3:
            raise ConfigurationError(f"expected 'src dst weight', got {ln!r}")
        src, dst, w = parts
        try:
            w = float(w)
        except ValueError:
            raise ConfigurationError(f"bad weight {w!r}") from None
        for v in (src, dst):
            if v not in nodes:
                nodes.append(v)
        edges.append((src, dst, w))
    return nodes, edges


@register("powerset", "set-valued flow induced by a point map on a finite set",
          {"map": {"type": "object", "default": {"a": "a", "b": "a"}},
           "systemFile": {"type": "path"}, "xStar": {"type": "string", "default": "a"}})
def _powerset(params, base):
    if "systemFile" in params:
        path = base / params["systemFile"]
        if not path.exists():
            raise ConfigurationError(f"set-system file {path} does not exist")
        sys = parse_set_system(path.read_text())
    else:
        try:
            sys = enriched.SetSystem.from_mapping(params.get("map", {"a": "a", "b": "a"}))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
    x = params.get("xStar", sys.base[0])
    if x not in sys.base:
        raise ConfigurationError(f"xStar {x!r} is not in the base set")
    flow = enriched.powerset_setflow(sys)
    star = sys.subset([x])
    return Bundle("powerset", flow, star, None, None,
                  policy=HorizonPolicy(HorizonMode.CYCLE_DETECT),
                  extras={"system": sys, "x": x})


_PATH_EDGES = [["a", "b", 1], ["b", "c", 1], ["c", "d", 1], ["d", "e", 1]]
_PATH_MAP = {"a": "a", "b": "a", "c": "b", "d": "c", "e": "d"}


@register("lawvere-graph", "shortest-path Lawvere space with a point-map flow",
          {"edges": {"type": "array", "default": _PATH_EDGES}, "graphFile": {"type": "path"},
           "symmetric": {"type": "boolean", "default": True},
           "pointMap": {"type": "object", "default": _PATH_MAP},
           "xStar": {"type": "string", "default": "a"}})
def _lawvere(params, base):
    if "graphFile" in params:
        path = base / params["graphFile"]
        if not path.exists():
            raise ConfigurationError(f"graph file {path} does not exist")
        nodes, edges = parse_graph(path.read_text())
    else:
        edges = [tuple(e) for e in params.get("edges", _PATH_EDGES)]
        nodes = []
        for s, d, _ in edges:
            for v in (s, d):
                if v not in nodes:
                    nodes.append(v)
    if params.get("symmetric", True):
        # an undirected reading of the edge list
        edges = edges + [(d, s, w) for s, d, w in edges]
    space = enriched.shortest_path_closure(nodes, edges)
    pmap = params.get("pointMap", _PATH_MAP)
    try:
        flow = enriched.lawvere_flow(space, pmap)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"pointMap is not total: {exc}") from None
    x = params.get("xStar", nodes[0])
    if x not in nodes:
        raise ConfigurationError(f"xStar {x!r} is not a node")
    V = CandidateV(lambda y: space.d(x, y), "hom(x*, .)")
    return Bundle("lawvere-graph", flow, x, V, Envelope(identity_k(), identity_k()),
                  policy=HorizonPolicy(HorizonMode.CYCLE_DETECT), extras={"space": space})


# --------------------------------------------------------------------------
# checks


def parse_alpha(spec) -> ClassKMorphism:
    """'id' or {"coeff": c, "power": p}."""
    if spec in (None, "id", "identity"):
        return identity_k()
    if isinstance(spec, dict):
        return power_k(float(spec.get("coeff", 1.0)), float(spec.get("power", 1.0)))
    raise ConfigurationError(f"unknown class K specification {spec!r}")


def _need(bundle: Bundle, attr: str, check: str):
    v = getattr(bundle, attr)
    if v is None:
        raise ConfigurationError(f"check {check!r} is not available for {bundle.instance!r}")
    return v


def _extra(bundle: Bundle, key: str, check: str):
    if key not in bundle.extras:
        raise ConfigurationError(f"check {check!r} is not available for {bundle.instance!r}")
    return bundle.extras[key]


def _witness_report(fn):
    try:
        return fn()
    except CheckFailed as exc:
        return exc.report


def _c_equilibrium(b, seed, n, opts):
    def run():
        w = check_equilibrium(b.flow, b.x_star, seed, n)
        return CheckReport("equilibrium", True, w.checked_times, w.worst_residual)
    return _witness_report(run)


def _c_stable(b, seed, n, opts):
    alpha = parse_alpha(opts["alpha"]) if "alpha" in opts else b.alpha
    return check_stable(b.flow, b.x_star, alpha, seed, n).report


def _c_lyapunov(b, seed, n, opts):
    V, env = _need(b, "V", "lyapunov_theorem"), _need(b, "envelope", "lyapunov_theorem")
    return _witness_report(lambda: verify_lyapunov_theorem(V, b.flow, b.x_star, env, seed, n).report)


def _c_converse(b, seed, n, opts):
    policy = b.policy
    if "tailFactor" in opts or "horizon" in opts:
        policy = HorizonPolicy(policy.mode, float(opts.get("horizon", policy.horizon)),
                               float(opts.get("tailFactor", policy.tail_factor)))
    alpha = parse_alpha(opts["alpha"]) if "alpha" in opts else b.alpha
    witness = check_stable(b.flow, b.x_star, alpha, seed, n)
    if not witness.passed:
        return witness.report
    V = construct_converse_V(b.flow, b.x_star, witness, policy)
    pd = check_positive_definite(V, b.x_star, converse_envelope(witness), b.flow.setting, seed, n)
    dec = check_decrescent(V, b.flow, seed, n)
    from .core import merge_reports
    return merge_reports("converse", [pd, dec])


def _c_stability_from_contraction(b, seed, n, opts):
    return _witness_report(lambda: stability_from_contraction(b.flow, b.x_star, seed, n).report)


def _c_epsilon_delta(b, seed, n, opts):
    alpha = parse_alpha(opts["alpha"]) if "alpha" in opts else b.alpha
    witness = check_stable(b.flow, b.x_star, alpha, seed, n)
    if not witness.passed:
        return witness.report
    return epsilon_delta_check(b.flow, b.x_star, witness, opts.get("epsilons", [0.1, 0.5, 1.0]),
                               seed, n)


def _c_derivative(b, seed, n, opts):
    return classical.check_derivative_condition(_need(b, "V", "derivative_condition"),
                                                _extra(b, "ode", "derivative_condition"), seed, n)


def _c_derivative_equiv(b, seed, n, opts):
    _extra(b, "ode", "derivative_equivalence")
    return classical.check_derivative_equivalence(b.V, b.flow, seed, n)


def _c_discrete(b, seed, n, opts):
    return classical.check_discrete_lyapunov(_need(b, "V", "discrete_lyapunov"),
                                             _extra(b, "system", "discrete_lyapunov"), seed, n)


def _c_contraction(b, seed, n, opts):
    return kalman.check_contraction(_extra(b, "Mk", "contraction"), seed, n)


def _c_membership(b, seed, n, opts):
    return kalman.check_H_membership(_extra(b, "Mk", "H_membership"))


def _c_fixed_point(b, seed, n, opts):
    return _extra(b, "fixed_point", "riccati_fixed_point")


def _c_kalman_lyapunov(b, seed, n, opts):
    model = _extra(b, "model", "kalman_lyapunov")
    return _witness_report(lambda: kalman.verify_kalman_lyapunov(model, seed, n).report)


def _c_set_stability(b, seed, n, opts):
    sys = _extra(b, "system", "set_stability")
    if not isinstance(sys, enriched.SetSystem):
        raise ConfigurationError("set_stability needs the powerset instance")
    return enriched.check_set_stability(sys, b.extras["x"]).report


def _c_converse_exhaustive(b, seed, n, opts):
    sys = _extra(b, "system", "converse_exhaustive")
    if not isinstance(sys, enriched.SetSystem):
        raise ConfigurationError("converse_exhaustive needs the powerset instance")
    return enriched.exhaustive_converse_check(sys, b.extras["x"])


def _c_enriched_axioms(b, seed, n, opts):
    return enriched.check_enriched_axioms(_extra(b, "space", "enriched_axioms"))


def _c_enriched_props(b, seed, n, opts):
    return enriched.check_enriched_distance_props(_extra(b, "space", "enriched_distance_props"))


def _c_class_k(b, seed, n, opts):
    return check_class_k(parse_alpha(opts.get("alpha")), b.flow.setting.stable, seed, n)


CHECKS: Dict[str, Callable[[Bundle, int, int, dict], CheckReport]] = {
    "monoid_laws": lambda b, s, n, o: check_monoid_laws(b.flow.setting.time, s, n),
    "distance_axioms": lambda b, s, n, o: check_distance_axioms(b.flow.setting, s, n),
    "norm_properties": lambda b, s, n, o: check_norm_properties(b.flow.setting, b.x_star, s, n),
    "bimonoidal_laws": lambda b, s, n, o: check_bimonoidal_laws(b.flow.setting.stable, s,
                                                                min(n, 12)),
    "flow_laws": lambda b, s, n, o: check_flow_laws(b.flow, s, n),
    "equilibrium": _c_equilibrium,
    "stable": _c_stable,
    "weakly_contracting": lambda b, s, n, o: check_weakly_contracting(b.flow, s, n),
    "stability_from_contraction": _c_stability_from_contraction,
    "epsilon_delta": _c_epsilon_delta,
    "class_k": _c_class_k,
    "positive_definite": lambda b, s, n, o: check_positive_definite(
        _need(b, "V", "positive_definite"), b.x_star, _need(b, "envelope", "positive_definite"),
        b.flow.setting, s, n),
    "decrescent": lambda b, s, n, o: check_decrescent(_need(b, "V", "decrescent"), b.flow, s, n),
    "lyapunov_theorem": _c_lyapunov,
    "converse": _c_converse,
    "derivative_condition": _c_derivative,
    "derivative_equivalence": _c_derivative_equiv,
    "discrete_lyapunov": _c_discrete,
    "contraction": _c_contraction,
    "H_membership": _c_membership,
    "riccati_fixed_point": _c_fixed_point,
    "kalman_lyapunov": _c_kalman_lyapunov,
    "set_stability": _c_set_stability,
    "converse_exhaustive": _c_converse_exhaustive,
    "enriched_axioms": _c_enriched_axioms,
    "enriched_distance_props": _c_enriched_props,
}


def build(instance: str, params: Optional[dict] = None, base: Path = Path(".")) -> Bundle:
    try:
        inst = REGISTRY[instance]
    except KeyError:
        raise ConfigurationError(f"unknown instance {instance!r}") from None
    return inst.build(dict(params or {}), Path(base))
