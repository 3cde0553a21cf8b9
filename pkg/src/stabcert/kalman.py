"""Kalman filtering as a flow: the discrete Riccati action of a symplectic monoid.

Blocks ``M = [[A, B], [C, D]]`` act on positive definite matrices by
``P -> (A P + B)(C P + D)^-1``.  With the log-eigenvalue distance on the SPD
cone every member of the monoid is a weak contraction, so ``V(P) = d(P, P*)``
is a Lyapunov function for any fixed point ``P*``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .classk import Envelope, identity_k
from .config import DEFAULT
from .core import (
    CheckFailed,
    CheckReport,
    ConfigurationError,
    NumericError,
    Setting,
    Tally,
    TimeKind,
    TimeMonoid,
    make_rng,
    merge_reports,
    real_stable_space,
)
from .flows import Flow, StabilityWitness
from .lyapunov import CandidateV, verify_lyapunov_theorem
from .matnum import (
    NotPositiveDefiniteError,
    SingularMatrixError,
    as_matrix,
    is_pd,
    is_psd,
    mat_inverse,
    relative_eigenvalues,
    symmetrize,
)


class RiccatiDomainError(NumericError):
    """C P + D (or the covariance denominator) is singular, or the image left the cone."""


class RiccatiNonConvergence(NumericError):
    pass


def symplectic_j(n: int) -> np.ndarray:
    z, i = np.zeros((n, n)), np.eye(n)
    return np.block([[z, i], [-i, z]])


@dataclass(frozen=True)
class SymplecticCandidate:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    @classmethod
    def from_matrix(cls, m) -> "SymplecticCandidate":
        m = as_matrix(m)
        if m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError(f"expected a 2n x 2n matrix, got {m.shape}")
        n = m.shape[0] // 2
        return cls(m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:])

    @classmethod
    def from_blocks(cls, A, B, C, D) -> "SymplecticCandidate":
        return cls(as_matrix(A), as_matrix(B), as_matrix(C), as_matrix(D))

    def __matmul__(self, other: "SymplecticCandidate") -> "SymplecticCandidate":
        return SymplecticCandidate.from_matrix(self.matrix @ other.matrix)


def as_spd(p, name: str = "P") -> np.ndarray:
    """Validate an SPD point: symmetric within 1e-12 and positive definite."""
    p = as_matrix(p)
    if not is_pd(p):
        raise ValueError(f"{name} is not symmetric positive definite")
    return p


def check_H_membership(M: SymplecticCandidate, tol: float = DEFAULT.membership) -> CheckReport:
    """M^T J M = J, A invertible, B A^T and A^T C positive semi-definite.

    Each failed clause is named in the report detail.
    """
    n = M.n
    m = M.matrix
    J = symplectic_j(n)
    clauses = []

    sym = Tally("symplectic M^T J M = J", tol)
    scale = max(1.0, float(np.max(np.abs(m))) ** 2)
    sym.record(float(np.max(np.abs(m.T @ J @ m - J))) / scale, (m,), "M^T J M != J")
    clauses.append(sym.report())

    inv = Tally("A invertible")
    try:
        mat_inverse(M.A)
        inv.record(0.0, (M.A,))
    except SingularMatrixError as exc:
        inv.fail((M.A,), f"A is singular (pivot {exc.pivot:.3g})")
    clauses.append(inv.report())

    for label, prod in (("B A^T in P", M.B @ M.A.T), ("A^T C in P", M.A.T @ M.C)):
        t = Tally(label, tol)
        asym = float(np.max(np.abs(prod - prod.T), initial=0.0)) / max(1.0, float(np.max(np.abs(prod))))
        t.record(asym, (prod,), f"{label.split()[0]} is not symmetric")
        if not is_psd(prod):
            t.fail((prod,), f"{label.split(' in')[0]} is not positive semi-definite")
        clauses.append(t.report())

    report = merge_reports("H_membership", clauses)
    failed = [c.law_name for c in clauses if not c.passed]
    if failed:
        report = CheckReport(report.law_name, False, report.samples_checked,
                             report.worst_residual, report.counterexample,
                             "failed clauses: " + "; ".join(failed))
    return report


def riccati_action(M: SymplecticCandidate, P) -> np.ndarray:
    """(A P + B)(C P + D)^-1, symmetrized."""
    P = as_matrix(P)
    try:
        Y = mat_inverse(M.C @ P + M.D)
    except SingularMatrixError as exc:
        raise RiccatiDomainError(f"C P + D is singular (pivot {exc.pivot:.3g})") from exc
    out = symmetrize((M.A @ P + M.B) @ Y)
    if not is_pd(out):
        raise RiccatiDomainError("Riccati image left the positive definite cone")
    return out


def spd_distance(P, Q) -> float:
    """sqrt(sum_i log^2 lambda_i(P Q^-1))."""
    lam = relative_eigenvalues(P, Q)
    if min(lam) <= 0:
        raise NotPositiveDefiniteError(min(lam))
    return math.sqrt(sum(math.log(v) ** 2 for v in lam))


def random_spd(rng: np.random.Generator, n: int, log_spread: float = 2.0) -> np.ndarray:
    """Random SPD matrix with log-eigenvalues uniform in [-spread, spread]."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    lam = np.exp(rng.uniform(-log_spread, log_spread, size=n))
    return symmetrize((q * lam) @ q.T)


def check_contraction(M: SymplecticCandidate, seed: int = 0, sample_count: int = 200,
                      slack: float = DEFAULT.kalman) -> CheckReport:
    """d(phi(M,P), phi(M,Q)) <= d(P,Q) + slack over random SPD pairs."""
    rng = make_rng(seed)
    tally = Tally("contraction", slack)
    for _ in range(sample_count):
        P, Q = random_spd(rng, M.n), random_spd(rng, M.n)
        lhs = spd_distance(riccati_action(M, P), riccati_action(M, Q))
        tally.record(lhs - spd_distance(P, Q), (P, Q), "the Riccati action expands this pair")
    return tally.report()


@dataclass(frozen=True)
class KalmanModel:
    """x_{k+1} = A x_k + F w_k, y_k = C x_k + v_k with unit noise covariances."""

    A: np.ndarray
    F: np.ndarray
    C: np.ndarray
    S: np.ndarray = field(init=False, repr=False)
    R: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A, F, C = as_matrix(self.A), as_matrix(self.F), as_matrix(self.C)
        n = A.shape[0]
        if A.shape != (n, n) or F.shape[0] != n or C.shape[1] != n:
            raise ConfigurationError(
                f"incompatible shapes A{A.shape}, F{F.shape}, C{C.shape}")
        mat_inverse(A)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "S", F @ F.T)
        object.__setattr__(self, "R", C.T @ C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def scalar(cls, a: float = 1.0, f: float = 1.0, c: float = 1.0) -> "KalmanModel":
        return cls(np.array([[a]]), np.array([[f]]), np.array([[c]]))


def build_Mk(model: KalmanModel) -> SymplecticCandidate:
    """Blocks (A, S A^-T, R A, (I + R S) A^-T)."""
    A, S, R = model.A, model.S, model.R
    AinvT = mat_inverse(A).T
    I = np.eye(model.n)
    return SymplecticCandidate(A, S @ AinvT, R @ A, (I + R @ S) @ AinvT)


def covariance_update(model: KalmanModel, P) -> np.ndarray:
    """(A P A^T + S)(I + R S + R A P A^T)^-1, symmetrized."""
    P = as_matrix(P)
    A, S, R = model.A, model.S, model.R
    APA = A @ P @ A.T
    try:
        inv = mat_inverse(np.eye(model.n) + R @ S + R @ APA)
    except SingularMatrixError as exc:
        raise RiccatiDomainError("covariance denominator is singular") from exc
    return symmetrize((APA + S) @ inv)


def find_riccati_fixed_point(model: KalmanModel, P0=None, tol: float = 1e-13,
                             max_iter: int = 10_000):
    """Iterate the covariance update until successive iterates are tol-close.

    Returns ``(P_star, report)`` where the report records the equilibrium
    residual d(phi(P*), P*).
    """
    P = np.eye(model.n) if P0 is None else as_spd(P0, "P0")
    for k in range(max_iter):
        nxt = covariance_update(model, P)
        step = spd_distance(nxt, P)
        P = nxt
        if step <= tol:
            break
    else:
        raise RiccatiNonConvergence(f"no fixed point within {max_iter} iterations (last step {step:.3g})")
    residual = spd_distance(covariance_update(model, P), P)
    tally = Tally("riccati_fixed_point", DEFAULT.kalman)
    tally.record(residual, (P,), "fixed-point residual too large")
    return P, tally.report()


def kalman_filter_step(model: KalmanModel, xhat, P, y):
    """One estimate update; returns (x_hat_k, P_k)."""
    xhat = np.asarray(xhat, dtype=float)
    y = np.asarray(y, dtype=float)
    Pk = covariance_update(model, P)
    gain_state = model.A - Pk @ model.R @ model.A
    return gain_state @ xhat + Pk @ model.C.T @ y, Pk


# --------------------------------------------------------------------------
# the setting: SPD cone, words over generators as time


def _relative_gap(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))


def word_monoid(generators: Sequence[SymplecticCandidate], max_word: int = 8) -> TimeMonoid:
    """Free monoid on the generators, represented by the matrix products of words."""
    if not generators:
        raise ConfigurationError("the Riccati time monoid needs at least one generator")
    n2 = generators[0].matrix.shape[0]
    mats = [g.matrix for g in generators]

    def sampler(rng, count):
        out = [np.eye(n2)]
        for _ in range(count - 1):
            m = np.eye(n2)
            for _ in range(int(rng.integers(0, max_word + 1))):
                m = m @ mats[int(rng.integers(len(mats)))]
            out.append(m)
        return out

    return TimeMonoid(
        name=f"words<= {max_word} over {len(mats)} generators",
        op=lambda a, b: a @ b, unit=np.eye(n2), kind=TimeKind.DISCRETE_SAMPLED,
        sampler=sampler, gap=_relative_gap, tolerance=DEFAULT.membership,
    )


def spd_setting(n: int, time: TimeMonoid, log_spread: float = 2.0) -> Setting:
    return Setting(
        name=f"spd-cone-{n}",
        stable=real_stable_space(),
        time=time,
        distance=spd_distance,
        sampler=lambda rng, count: [random_spd(rng, n, log_spread) for _ in range(count)],
        metadata={"dimension": n},
    )


def riccati_flow(generators: Sequence[SymplecticCandidate], max_word: int = 8) -> Flow:
    n = generators[0].n
    setting = spd_setting(n, word_monoid(generators, max_word))

    def act(m, P):
        return riccati_action(SymplecticCandidate.from_matrix(m), P)

    return Flow(setting, act, DEFAULT.kalman, "riccati")


def verify_kalman_lyapunov(model: KalmanModel, seed: int = 0, sample_count: int = 200,
                           generators: Optional[Sequence[SymplecticCandidate]] = None,
                           P0=None) -> StabilityWitness:
    """V(P) = d(P, P*) with envelope (id, id) along the monoid generated by M_k."""
    P_star, fixed = find_riccati_fixed_point(model, P0)
    if not fixed.passed:
        raise CheckFailed(fixed)
    gens = list(generators) if generators is not None else [build_Mk(model)]
    for g in gens:
        member = check_H_membership(g)
        if not member.passed:
            raise CheckFailed(member, f"generator is not in H: {member.detail}")
    flow = riccati_flow(gens)
    V = CandidateV(lambda P: spd_distance(P, P_star), "d(., P*)")
    return verify_lyapunov_theorem(V, flow, P_star, Envelope(identity_k(), identity_k()),
                                   seed, sample_count)


# --------------------------------------------------------------------------
# model files

_HEADER = re.compile(r"^([A-Za-z]\w*)\s+(\d+)\s+(\d+)\s*$")


def parse_model_text(text: str) -> KalmanModel:
    """Blocks of ``NAME rows cols`` followed by ``rows`` lines of entries.

    Blocks A, F and C are required; ``#`` starts a comment.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    blocks = {}
    i = 0
    while i < len(lines):
        m = _HEADER.match(lines[i])
        if not m:
            raise ConfigurationError(f"expected a block header 'NAME rows cols', got {lines[i]!r}")
        name, r, c = m.group(1), int(m.group(2)), int(m.group(3))
        rows = lines[i + 1:i + 1 + r]
        if len(rows) != r:
            raise ConfigurationError(f"block {name} is truncated")
        try:
            data = [[float(v) for v in row.split()] for row in rows]
        except ValueError as exc:
            raise ConfigurationError(f"block {name}: {exc}") from exc
        if any(len(row) != c for row in data):
            raise ConfigurationError(f"block {name} rows must have {c} entries")
        blocks[name] = np.array(data, dtype=float).reshape(r, c)
        i += 1 + r
    missing = {"A", "F", "C"} - set(blocks)
    if missing:
        raise ConfigurationError(f"model file lacks blocks {sorted(missing)}")
    return KalmanModel(blocks["A"], blocks["F"], blocks["C"])


def load_model(path) -> KalmanModel:
    return parse_model_text(Path(path).read_text())


def format_model(model: KalmanModel) -> str:
    out = []
    for name in ("A", "F", "C"):
        m = getattr(model, name)
        out.append(f"{name} {m.shape[0]} {m.shape[1]}")
        out.extend(" ".join(repr(float(v)) for v in row) for row in m)
    return "\n".join(out) + "\n"
