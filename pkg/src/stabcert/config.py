"""Central tolerance record shared by every check in the package."""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # equality in ordered real carriers: |a - b| <= real_eq
    real_eq: float = 1e-9
    ode: float = 1e-6
    kalman: float = 1e-8
    monoid_float: float = 1e-12
    # matrix kernel
    symmetry: float = 1e-12
    inverse: float = 1e-10
    cholesky: float = 1e-10
    psd_clamp: float = 1e-10
    jacobi_offdiag: float = 1e-12
    jacobi_max_sweeps: int = 100
    membership: float = 1e-9
    # finite-difference derivative condition
    fd_step: float = 1e-5
    fd_rel: float = 1e-6

    def with_overrides(self, **kw) -> "Tolerances":
        return replace(self, **kw)


DEFAULT = Tolerances()
