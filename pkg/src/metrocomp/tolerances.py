"""Central numerical tolerance configuration.

Every validation threshold used by the library lives here so that the
acceptance tests and the library agree on one set of numbers.  All values
are overridable by constructing a custom :class:`Tolerances`.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # operator / state validation
    hermiticity: float = 1e-12          # max-abs deviation from conjugate transpose
    trace_one: float = 1e-10            # |tr(rho) - 1|
    psd_floor: float = -1e-10           # smallest admissible eigenvalue of a state / POVM element
    povm_completeness: float = 1e-10    # |sum(POVM) - identity| max-abs
    kraus_completeness: float = 1e-10   # |sum K^dag K - identity| max-abs
    eigh_reconstruction: float = 1e-10  # |U diag(w) U^dag - H| max-abs

    # derivatives
    fd_step: float = 1e-5               # central finite-difference step on dimensionless parameters
    deriv_match: float = 1e-6           # analytic derivative vs finite difference (max-abs)
    deriv_traceless: float = 1e-10      # |tr(d rho)|

    # estimation
    p_floor_rel: float = 1e-12          # relative floor for eigenvalue sums / probability cutoffs
    prob_sum: float = 1e-9              # probability normalization slack
    sld_residual: float = 1e-8          # |0.5(L rho + rho L) - d rho| max-abs
    sld_support_leak: float = 1e-8      # derivative weight allowed outside supp(rho)
    fisher_symmetry: float = 1e-10
    compat: float = 1e-8                # default compatibility verdict tolerance

    # Holevo solver
    holevo_constraint: float = 1e-6     # residual of local-unbiasedness at the solution
    holevo_equality: float = 1e-6       # bound-equality tolerance for the iff test
    weak_violation: float = 1e-8        # weak-commutation tolerance for the iff test
    solver_rel_change: float = 1e-9     # relative objective change defining a stall
    solver_stall_iters: int = 20        # stalled iterations before stopping
    solver_max_iters: int = 50_000

    def with_(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT = Tolerances()
