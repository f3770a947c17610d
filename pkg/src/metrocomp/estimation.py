"""SLDs, classical and quantum Fisher information, the QFI Cramer-Rao bound
and the three-layer compatibility verdict.

The SLD of a rank-deficient state is only defined on the support; we complete
it with zeros on the kernel-kernel block.  That gauge choice does not affect
Tr(rho L_i L_j) (and hence neither the QFI nor the weak-commutation values),
only the operator-level commutator, which is reported separately.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    UnidentifiableParametersError,
    UnsaturableDirectionError,
    ValidationError,
)
from .operators import (
    DensityMatrix,
    HermitianOperator,
    ParametricModel,
    Povm,
    dag,
    eigh,
    hermitize,
)
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "SldSet",
    "FisherMatrix",
    "CompatibilityReport",
    "classical_fisher",
    "povm_fisher",
    "sld",
    "model_slds",
    "qfi_matrix",
    "qfi_cr_bound",
    "compatibility_check",
]


@dataclass(frozen=True)
class SldSet:
    """Symmetric logarithmic derivatives L_i for a model at one point."""

    slds: tuple
    rank_support_dim: int

    @property
    def param_count(self) -> int:
        return len(self.slds)

    def matrices(self) -> list:
        return [l.entries for l in self.slds]


@dataclass(frozen=True)
class FisherMatrix:
    """Real symmetric PSD information matrix, classical or quantum."""

    entries: np.ndarray
    kind: str
    tols: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("Fisher matrix must be square")
        if self.kind not in ("classical", "quantum"):
            raise ValidationError(f"unknown Fisher matrix kind {self.kind!r}")
        sym_err = np.max(np.abs(m - m.T))
        if sym_err > self.tols.fisher_symmetry:
            raise ValidationError(f"Fisher matrix not symmetric: {sym_err:.3e}")
        m = 0.5 * (m + m.T)
        w = np.linalg.eigvalsh(m)
        if w[0] < self.tols.psd_floor * max(1.0, abs(w[-1])):
            raise ValidationError(f"Fisher matrix not PSD: min eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "entries", m)
        self.entries.setflags(write=False)

    @property
    def param_count(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class CompatibilityReport:
    """Per-pair diagnostics for the three compatibility layers.

    weak_commutation[i, j] = Tr(rho [L_i, L_j]) / i   (collective-measurement
    saturability), qfi_offdiag[i, j] = Re Tr(rho L_i L_j) for i != j
    (statistical independence), strong_commutators[i, j] = ||[L_i, L_j]||
    (single-copy measurement compatibility).  The verdicts are reported
    separately because the three conditions have distinct operational
    meanings.
    """

    weak_commutation: np.ndarray
    qfi_offdiag: np.ndarray
    strong_commutators: np.ndarray
    weak_ok: bool
    qfi_diag_ok: bool
    strong_ok: bool
    tol: float
    eq13_residual: float

    @property
    def compatible(self) -> bool:
        """Weak commutation plus diagonal QFI (the paper's necessary pair)."""
        return self.weak_ok and self.qfi_diag_ok


def classical_fisher(probs, dprobs, tols: Tolerances = DEFAULT) -> FisherMatrix:
    """Fisher matrix of a discrete distribution.

    ``probs``: outcome probabilities, shape (n_outcomes,).
    ``dprobs``: their parameter derivatives, shape (p, n_outcomes).
    Outcomes with probability below the relative floor are skipped (their
    information content is treated as a removable singularity).
    """
    p = np.asarray(probs, dtype=float)
    dp = np.asarray(dprobs, dtype=float)
    if dp.ndim != 2 or dp.shape[1] != p.shape[0]:
        raise DimensionMismatchError("dprobs must have shape (p, n_outcomes)")
    floor = tols.p_floor_rel * max(p.max(initial=0.0), 0.0)
    if p.min(initial=0.0) < -max(1e-12, floor):
        raise ValidationError(f"negative probability {p.min():.3e}")
    if abs(p.sum() - 1.0) > tols.prob_sum:
        raise ValidationError(f"probabilities sum to {p.sum():.12f}, not 1")
    if np.max(np.abs(dp.sum(axis=1))) > tols.prob_sum:
        raise ValidationError("derivative rows do not sum to zero")
    keep = p > floor
    pk = p[keep]
    dpk = dp[:, keep]
    f = (dpk / pk) @ dpk.T
    return FisherMatrix(0.5 * (f + f.T), "classical", tols)


def povm_fisher(
    rho_model: ParametricModel, phi, povm: Povm, tols: Tolerances = DEFAULT
) -> FisherMatrix:
    """Classical Fisher matrix of the outcome statistics p(x|phi) = Tr(rho Pi_x)."""
    phi = np.asarray(phi, dtype=float)
    rho = rho_model.eval_state(phi)
    if rho.dim != povm.dim:
        raise DimensionMismatchError("state and POVM dimensions differ")
    ds = [np.asarray(getattr(d, "entries", d), dtype=complex) for d in rho_model.derivs(phi)]
    probs = np.array([np.trace(rho.entries @ e).real for e in povm.elements])
    probs = np.clip(probs, 0.0, None)
    dprobs = np.array([[np.trace(d @ e).real for e in povm.elements] for d in ds])
    return classical_fisher(probs, dprobs, tols)


def sld(rho: DensityMatrix, drho, tols: Tolerances = DEFAULT) -> HermitianOperator:
    """Solve the SLD equation 0.5 (L rho + rho L) = drho on the support of rho.

    Eigenvalue pairs below the relative floor are zeroed (kernel-kernel
    gauge).  If the derivative itself has weight on the kernel-kernel block
    the direction is unsaturable and an error is raised.
    """
    d = np.asarray(getattr(drho, "entries", drho), dtype=complex)
    if d.shape != rho.entries.shape:
        raise DimensionMismatchError("drho shape does not match rho")
    if np.max(np.abs(d - dag(d))) > tols.sld_residual:
        raise ValidationError("drho must be Hermitian")
    w, u = eigh(rho.entries, tols)
    floor = tols.p_floor_rel * w[-1]
    d_eig = dag(u) @ d @ u
    denom = w[:, None] + w[None, :]
    mask = denom > floor
    support = w > floor
    kernel = ~support
    if np.any(kernel):
        leak = np.max(np.abs(d_eig[np.ix_(kernel, kernel)]))
        if leak > tols.sld_support_leak:
            raise UnsaturableDirectionError(
                f"derivative has weight {leak:.3e} outside the support of rho; "
                "the QFI diverges in this direction"
            )
    l_eig = np.zeros_like(d_eig)
    l_eig[mask] = 2.0 * d_eig[mask] / denom[mask]
    l = hermitize(u @ l_eig @ dag(u))
    residual = np.max(np.abs(0.5 * (l @ rho.entries + rho.entries @ l) - d))
    if residual > tols.sld_residual:
        raise ValidationError(f"SLD defining-equation residual {residual:.3e}")
    return HermitianOperator(l, tols)


def model_slds(model: ParametricModel, phi, tols: Tolerances = DEFAULT) -> SldSet:
    """SLDs of a parametric model at one parameter point."""
    phi = np.asarray(phi, dtype=float)
    rho = model.eval_state(phi)
    w = np.linalg.eigvalsh(rho.entries)
    rank = int(np.sum(w > tols.p_floor_rel * w[-1]))
    ls = tuple(sld(rho, d, tols) for d in model.derivs(phi))
    return SldSet(ls, rank)


def qfi_matrix(rho: DensityMatrix, slds: SldSet, tols: Tolerances = DEFAULT) -> FisherMatrix:
    """Quantum Fisher information matrix, (F_Q)_ij = Re Tr(rho L_i L_j)."""
    ls = slds.matrices()
    p = len(ls)
    f = np.zeros((p, p))
    rl = [rho.entries @ l for l in ls]
    for i in range(p):
        for j in range(i, p):
            val = np.trace(ls[j] @ rl[i]).real
            f[i, j] = f[j, i] = val
    return FisherMatrix(f, "quantum", tols)


def qfi_cr_bound(fq: FisherMatrix, cost, tols: Tolerances = DEFAULT) -> float:
    """Tr(G F_Q^{-1}) for a PSD cost matrix G."""
    g = np.asarray(cost, dtype=float)
    if g.shape != fq.entries.shape:
        raise DimensionMismatchError("cost matrix shape does not match Fisher matrix")
    if np.max(np.abs(g - g.T)) > tols.fisher_symmetry:
        raise ValidationError("cost matrix must be symmetric")
    if np.linalg.eigvalsh(g)[0] < tols.psd_floor:
        raise ValidationError("cost matrix must be PSD")
    w = np.linalg.eigvalsh(fq.entries)
    if w[0] <= 1e-12 * max(w[-1], 0.0):
        raise UnidentifiableParametersError(
            f"Fisher matrix singular (min eigenvalue {w[0]:.3e}); "
            "some parameters are unidentifiable"
        )
    return float(np.trace(g @ np.linalg.inv(fq.entries)))


def _eq13_sum(rho: DensityMatrix, ds, i, j, tols: Tolerances) -> complex:
    # explicit eigendecomposition form of Tr(rho L_i L_j); the 2/(p_m+p_n)
    # factors of both SLDs combine into 4 p_m / (p_m+p_n)^2
    w, u = eigh(rho.entries, tols)
    floor = tols.p_floor_rel * w[-1]
    di = dag(u) @ ds[i] @ u
    dj = dag(u) @ ds[j] @ u
    denom = (w[:, None] + w[None, :]) ** 2
    mask = (w[:, None] + w[None, :]) > floor
    weight = np.zeros_like(denom)
    weight[mask] = 4.0 * (w[:, None] * np.ones_like(denom))[mask] / denom[mask]
    return complex(np.sum(weight * di * dj.T))


def compatibility_check(
    rho: DensityMatrix,
    slds: SldSet,
    fq: FisherMatrix,
    tol: float = DEFAULT.compat,
    derivs=None,
    tols: Tolerances = DEFAULT,
) -> CompatibilityReport:
    """Evaluate the three compatibility layers at one model point.

    When ``derivs`` (the d rho matrices) is provided and rho is full rank,
    the expectation Tr(rho L_i L_j) is recomputed from the explicit
    eigendecomposition sum as an internal cross-check.
    """
    ls = slds.matrices()
    p = len(ls)
    weak = np.zeros((p, p))
    offdiag = np.zeros((p, p))
    strong = np.zeros((p, p))
    rl = [rho.entries @ l for l in ls]
    for i in range(p):
        for j in range(p):
            if i == j:
                continue
            t = np.trace(ls[j] @ rl[i])
            weak[i, j] = 2.0 * t.imag  # Tr(rho [L_i, L_j]) / i
            offdiag[i, j] = t.real
            comm = ls[i] @ ls[j] - ls[j] @ ls[i]
            strong[i, j] = np.linalg.norm(comm, 2)

    eq13_residual = 0.0
    if derivs is not None and p > 1:
        w = np.linalg.eigvalsh(rho.entries)
        if w[0] > tols.p_floor_rel * w[-1]:
            ds = [np.asarray(getattr(d, "entries", d), dtype=complex) for d in derivs]
            for i in range(p):
                for j in range(p):
                    if i == j:
                        continue
                    direct = np.trace(ls[j] @ rl[i])
                    explicit = _eq13_sum(rho, ds, i, j, tols)
                    eq13_residual = max(eq13_residual, abs(direct - explicit))

    return CompatibilityReport(
        weak_commutation=weak,
        qfi_offdiag=offdiag,
        strong_commutators=strong,
        weak_ok=bool(np.max(np.abs(weak), initial=0.0) < tol),
        qfi_diag_ok=bool(np.max(np.abs(offdiag), initial=0.0) < tol),
        strong_ok=bool(np.max(strong, initial=0.0) < tol),
        tol=tol,
        eq13_residual=float(eq13_residual),
    )
