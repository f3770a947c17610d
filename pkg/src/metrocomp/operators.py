"""Dense complex-matrix substrate: Hermitian operators, density matrices,
POVMs, Kraus channels and the finite-difference oracle used to validate
analytic derivatives everywhere else.

All values are plain immutable wrappers around ``numpy`` arrays; every
operation is a pure function of its inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    NumericalFailureError,
    ValidationError,
)
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "HermitianOperator",
    "DensityMatrix",
    "Povm",
    "KrausChannel",
    "ParametricModel",
    "apply_channel",
    "finite_diff_derivs",
    "eigh",
    "dag",
    "hermitize",
]


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitize(a: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian part, (A + A^dag)/2."""
    return 0.5 * (a + dag(a))


def _as_complex_matrix(entries) -> np.ndarray:
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise NumericalFailureError("matrix contains non-finite entries")
    return m


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian matrix; houses Hamiltonians, SLDs, observables alike."""

    entries: np.ndarray
    tols: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = _as_complex_matrix(self.entries)
        err = np.max(np.abs(m - dag(m)))
        if err > self.tols.hermiticity:
            raise ValidationError(f"matrix not Hermitian: max |A - A^dag| = {err:.3e}")
        object.__setattr__(self, "entries", hermitize(m))
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Positive unit-trace Hermitian matrix."""

    entries: np.ndarray
    tols: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = _as_complex_matrix(self.entries)
        herm_err = np.max(np.abs(m - dag(m)))
        if herm_err > self.tols.hermiticity:
            raise ValidationError(f"density matrix not Hermitian: {herm_err:.3e}")
        m = hermitize(m)
        tr_err = abs(np.trace(m).real - 1.0)
        if tr_err > self.tols.trace_one:
            raise ValidationError(f"density matrix trace deviates from 1 by {tr_err:.3e}")
        w = np.linalg.eigvalsh(m)
        if w[0] < self.tols.psd_floor:
            raise ValidationError(f"density matrix not positive: min eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "entries", m)
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @staticmethod
    def from_pure(psi: np.ndarray, tols: Tolerances = DEFAULT) -> "DensityMatrix":
        v = np.asarray(psi, dtype=complex).reshape(-1)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValidationError("zero vector cannot define a pure state")
        v = v / n
        return DensityMatrix(np.outer(v, v.conj()), tols)


@dataclass(frozen=True)
class Povm:
    """Positive operators of common dimension summing to the identity."""

    elements: tuple
    tols: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        if len(self.elements) == 0:
            raise ValidationError("POVM needs at least one element")
        mats = []
        dim = None
        for e in self.elements:
            m = hermitize(_as_complex_matrix(e))
            if dim is None:
                dim = m.shape[0]
            elif m.shape[0] != dim:
                raise DimensionMismatchError("POVM elements of mixed dimension")
            w = np.linalg.eigvalsh(m)
            if w[0] < self.tols.psd_floor:
                raise ValidationError(f"POVM element not positive: min eigenvalue {w[0]:.3e}")
            m.setflags(write=False)
            mats.append(m)
        total = sum(mats)
        err = np.max(np.abs(total - np.eye(dim)))
        if err > self.tols.povm_completeness:
            raise ValidationError(f"POVM does not sum to identity: max deviation {err:.3e}")
        object.__setattr__(self, "elements", tuple(mats))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    kraus_ops: tuple
    tols: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        if len(self.kraus_ops) == 0:
            raise ValidationError("channel needs at least one Kraus operator")
        mats = []
        shape = None
        for k in self.kraus_ops:
            m = np.asarray(k, dtype=complex)
            if m.ndim != 2:
                raise ValidationError("Kraus operators must be matrices")
            if shape is None:
                shape = m.shape
            elif m.shape != shape:
                raise DimensionMismatchError("Kraus operators of mixed shape")
            m = m.copy()
            m.setflags(write=False)
            mats.append(m)
        din = shape[1]
        total = sum(dag(k) @ k for k in mats)
        err = np.max(np.abs(total - np.eye(din)))
        if err > self.tols.kraus_completeness:
            raise ValidationError(f"Kraus operators not trace preserving: deviation {err:.3e}")
        object.__setattr__(self, "kraus_ops", tuple(mats))

    @property
    def dim_in(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops[0].shape[0]


@dataclass(frozen=True)
class ParametricModel:
    """A differentiable family phi -> rho(phi).

    ``eval_state`` maps a parameter vector to a :class:`DensityMatrix`;
    ``derivs`` maps it to the list of Hermitian traceless partial
    derivatives d rho / d phi_i.  Analytic derivatives are expected to agree
    with :func:`finite_diff_derivs` within ``tols.deriv_match``.
    """

    param_count: int
    eval_state: callable
    derivs: callable
    name: str = ""

    def validate_at(self, phi, tols: Tolerances = DEFAULT, step: float | None = None) -> float:
        """Check derivative invariants at one point; returns the max-abs
        discrepancy between analytic and finite-difference derivatives."""
        phi = np.asarray(phi, dtype=float)
        ds = self.derivs(phi)
        if len(ds) != self.param_count:
            raise ValidationError("derivs returned wrong number of matrices")
        for d in ds:
            m = np.asarray(d, dtype=complex)
            if np.max(np.abs(m - dag(m))) > tols.sld_residual:
                raise ValidationError("model derivative is not Hermitian")
            if abs(np.trace(m)) > tols.deriv_traceless:
                raise ValidationError("model derivative is not traceless")
        fd = finite_diff_derivs(
            lambda p: self.eval_state(p).entries,
            phi,
            tols.fd_step if step is None else step,
        )
        disc = max(
            np.max(np.abs(np.asarray(a, dtype=complex) - b)) for a, b in zip(ds, fd)
        )
        if disc > tols.deriv_match:
            raise ValidationError(
                f"analytic derivatives disagree with finite differences: {disc:.3e}"
            )
        return disc


def apply_channel(channel: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Apply sum_i K_i rho K_i^dag."""
    if channel.dim_in != rho.dim:
        raise DimensionMismatchError(
            f"channel input dim {channel.dim_in} != state dim {rho.dim}"
        )
    out = np.zeros((channel.dim_out, channel.dim_out), dtype=complex)
    for k in channel.kraus_ops:
        out += k @ rho.entries @ dag(k)
    return DensityMatrix(hermitize(out), rho.tols)


def finite_diff_derivs(model_eval, phi, step: float = DEFAULT.fd_step) -> list:
    """Central finite differences (rho(phi + h e_i) - rho(phi - h e_i)) / 2h.

    ``model_eval`` maps a parameter vector to a plain matrix (or anything
    with ``.entries``).  Outputs are symmetrized to exact Hermiticity.
    """
    if step <= 0:
        raise ValidationError("finite-difference step must be positive")
    phi = np.asarray(phi, dtype=float)

    def as_mat(x):
        return np.asarray(getattr(x, "entries", x), dtype=complex)

    out = []
    for i in range(phi.size):
        e = np.zeros_like(phi)
        e[i] = step
        d = (as_mat(model_eval(phi + e)) - as_mat(model_eval(phi - e))) / (2 * step)
        if not np.all(np.isfinite(d.view(float))):
            raise NumericalFailureError("finite differences produced non-finite entries")
        out.append(hermitize(d))
    return out


def eigh(op, tols: Tolerances = DEFAULT):
    """Deterministic Hermitian eigendecomposition.

    Returns (eigenvalues ascending, eigenvector columns).  Each eigenvector's
    phase is fixed by making its largest-magnitude component real positive,
    so repeated calls on identical input are bitwise identical.
    """
    m = np.asarray(getattr(op, "entries", op), dtype=complex)
    err = np.max(np.abs(m - dag(m)))
    if err > max(tols.hermiticity, 1e-10):
        raise ValidationError(f"eigh input not Hermitian: {err:.3e}")
    w, u = np.linalg.eigh(hermitize(m))
    for k in range(u.shape[1]):
        col = u[:, k]
        idx = int(np.argmax(np.abs(col)))
        ph = col[idx]
        if ph != 0:
            u[:, k] = col * (abs(ph) / ph)
    recon = np.max(np.abs((u * w) @ dag(u) - m))
    if recon > tols.eigh_reconstruction:
        raise NumericalFailureError(f"eigendecomposition reconstruction error {recon:.3e}")
    return w, u
