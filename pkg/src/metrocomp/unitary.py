"""Multiparameter unitary estimation: Hamiltonian compatibility structure,
optimal probes, the extremal-eigenvector criterion, spin rotation models,
the spin-1 measurement, and N-qubit collective rotation evaluations.

Convention: the QFI is always the SLD-based Tr(rho L^2) form, which for a
pure probe and generator H equals 4 Var(H).  With that convention the spin-1
orthogonal-axes model gives QFI = diag(4, 4) and precision 1/4 per angle,
and even-N Dicke probes give N^2/2 + N per angle.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .errors import ValidationError
from .operators import (
    DensityMatrix,
    HermitianOperator,
    ParametricModel,
    Povm,
    dag,
    eigh,
    hermitize,
)
from .estimation import FisherMatrix
from .spin import (
    axis_operator,
    check_spin,
    dim_j,
    expm_hermitian,
    m_values,
    spin_x,
    spin_y,
    spin_z,
)
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "HamiltonianSet",
    "SpinRotationModel",
    "EigstructureReport",
    "unitary_output",
    "pure_sld",
    "pure_state_qfi",
    "projective_fisher_pure",
    "hamiltonian_compat_matrix",
    "optimal_probe",
    "eigstructure_check",
    "rotated_extremal_expansion",
    "spin1_measurement",
    "sequential_generator",
    "collective_rotation_fi",
    "unitary_model",
]


@dataclass(frozen=True)
class HamiltonianSet:
    """Generators H_k, shifted so the extremal eigenvalues are +/- lambda_k."""

    generators: tuple
    phi_point: np.ndarray = field(default=None)

    def __post_init__(self):
        gens = []
        for h in self.generators:
            m = np.asarray(getattr(h, "entries", h), dtype=complex)
            w = np.linalg.eigvalsh(hermitize(m))
            shift = 0.5 * (w[0] + w[-1])
            gens.append(HermitianOperator(m - shift * np.eye(m.shape[0])))
        object.__setattr__(self, "generators", tuple(gens))
        phi = self.phi_point
        if phi is None:
            phi = np.zeros(len(gens))
        object.__setattr__(self, "phi_point", np.asarray(phi, dtype=float))
        if self.phi_point.shape != (len(gens),):
            raise ValidationError("phi_point length must match generator count")

    @property
    def param_count(self) -> int:
        return len(self.generators)

    @property
    def dim(self) -> int:
        return self.generators[0].dim

    def lambdas(self) -> np.ndarray:
        """Extremal eigenvalue magnitudes after the symmetric shift."""
        return np.array(
            [np.linalg.eigvalsh(g.entries)[-1] for g in self.generators]
        )


@dataclass(frozen=True)
class SpinRotationModel:
    """Spin-j particle rotated about two axes separated by angle alpha."""

    j: float
    n1: np.ndarray
    n2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "j", check_spin(self.j))
        n1 = np.asarray(self.n1, dtype=float)
        n2 = np.asarray(self.n2, dtype=float)
        for n in (n1, n2):
            if abs(np.linalg.norm(n) - 1.0) > 1e-12:
                raise ValidationError("rotation axes must be unit vectors")
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n2", n2)

    @staticmethod
    def from_angle(j, alpha: float) -> "SpinRotationModel":
        """Canonical model: n1 = z, n2 tilted by alpha in the x-z plane."""
        return SpinRotationModel(
            j, np.array([0.0, 0.0, 1.0]), np.array([np.sin(alpha), 0.0, np.cos(alpha)])
        )

    @property
    def alpha(self) -> float:
        return float(np.arccos(np.clip(self.n1 @ self.n2, -1.0, 1.0)))

    @property
    def dim(self) -> int:
        return dim_j(self.j)

    def hamiltonians(self) -> HamiltonianSet:
        return HamiltonianSet(
            (axis_operator(self.n1, self.j), axis_operator(self.n2, self.j))
        )


@dataclass(frozen=True)
class EigstructureReport:
    xi_vectors: tuple
    orthonormality_residual: float
    overlap_with_psi: float
    minus_residual: float
    satisfied: bool
    degenerate: bool

    @property
    def residual(self) -> float:
        return max(self.orthonormality_residual, self.overlap_with_psi, self.minus_residual)


def unitary_output(hset: HamiltonianSet, phi, probe, tols: Tolerances = DEFAULT):
    """Evolve |psi> by exp(i sum_k H_k phi_k); return (state, derivative vectors).

    At phi = 0 the derivatives are the exact i H_k |psi>; away from zero they
    are central finite differences of the matrix exponential (the
    symmetrized-generator construction is out of scope).
    """
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(probe, dtype=complex).reshape(-1)
    if psi.shape[0] != hset.dim:
        raise ValidationError("probe dimension does not match generators")
    psi = psi / np.linalg.norm(psi)
    gens = [g.entries for g in hset.generators]

    def evolve(p):
        h = sum(pk * g for pk, g in zip(p, gens))
        return expm_hermitian(h, 1j) @ psi

    out = evolve(phi)
    if np.allclose(phi, 0.0):
        derivs = [1j * g @ psi for g in gens]
    else:
        h = tols.fd_step
        derivs = []
        for i in range(len(gens)):
            e = np.zeros_like(phi)
            e[i] = h
            derivs.append((evolve(phi + e) - evolve(phi - e)) / (2 * h))
    return out, derivs


def pure_sld(psi, dpsi, tols: Tolerances = DEFAULT) -> HermitianOperator:
    """SLD of a pure-state family: L = 2(|dpsi><psi| + |psi><dpsi|)."""
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValidationError("psi must be normalized")
    d = np.asarray(dpsi, dtype=complex).reshape(-1)
    return HermitianOperator(2.0 * (np.outer(d, v.conj()) + np.outer(v, d.conj())), tols)


def pure_state_qfi(psi, dpsis) -> FisherMatrix:
    """QFI matrix of a pure family, 4 Re(<dpsi_i|dpsi_j> - <dpsi_i|psi><psi|dpsi_j>)."""
    v = np.asarray(psi, dtype=complex).reshape(-1)
    p = len(dpsis)
    f = np.zeros((p, p))
    for i in range(p):
        di = np.asarray(dpsis[i], dtype=complex)
        for j in range(i, p):
            dj = np.asarray(dpsis[j], dtype=complex)
            val = 4.0 * (np.vdot(di, dj) - np.vdot(di, v) * np.vdot(v, dj)).real
            f[i, j] = f[j, i] = val
    return FisherMatrix(f, "quantum")


def hamiltonian_compat_matrix(psi, hset: HamiltonianSet) -> np.ndarray:
    """M_ij = <psi| (<H_i> - H_i)(<H_j> - H_j) |psi> at phi = 0.

    Off-diagonals must vanish for compatibility; the diagonal is Var(H_i).
    Equals Tr(rho L_i L_j)/4 with the pure-state SLDs.
    """
    v = np.asarray(psi, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    p = hset.param_count
    m = np.zeros((p, p), dtype=complex)
    centered = []
    for g in hset.generators:
        h = g.entries
        mean = np.vdot(v, h @ v).real
        centered.append((h - mean * np.eye(h.shape[0])) @ v)
    for i in range(p):
        for j in range(p):
            m[i, j] = np.vdot(centered[i], centered[j])
    return m


def optimal_probe(h, tols: Tolerances = DEFAULT):
    """Equal superposition of the extremal eigenvectors of h.

    Returns (state, degenerate_flag).  The phase convention is inherited from
    the deterministic eigendecomposition; with degenerate extremal
    eigenspaces one canonical eigenvector is picked and the flag is set.
    """
    m = np.asarray(getattr(h, "entries", h), dtype=complex)
    w, u = eigh(m, tols)
    span = w[-1] - w[0]
    gap_tol = 1e-10 * max(span, 1.0)
    degenerate = bool(w[1] - w[0] < gap_tol or w[-1] - w[-2] < gap_tol)
    psi = (u[:, 0] + u[:, -1]) / np.sqrt(2.0)
    return psi, degenerate


def _phase_aligned(vec, psi):
    """Rotate vec so that <psi|vec> is real positive (when nonzero)."""
    ov = np.vdot(psi, vec)
    if abs(ov) < 1e-14:
        return vec
    return vec * (abs(ov) / ov)


def eigstructure_check(
    psi, hset: HamiltonianSet, tol: float = DEFAULT.compat, phase_grid: int = 64
) -> EigstructureReport:
    """Test the extremal-eigenvector structure required for compatibility.

    For each generator the extremal eigenvectors must take the form
    |+/-}_i = (|psi> +/- |xi_i>)/sqrt(2) with <xi_i|xi_j> = delta_ij and
    <psi|xi_i> = 0.  Eigenvector phases are free, so per generator the check
    scans a phase grid (plus the analytic overlap alignment) and keeps the
    phase minimizing the per-generator residual before the cross-generator
    orthonormality is evaluated.
    """
    v = np.asarray(psi, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    xis = []
    minus_residual = 0.0
    overlap_res = 0.0
    degenerate = False
    for g in hset.generators:
        w, u = eigh(g.entries)
        span = w[-1] - w[0]
        gap_tol = 1e-10 * max(span, 1.0)
        if w[1] - w[0] < gap_tol or w[-1] - w[-2] < gap_tol:
            degenerate = True
        vp_raw, vm_raw = u[:, -1], u[:, 0]
        candidates = [np.exp(2j * np.pi * t / phase_grid) for t in range(phase_grid)]
        best = None
        for ph_list in (["aligned"], candidates):
            for ph in ph_list:
                vp = _phase_aligned(vp_raw, v) if ph == "aligned" else vp_raw * ph
                xi = np.sqrt(2.0) * vp - v
                # best minus-phase is analytic: align |-> with (psi - xi)/sqrt2
                target = (v - xi) / np.sqrt(2.0)
                ov = np.vdot(vm_raw, target)
                vm = vm_raw * (ov / abs(ov)) if abs(ov) > 1e-14 else vm_raw
                res = max(
                    abs(np.vdot(v, xi)),
                    abs(np.linalg.norm(xi) - 1.0),
                    np.linalg.norm(vm - target),
                )
                if best is None or res < best[0]:
                    best = (res, xi)
        xis.append(best[1])
        overlap_res = max(overlap_res, abs(np.vdot(v, best[1])))
        minus_residual = max(minus_residual, best[0])
    p = len(xis)
    ortho = 0.0
    for i in range(p):
        for j in range(p):
            target = 1.0 if i == j else 0.0
            ortho = max(ortho, abs(np.vdot(xis[i], xis[j]) - target))
    satisfied = bool(max(ortho, overlap_res, minus_residual) < tol)
    return EigstructureReport(
        xi_vectors=tuple(xis),
        orthonormality_residual=float(ortho),
        overlap_with_psi=float(overlap_res),
        minus_residual=float(minus_residual),
        satisfied=satisfied,
        degenerate=degenerate,
    )


def rotated_extremal_expansion(model: SpinRotationModel):
    """Coefficients of |+j>_{n2} and |-j>_{n2} in the |m>_{n1} basis.

    Convention: at alpha = 0 the '+' expansion has its single unit
    coefficient at m = +j (cos term).  Components are indexed by m ascending.
    Cross-validated against the matrix-exponential rotation oracle in tests
    (per-component magnitudes; overall phases are conventional).
    """
    j = model.j
    alpha = model.alpha
    m = m_values(j)
    c = np.sqrt(comb(int(round(2 * j)), (j + m).round().astype(int)))
    half = alpha / 2.0
    plus = c * np.cos(half) ** (j + m) * np.sin(half) ** (j - m)
    minus = c * ((-1.0) ** ((j + m).round())) * np.sin(half) ** (j + m) * np.cos(half) ** (j - m)
    return plus.astype(complex), minus.astype(complex)


def spin1_measurement(tols: Tolerances = DEFAULT) -> Povm:
    """The three projectors saturating the spin-1 orthogonal-axes model.

    In the n1 eigenbasis (m ascending: -1, 0, +1):
    Pi_1 on (|+1> + |-1>)/sqrt2, Pi_2 on (|+1> - |-1>)/sqrt2, Pi_3 the rest.
    """
    e_m, e_0, e_p = np.eye(3, dtype=complex)
    v1 = (e_p + e_m) / np.sqrt(2.0)
    v2 = (e_p - e_m) / np.sqrt(2.0)
    p1 = np.outer(v1, v1.conj())
    p2 = np.outer(v2, v2.conj())
    return Povm((p1, p2, np.eye(3) - p1 - p2), tols)


def sequential_generator(hset: HamiltonianSet, phi, i: int) -> HermitianOperator:
    """Effective Hermitian generator of the i-th parameter when the unitaries
    act sequentially, U = prod_k exp(i H_k phi_k) (k = 0 applied last).

    Returns G_i with d_i U = i U G_i, i.e. the input-frame form
    (prod_{k>=i} E_k)^dag H_i (prod_{k>=i} E_k); reduces to H_i at phi = 0.
    """
    phi = np.asarray(phi, dtype=float)
    p = hset.param_count
    if not 0 <= i < p:
        raise ValidationError(f"parameter index {i} out of range")
    tail = np.eye(hset.dim, dtype=complex)
    for k in range(i, p):
        tail = tail @ expm_hermitian(hset.generators[k].entries, 1j * phi[k])
    return HermitianOperator(hermitize(dag(tail) @ hset.generators[i].entries @ tail))


def _ghz_state(j: int) -> np.ndarray:
    """(|j,j> + i |j,-j>)/sqrt2 in the generator-1 eigenbasis.

    The i relative phase keeps the transverse variance at its generic value
    for all N (the unphased superposition hits the special fully-compatible
    point at N = 2, where both parameters reach the Heisenberg value).
    """
    d = dim_j(j)
    v = np.zeros(d, dtype=complex)
    v[-1] = 1.0 / np.sqrt(2.0)
    v[0] = 1j / np.sqrt(2.0)
    return v


def collective_rotation_fi(
    n_qubits: int, probe_family, tols: Tolerances = DEFAULT
) -> FisherMatrix:
    """Two-parameter QFI for N qubits under rotations about orthogonal axes,
    evaluated in the symmetric spin-(N/2) representation at phi = 0.

    ``probe_family``: "GHZ" (superposition of extremal n1 eigenstates),
    "Dicke" (m = 0 state along the axis orthogonal to both rotation axes;
    even N only), or an explicit amplitude vector over m = -N/2..N/2 in the
    z basis.  Axes: n1 = x, n2 = y.
    """
    if n_qubits < 1:
        raise ValidationError("need at least one qubit")
    j = n_qubits / 2.0
    h1 = spin_x(j)
    h2 = spin_y(j)
    if isinstance(probe_family, str):
        fam = probe_family.lower()
        if fam == "ghz":
            # eigenbasis of S_x, ascending; extremal columns
            _, u = eigh(h1, tols)
            psi = u @ _ghz_state(j)
        elif fam == "dicke":
            if n_qubits % 2 == 1:
                raise ValidationError("Dicke probe requires even N")
            psi = np.zeros(dim_j(j), dtype=complex)
            psi[int(round(j))] = 1.0  # |j, m=0> along z
        else:
            raise ValidationError(f"unknown probe family {probe_family!r}")
    else:
        psi = np.asarray(probe_family, dtype=complex).reshape(-1)
        if psi.shape[0] != dim_j(j):
            raise ValidationError("custom probe has wrong dimension")
        psi = psi / np.linalg.norm(psi)
    dpsis = [1j * h1 @ psi, 1j * h2 @ psi]
    return pure_state_qfi(psi, dpsis)


def projective_fisher_pure(psi, dpsis, povm: Povm, tols: Tolerances = DEFAULT) -> FisherMatrix:
    """Classical Fisher matrix of a POVM on a pure family, amplitude level.

    Probabilities are assembled from overlaps with the POVM elements'
    eigenvectors, p = sum_k lambda_k |<u_k|psi>|^2, which avoids the
    catastrophic cancellation of the trace formula when outcome
    probabilities vanish quadratically (the measurement-at-the-optimal-point
    situation).  Same contract as povm_fisher otherwise.
    """
    from .estimation import classical_fisher

    v = np.asarray(psi, dtype=complex).reshape(-1)
    probs = []
    dprobs = [[] for _ in dpsis]
    for e in povm.elements:
        lam, u = eigh(e, tols)
        keep = lam > 1e-14
        amps = dag(u[:, keep]) @ v
        probs.append(float(np.sum(lam[keep] * np.abs(amps) ** 2)))
        for i, dpsi in enumerate(dpsis):
            damps = dag(u[:, keep]) @ np.asarray(dpsi, dtype=complex)
            dprobs[i].append(float(2.0 * np.sum(lam[keep] * (amps.conj() * damps).real)))
    return classical_fisher(np.array(probs), np.array(dprobs), tols)


def unitary_model(hset: HamiltonianSet, probe, tols: Tolerances = DEFAULT) -> ParametricModel:
    """Wrap a unitary evolution as a ParametricModel (pure output states)."""
    psi = np.asarray(probe, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    gens = [g.entries for g in hset.generators]

    def ev(phi):
        h = sum(pk * g for pk, g in zip(phi, gens))
        v = expm_hermitian(h, 1j) @ psi
        return DensityMatrix(np.outer(v, v.conj()), tols)

    def dv(phi):
        v, dvs = unitary_output(hset, phi, psi, tols)
        out = []
        for d in dvs:
            # remove the spurious norm component (finite-difference noise)
            d = d - np.vdot(v, d).real * v
            out.append(hermitize(np.outer(d, v.conj()) + np.outer(v, d.conj())))
        return out

    return ParametricModel(hset.param_count, ev, dv, "unitary")
