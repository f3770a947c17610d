"""Symmetric lossy interferometer over fixed-photon-number inputs.

Input |psi> = sum_k alpha_k |k, N-k>; equal transmissivity eta in both arms.
The output density matrix is block diagonal in the total number of lost
photons l; block l lives on the two-mode Fock basis |n, N-l-n>, n = 0..N-l
(ordered lexicographically by upper-arm count).  Within a block the
subnormalized vectors |psi_{l1, l-l1}> are in general not orthogonal.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .errors import ValidationError
from .estimation import FisherMatrix, SldSet, classical_fisher, qfi_matrix, sld
from .operators import DensityMatrix, HermitianOperator, ParametricModel, Povm, hermitize
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "FockProbe",
    "LossBlockState",
    "lossy_output",
    "loss_derivative_structure",
    "loss_fisher",
    "loss_block_povm",
    "lossy_model",
    "lossy_slds",
    "lossy_phase_qfi",
    "phase_qfi_blockwise",
    "noon_probe",
    "optimize_phase_probe",
    "block_offsets",
]


@dataclass(frozen=True)
class FockProbe:
    """Two-mode N-photon input state, amplitudes alpha_0..alpha_N."""

    n_photons: int
    alpha: np.ndarray

    def __post_init__(self):
        if self.n_photons < 1:
            raise ValidationError("need at least one photon")
        a = np.asarray(self.alpha, dtype=complex).reshape(-1)
        if a.shape[0] != self.n_photons + 1:
            raise ValidationError("alpha must have N+1 components")
        norm = np.linalg.norm(a)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"probe not normalized: |alpha| = {norm}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)


@dataclass(frozen=True)
class LossBlockState:
    """Loss-sector decomposition: blocks[l] = (vectors, block density)."""

    n_photons: int
    eta: float
    phi: float
    blocks: dict = field(repr=False)

    def sector_weights(self) -> np.ndarray:
        return np.array(
            [np.trace(self.blocks[l][1]).real for l in range(self.n_photons + 1)]
        )

    def total_trace(self) -> float:
        return float(self.sector_weights().sum())


def _b_coeff(n, k, l1, l2, eta):
    return comb(k, l1) * comb(n - k, l2) * eta ** (n - l1 - l2) * (1 - eta) ** (l1 + l2)


def lossy_output(probe: FockProbe, phi: float, eta: float) -> LossBlockState:
    """Propagate the probe through phase phi and balanced loss eta."""
    if not 0.0 < eta < 1.0:
        raise ValidationError(f"transmissivity must lie in (0, 1), got {eta}")
    n = probe.n_photons
    alpha = probe.alpha
    blocks = {}
    for l in range(n + 1):
        dim = n - l + 1
        vecs = []
        for l1 in range(l + 1):
            l2 = l - l1
            v = np.zeros(dim, dtype=complex)
            for k in range(l1, n - l2 + 1):
                v[k - l1] = alpha[k] * np.exp(1j * k * phi) * np.sqrt(
                    _b_coeff(n, k, l1, l2, eta)
                )
            vecs.append(v)
        rho_l = sum(np.outer(v, v.conj()) for v in vecs)
        blocks[l] = (vecs, hermitize(rho_l))
    state = LossBlockState(n, eta, phi, blocks)
    if abs(state.total_trace() - 1.0) > DEFAULT.trace_one:
        raise ValidationError("loss blocks do not sum to unit trace")
    return state


def loss_derivative_structure(state: LossBlockState) -> np.ndarray:
    """Per-sector scalars c_{N,l} = (N-l)/eta - l/(1-eta).

    d rho / d eta is the direct sum of c_{N,l} times the sector blocks, so
    eta only drives the sector weights ("classical" evolution).
    """
    n, eta = state.n_photons, state.eta
    l = np.arange(n + 1, dtype=float)
    return (n - l) / eta - l / (1 - eta)


def loss_fisher(n_photons: int, eta: float) -> float:
    """QFI for eta: N / (eta (1 - eta)), independent of the input state."""
    if not 0.0 < eta < 1.0:
        raise ValidationError(f"transmissivity must lie in (0, 1), got {eta}")
    return n_photons / (eta * (1.0 - eta))


def binomial_loss_fisher(n_photons: int, eta: float) -> float:
    """Classical Fisher information of P(l|eta) = C(N,l) eta^(N-l) (1-eta)^l."""
    l = np.arange(n_photons + 1)
    p = comb(n_photons, l) * eta ** (n_photons - l) * (1 - eta) ** l
    dp = p * ((n_photons - l) / eta - l / (1 - eta))
    return float(classical_fisher(p, dp[None, :]).entries[0, 0])


def block_offsets(n_photons: int):
    """Start offsets of each loss sector in the assembled direct-sum space."""
    offs = []
    pos = 0
    for l in range(n_photons + 1):
        offs.append(pos)
        pos += n_photons - l + 1
    return offs, pos


def assemble(state: LossBlockState) -> np.ndarray:
    """Direct-sum matrix over all loss sectors."""
    offs, total = block_offsets(state.n_photons)
    out = np.zeros((total, total), dtype=complex)
    for l in range(state.n_photons + 1):
        o = offs[l]
        d = state.n_photons - l + 1
        out[o : o + d, o : o + d] = state.blocks[l][1]
    return out


def loss_block_povm(n_photons: int, tols: Tolerances = DEFAULT) -> Povm:
    """Projectors onto the constant-total-loss sectors."""
    offs, total = block_offsets(n_photons)
    els = []
    for l in range(n_photons + 1):
        p = np.zeros((total, total), dtype=complex)
        o = offs[l]
        d = n_photons - l + 1
        p[o : o + d, o : o + d] = np.eye(d)
        els.append(p)
    return Povm(tuple(els), tols)


def lossy_model(probe: FockProbe, tols: Tolerances = DEFAULT) -> ParametricModel:
    """ParametricModel over (phi, eta) on the assembled direct-sum space.

    Derivatives are analytic: the phase derivative multiplies amplitude k by
    ik before loss, and d rho/d eta = directsum_l c_{N,l} rho_l.
    """
    n = probe.n_photons

    def ev(p):
        return DensityMatrix(assemble(lossy_output(probe, p[0], p[1])), tols)

    def dv(p):
        state = lossy_output(probe, p[0], p[1])
        offs, total = block_offsets(n)
        dphi = np.zeros((total, total), dtype=complex)
        for l in range(n + 1):
            o = offs[l]
            d = n - l + 1
            vecs = state.blocks[l][0]
            acc = np.zeros((d, d), dtype=complex)
            for l1, v in enumerate(vecs):
                # d/dphi |psi_{l1,l2}> = i (N1 + l1) |psi_{l1,l2}>
                kvals = np.arange(d) + l1
                dvec = 1j * kvals * v
                acc += np.outer(dvec, v.conj()) + np.outer(v, dvec.conj())
            dphi[o : o + d, o : o + d] = acc
        c = loss_derivative_structure(state)
        deta = np.zeros((total, total), dtype=complex)
        for l in range(n + 1):
            o = offs[l]
            d = n - l + 1
            deta[o : o + d, o : o + d] = c[l] * state.blocks[l][1]
        return [hermitize(dphi), hermitize(deta)]

    return ParametricModel(2, ev, dv, f"lossy-N{n}")


def lossy_slds(probe: FockProbe, phi: float, eta: float, tols: Tolerances = DEFAULT) -> SldSet:
    """SLDs in the natural gauge of this model.

    L_phi comes from the generic support formula (it is block diagonal in l);
    L_eta = directsum_l c_{N,l} Pi_l, the weighted sum of sector projectors,
    which satisfies the SLD equation and commutes with L_phi at the operator
    level (the paper's explicit construction).
    """
    model = lossy_model(probe, tols)
    p = np.array([phi, eta])
    rho = model.eval_state(p)
    dphi, _ = model.derivs(p)
    l_phi = sld(rho, dphi, tols)
    offs, total = block_offsets(probe.n_photons)
    state = lossy_output(probe, phi, eta)
    c = loss_derivative_structure(state)
    l_eta = np.zeros((total, total), dtype=complex)
    for l in range(probe.n_photons + 1):
        o = offs[l]
        d = probe.n_photons - l + 1
        l_eta[o : o + d, o : o + d] = c[l] * np.eye(d)
    w = np.linalg.eigvalsh(rho.entries)
    rank = int(np.sum(w > tols.p_floor_rel * w[-1]))
    return SldSet((l_phi, HermitianOperator(l_eta, tols)), rank)


def lossy_phase_qfi(probe: FockProbe, phi: float, eta: float, tols: Tolerances = DEFAULT):
    """(QFI matrix, phase-phase entry) for the lossy model at (phi, eta)."""
    model = lossy_model(probe, tols)
    p = np.array([phi, eta])
    rho = model.eval_state(p)
    slds = lossy_slds(probe, phi, eta, tols)
    fq = qfi_matrix(rho, slds, tols)
    return fq, float(fq.entries[0, 0])


def phase_qfi_blockwise(probe: FockProbe, eta: float, tols: Tolerances = DEFAULT) -> float:
    """Phase QFI summed over loss sectors (fast path for probe optimization).

    Identical to the (phi, phi) entry of the assembled-model QFI; restricting
    the SLD solve to each sector exploits the block structure.
    """
    n = probe.n_photons
    state = lossy_output(probe, 0.0, eta)
    total = 0.0
    for l in range(n + 1):
        vecs, rho_l = state.blocks[l]
        d = n - l + 1
        acc = np.zeros((d, d), dtype=complex)
        for l1, v in enumerate(vecs):
            kvals = np.arange(d) + l1
            dvec = 1j * kvals * v
            acc += np.outer(dvec, v.conj()) + np.outer(v, dvec.conj())
        w, u = np.linalg.eigh(rho_l)
        floor = tols.p_floor_rel * max(w[-1], 1e-300)
        d_eig = u.conj().T @ acc @ u
        denom = w[:, None] + w[None, :]
        mask = denom > floor
        l_eig = np.zeros_like(d_eig)
        l_eig[mask] = 2.0 * d_eig[mask] / denom[mask]
        rho_eig = np.diag(w.astype(complex))
        total += np.trace(rho_eig @ l_eig @ l_eig).real
    return float(total)


def noon_probe(n_photons: int) -> FockProbe:
    a = np.zeros(n_photons + 1, dtype=complex)
    a[0] = a[-1] = 1.0 / np.sqrt(2.0)
    return FockProbe(n_photons, a)


def optimize_phase_probe(
    n_photons: int, eta: float, restarts: int = 8, seed: int = 0, tols: Tolerances = DEFAULT
):
    """Maximize the phase QFI over real probe amplitudes.

    Returns (probe, qfi_phase).  Derivative-free simplex search with seeded
    restarts; amplitudes are taken nonnegative (optimal probes of this model
    can be chosen with nonnegative real amplitudes).
    """
    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    n = n_photons

    def neg_qfi(v):
        a = np.abs(v) + 1e-12
        a = a / np.linalg.norm(a)
        return -phase_qfi_blockwise(FockProbe(n, a.astype(complex)), eta, tols)

    k = np.arange(n + 1)
    starts = [
        np.ones(n + 1),
        np.sin(np.pi * (k + 1) / (n + 2)),
        noon_probe(n).alpha.real + 0.05,
    ]
    starts += [rng.random(n + 1) + 0.1 for _ in range(max(restarts - len(starts), 0))]
    best = None
    for v0 in starts:
        res = minimize(neg_qfi, v0, method="Nelder-Mead",
                       options={"maxiter": 8000, "xatol": 1e-11, "fatol": 1e-13})
        if best is None or res.fun < best.fun:
            best = res
    # coordinate-descent polish
    v = np.abs(best.x)
    f = best.fun
    for _ in range(40):
        moved = False
        for i in range(n + 1):
            base = v[i]
            for scale in (0.3, 0.1, 0.03, 0.01, 0.003):
                for sgn in (1.0, -1.0):
                    trial = v.copy()
                    trial[i] = max(base + sgn * scale * (abs(base) + 0.1), 0.0)
                    ft = neg_qfi(trial)
                    if ft < f - 1e-13:
                        v, f, moved = trial, ft, True
        if not moved:
            break
    a = np.abs(v) + 1e-12
    a = a / np.linalg.norm(a)
    return FockProbe(n, a.astype(complex)), -f
