"""Independent small-scale oracles used to validate the production paths.

Each oracle deliberately takes a different computational route than the
implementation it checks: the interferometer loss is realized by explicit
beam-splitter unitaries on a truncated four-mode Fock space, the collective
dephasing channel by qubit-wise superoperators on the full 2^N space plus a
recursively built Schur basis, and the Holevo bound by a semidefinite
program.
"""

import numpy as np

from .operators import dag, hermitize
from .spin import dim_j

__all__ = [
    "beamsplitter_dilation_blocks",
    "tensor_dephasing_state",
    "schur_basis",
    "tensor_blocks",
    "sdp_holevo_bound",
]


# ---------------------------------------------------------------------------
# lossy interferometer: dilation oracle


def _four_mode_basis(n: int):
    """All (a, b, c, d) occupations with total n, lexicographic order."""
    states = []
    for a_ in range(n + 1):
        for b in range(n + 1 - a_):
            for c in range(n + 1 - a_ - b):
                d = n - a_ - b - c
                states.append((a_, b, c, d))
    return states


def _pair_generator(basis, index, src: int, dst: int) -> np.ndarray:
    """a_src a_dst^dag - a_src^dag a_dst inside the fixed-total sector."""
    dim = len(basis)
    k = np.zeros((dim, dim), dtype=complex)
    for j, t in enumerate(basis):
        if t[src] >= 1:
            s = list(t)
            s[src] -= 1
            s[dst] += 1
            amp = np.sqrt(t[src] * (t[dst] + 1))
            k[index[tuple(s)], j] = amp
    return k - dag(k)


def beamsplitter_dilation_blocks(alpha, phi: float, eta: float):
    """Loss-sector blocks computed via beam-splitter dilation + partial trace.

    The probe sum_k alpha_k |k, N-k> picks up the phase on the first mode,
    then each arm couples to a vacuum ancilla through a beam splitter of
    transmissivity eta (generator i theta (a^dag c - a c^dag) with
    cos theta = sqrt(eta), exponentiated on the truncated Fock space).
    Ancillas are traced out; returns {l: block matrix} over the two-mode
    basis |n1, N-l-n1>, n1 ascending.
    """
    alpha = np.asarray(alpha, dtype=complex)
    n = alpha.shape[0] - 1
    basis = _four_mode_basis(n)
    index = {s: i for i, s in enumerate(basis)}
    dim = len(basis)

    theta = np.arccos(np.sqrt(eta))
    from scipy.linalg import expm

    bs1 = expm(theta * _pair_generator(basis, index, 0, 2))
    bs2 = expm(theta * _pair_generator(basis, index, 1, 3))

    psi = np.zeros(dim, dtype=complex)
    for k in range(n + 1):
        psi[index[(k, n - k, 0, 0)]] = alpha[k] * np.exp(1j * k * phi)
    psi = bs2 @ (bs1 @ psi)

    blocks = {}
    for l in range(n + 1):
        d = n - l + 1
        blk = np.zeros((d, d), dtype=complex)
        for l1 in range(l + 1):
            l2 = l - l1
            for n1 in range(d):
                for n1p in range(d):
                    s = (n1, n - l - n1, l1, l2)
                    t = (n1p, n - l - n1p, l1, l2)
                    blk[n1, n1p] += psi[index[s]] * psi[index[t]].conj()
        blocks[l] = hermitize(blk)
    return blocks


# ---------------------------------------------------------------------------
# collective dephasing: full tensor-product oracle


def tensor_dephasing_state(amps, eta: float, phi: float) -> np.ndarray:
    """Apply the phase + dephasing channel qubit by qubit on the full 2^N space.

    ``amps``: symmetric-sector amplitudes over m = -N/2..N/2 (ascending).
    Returns the full 2^N x 2^N output density matrix.
    """
    amps = np.asarray(amps, dtype=complex)
    n = amps.shape[0] - 1
    psi = dicke_vectors(n) @ amps
    rho = np.outer(psi, psi.conj())
    dim = 2**n
    # per-qubit dephasing: rho -> (1+eta)/2 rho + (1-eta)/2 Z_k rho Z_k
    for k in range(n):
        z = np.array([1.0 if not (i >> (n - 1 - k)) & 1 else -1.0 for i in range(dim)])
        rho = 0.5 * (1 + eta) * rho + 0.5 * (1 - eta) * (z[:, None] * rho * z[None, :])
    # collective phase exp(i phi J_z), J_z = sum sigma_z / 2
    mz = np.array([0.5 * (n - 2 * bin(i).count("1")) for i in range(dim)])
    u = np.exp(1j * phi * mz)
    return u[:, None] * rho * u[None, :].conj()


def dicke_vectors(n: int) -> np.ndarray:
    """Columns: the symmetric-sector states |N/2, m>, m ascending, in 2^N."""
    dim = 2**n
    cols = np.zeros((dim, n + 1), dtype=complex)
    for i in range(dim):
        ones = bin(i).count("1")
        m_idx = n - ones  # m = N/2 - ones, ascending index m + N/2
        cols[i, m_idx] += 1.0
    cols /= np.linalg.norm(cols, axis=0, keepdims=True)
    return cols


def schur_basis(n: int):
    """Recursively coupled angular-momentum basis of the N-qubit space.

    Returns {(2j, path): matrix of shape (2^N, 2j+1)} whose columns are
    |j, m> (m ascending) for one multiplicity copy; paths label the coupling
    history, so the multiplicity bases are aligned across m.
    """
    # seed: one qubit, j = 1/2; |1/2,-1/2> = |1>, |1/2,+1/2> = |0>
    basis = {(1, ()): np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)}
    for k in range(2, n + 1):
        new = {}
        for (tj, path), mat in basis.items():
            jp = tj / 2.0
            dim_in, cols = mat.shape
            for up in (True, False):
                tj_new = tj + 1 if up else tj - 1
                if tj_new < 0 or (tj_new == 0 and k % 2 == 1):
                    continue
                if tj_new < 0:
                    continue
                j_new = tj_new / 2.0
                d_new = tj_new + 1
                out = np.zeros((dim_in * 2, d_new), dtype=complex)
                for col, m in enumerate(np.arange(-j_new, j_new + 0.5)):
                    vec = np.zeros(dim_in * 2, dtype=complex)
                    for mu, qubit in ((0.5, 0), (-0.5, 1)):
                        mp = m - mu
                        if abs(mp) > jp + 1e-9:
                            continue
                        cg = _cg_half(jp, mp, mu, j_new)
                        if cg == 0.0:
                            continue
                        # parent column index for m' ascending
                        pc = int(round(mp + jp))
                        block = np.zeros(dim_in * 2, dtype=complex)
                        # qubit 0 -> |0> (m_qubit = +1/2), qubit 1 -> |1>
                        block.reshape(dim_in, 2)[:, qubit] = mat[:, pc]
                        vec += cg * block
                    out[:, col] = vec
                new[(tj_new, path + ((tj_new,)))] = out
        if not new:
            raise RuntimeError("empty Schur layer")
        basis = new
    return basis


def _cg_half(jp, mp, mu, j_new):
    """<j', m'; 1/2, mu | j_new, m' + mu> for coupling a spin-1/2."""
    m = mp + mu
    if abs(m) > j_new + 1e-9:
        return 0.0
    if abs(j_new - (jp + 0.5)) < 1e-9:
        if mu > 0:
            return np.sqrt((jp + m + 0.5) / (2 * jp + 1))
        return np.sqrt((jp - m + 0.5) / (2 * jp + 1))
    if abs(j_new - (jp - 0.5)) < 1e-9:
        if mu > 0:
            return -np.sqrt((jp - m + 0.5) / (2 * jp + 1))
        return np.sqrt((jp + m + 0.5) / (2 * jp + 1))
    return 0.0


def tensor_blocks(rho_full: np.ndarray, n: int, tol: float = 1e-9):
    """Project a permutation-invariant 2^N density matrix onto Schur blocks.

    Returns ({2j: block (per multiplicity copy)}, {2j: multiplicity},
    max cross-block / cross-copy deviation).  The deviation is the evidence
    that the state really is of the directsum_j rho_j x I_mult form.
    """
    sb = schur_basis(n)
    by_j = {}
    for (tj, path), mat in sb.items():
        by_j.setdefault(tj, []).append(mat)
    blocks = {}
    mults = {}
    worst = 0.0
    keys = sorted(by_j)
    for tj in keys:
        mats = by_j[tj]
        mults[tj] = len(mats)
        ref = None
        for mat in mats:
            blk = dag(mat) @ rho_full @ mat
            if ref is None:
                ref = blk
            else:
                worst = max(worst, float(np.max(np.abs(blk - ref))))
        blocks[tj] = hermitize(ref)
    # cross-block coherences between different (j, path) copies must vanish
    flat = [(tj, m) for tj in keys for m in by_j[tj]]
    for i in range(len(flat)):
        for jdx in range(i + 1, len(flat)):
            cross = dag(flat[i][1]) @ rho_full @ flat[jdx][1]
            worst = max(worst, float(np.max(np.abs(cross))))
    return blocks, mults, worst


# ---------------------------------------------------------------------------
# Holevo bound: semidefinite-programming oracle


def sdp_holevo_bound(rho: np.ndarray, drhos, cost) -> float:
    """Holevo bound by SDP (independent of the descent solver).

    min Tr(G V) over real symmetric V and Hermitian X_i with
    V >= Z(X), Z_ij = Tr(rho X_i X_j), Tr(X_i d_j rho) = delta_ij,
    via the Schur-complement epigraph form in a real Hermitian operator
    basis.  cvxpy is imported lazily.
    """
    import cvxpy as cp

    from .holevo import hermitian_basis

    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    basis = hermitian_basis(n)
    nb = n * n
    rba = np.einsum("ij,ajk->aik", rho, basis).reshape(nb, nb)
    bt = basis.transpose(0, 2, 1).reshape(nb, nb)
    q = rba @ bt.T
    w, u = np.linalg.eigh(0.5 * (q + q.conj().T))
    w = np.clip(w, 0.0, None)
    keep = w > 1e-12 * max(w.max(), 1.0)
    r = np.sqrt(w[keep])[:, None] * dag(u)[keep]
    flatb = basis.reshape(nb, nb)
    a = np.array(
        [(flatb.conj() @ np.asarray(d, dtype=complex).reshape(-1)).real for d in drhos]
    )
    p = len(drhos)
    g = np.asarray(cost, dtype=float)
    xc = cp.Variable((nb, p))
    v = cp.Variable((p, p), symmetric=True)
    rx = r @ xc
    cons = [
        cp.bmat([[v, rx.H], [rx, np.eye(r.shape[0])]]) >> 0,
        a @ xc == np.eye(p),
    ]
    prob = cp.Problem(cp.Minimize(cp.trace(g @ v)), cons)
    for solver, kwargs in (("CLARABEL", {}), ("SCS", {"max_iters": 200000, "eps": 1e-10})):
        try:
            prob.solve(solver=solver, **kwargs)
            if prob.value is not None and np.isfinite(prob.value):
                return float(prob.value)
        except Exception:
            continue
    raise RuntimeError("no SDP solver produced a value")
