"""Invariant suite behind `metrocomp selftest`.

Each check prints one pass/fail line; the suite returns True only if every
check passes.  The checks mirror the library-wide invariants: SLD residuals,
Fisher-matrix orderings, additivity, and the oracle equivalences (dilation,
tensor-product dephasing, SDP Holevo bound).
"""

import numpy as np

from .estimation import (
    SldSet,
    classical_fisher,
    compatibility_check,
    model_slds,
    povm_fisher,
    qfi_cr_bound,
    qfi_matrix,
    sld,
)
from .holevo import holevo_bound, qfi_bound_via_minimization, qfi_optimal_x
from .operators import (
    DensityMatrix,
    KrausChannel,
    ParametricModel,
    Povm,
    apply_channel,
    dag,
    eigh,
    finite_diff_derivs,
    hermitize,
)
from .tolerances import DEFAULT

__all__ = ["run_selftest", "CHECKS"]


def _random_density(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = a @ dag(a)
    return DensityMatrix(rho / np.trace(rho).real)


def _random_traceless_herm(rng, n):
    h = hermitize(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return h - (np.trace(h) / n) * np.eye(n)


def _random_model_derivs(rng, rho, p):
    n = rho.dim
    ds = []
    for _ in range(p):
        h = _random_traceless_herm(rng, n)
        d = hermitize(1j * (h @ rho.entries - rho.entries @ h)) + 0.3 * _random_traceless_herm(rng, n)
        d = d - (np.trace(d) / n) * np.eye(n)
        ds.append(d)
    return ds


def check_sld_residuals(rng):
    """SLD defining-equation residual < 1e-8 on random full-rank models."""
    worst = 0.0
    for dim in (2, 3, 4, 5, 6):
        for p in (1, 2, 3):
            rho = _random_density(rng, dim)
            for d in _random_model_derivs(rng, rho, p):
                l = sld(rho, d).entries
                res = np.max(np.abs(0.5 * (l @ rho.entries + rho.entries @ l) - d))
                worst = max(worst, res)
    return worst < DEFAULT.sld_residual, f"max residual {worst:.2e}"


def check_povm_never_beats_qfi(rng):
    """F_classical <= F_Q as matrices for random models and POVMs."""
    worst = 1.0
    for _ in range(8):
        dim = int(rng.integers(2, 5))
        rho = _random_density(rng, dim)
        ds = _random_model_derivs(rng, rho, 2)
        slds = SldSet(tuple(sld(rho, d) for d in ds), dim)
        fq = qfi_matrix(rho, slds)
        model = ParametricModel(
            2,
            lambda phi, r=rho: r,
            lambda phi, d=ds: d,
        )
        # random projective measurement
        h = hermitize(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
        _, u = eigh(h)
        povm = Povm(tuple(np.outer(u[:, k], u[:, k].conj()) for k in range(dim)))
        fc = povm_fisher(model, np.zeros(2), povm)
        gap = np.linalg.eigvalsh(fq.entries - fc.entries)[0]
        worst = min(worst, gap)
    return worst > -1e-8, f"min eig(F_Q - F) = {worst:.2e}"


def check_qfi_additivity(rng):
    """F_Q(rho x rho) = 2 F_Q(rho) with product-rule derivatives."""
    rho = _random_density(rng, 3)
    ds = _random_model_derivs(rng, rho, 2)
    slds = SldSet(tuple(sld(rho, d) for d in ds), 3)
    fq = qfi_matrix(rho, slds)
    eye = np.eye(3)
    rho2 = DensityMatrix(np.kron(rho.entries, rho.entries))
    ds2 = [np.kron(d, rho.entries) + np.kron(rho.entries, d) for d in ds]
    slds2 = SldSet(tuple(sld(rho2, d) for d in ds2), 9)
    fq2 = qfi_matrix(rho2, slds2)
    err = np.max(np.abs(fq2.entries - 2 * fq.entries))
    return err < 1e-8, f"additivity deviation {err:.2e}"


def check_inverse_diagonal_bound(rng):
    """(F^-1)_ii >= 1/F_ii, equality iff the off-diagonal row vanishes."""
    ok = True
    detail = ""
    for _ in range(20):
        p = int(rng.integers(2, 5))
        a = rng.standard_normal((p, p))
        f = a @ a.T + p * np.eye(p)
        finv = np.linalg.inv(f)
        for i in range(p):
            if finv[i, i] < 1.0 / f[i, i] - 1e-10:
                ok = False
                detail = f"violated by {1.0 / f[i, i] - finv[i, i]:.2e}"
    # equality case: diagonal matrix
    d = np.diag(rng.random(3) + 0.5)
    dinv = np.linalg.inv(d)
    eq = max(abs(dinv[i, i] - 1.0 / d[i, i]) for i in range(3))
    if eq > 1e-10:
        ok, detail = False, f"diagonal equality broken {eq:.2e}"
    return ok, detail or "holds on random PSD matrices"


def check_eq13_crosscheck(rng):
    """Explicit eigendecomposition sum equals Tr(rho L_i L_j)."""
    worst = 0.0
    for _ in range(6):
        rho = _random_density(rng, 4)
        ds = _random_model_derivs(rng, rho, 2)
        slds = SldSet(tuple(sld(rho, d) for d in ds), 4)
        fq = qfi_matrix(rho, slds)
        rep = compatibility_check(rho, slds, fq, derivs=ds)
        worst = max(worst, rep.eq13_residual)
    return worst < 1e-8, f"max eq13 residual {worst:.2e}"


def check_channel_preserves_states(rng):
    """apply_channel keeps trace one and positivity."""
    eta = 0.65
    k0 = np.sqrt((1 + eta) / 2) * np.eye(2)
    k1 = np.sqrt((1 - eta) / 2) * np.diag([1.0, -1.0])
    chan = KrausChannel((k0, k1))
    worst_tr, worst_eig = 0.0, 0.0
    for _ in range(10):
        rho = _random_density(rng, 2)
        out = apply_channel(chan, rho)
        worst_tr = max(worst_tr, abs(np.trace(out.entries).real - 1.0))
        worst_eig = min(np.linalg.eigvalsh(out.entries)[0], worst_eig)
    return worst_tr < 1e-12 and worst_eig > -1e-10, (
        f"trace dev {worst_tr:.2e}, min eig {worst_eig:.2e}"
    )


def check_finite_diff_oracle(rng):
    """Analytic model derivatives match central differences."""
    sz = np.diag([1.0, -1.0]).astype(complex)
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)

    def ev(phi):
        u = np.diag(np.exp(1j * phi[0] * np.diag(sz) / 2))
        v = u @ plus
        return DensityMatrix(np.outer(v, v.conj()))

    def dv(phi):
        r = ev(phi).entries
        return [hermitize(1j * (sz / 2 @ r - r @ sz / 2))]

    model = ParametricModel(1, ev, dv)
    worst = 0.0
    for _ in range(10):
        worst = max(worst, model.validate_at(rng.uniform(-2, 2, size=1)))
    return worst < DEFAULT.deriv_match, f"max fd discrepancy {worst:.2e}"


def check_eigh_determinism(rng):
    h = hermitize(rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
    w1, u1 = eigh(h)
    w2, u2 = eigh(h.copy())
    same = np.array_equal(w1, w2) and np.array_equal(u1, u2)
    recon = np.max(np.abs((u1 * w1) @ dag(u1) - h))
    return same and recon < 1e-10, f"bitwise {same}, reconstruction {recon:.2e}"


def check_holevo_ordering(rng):
    """holevo >= qfi bound - tol; equality at weak-commutation models."""
    ok = True
    detail = []
    for _ in range(5):
        rho = _random_density(rng, 3)
        ds = _random_model_derivs(rng, rho, 2)
        slds = SldSet(tuple(sld(rho, d) for d in ds), 3)
        fq = qfi_matrix(rho, slds)
        g = np.eye(2)
        sol = holevo_bound(rho, slds, fq, g)
        qb = qfi_cr_bound(fq, g)
        if sol.value < qb - DEFAULT.holevo_equality:
            ok = False
        trace = sol.objective_trace
        if any(b > a + 1e-12 for a, b in zip(trace, trace[1:])):
            ok = False
            detail.append("objective not monotone")
    return ok, "; ".join(detail) or "ordering and monotonicity hold"


def check_variational_qfi(rng):
    """qfi_bound_via_minimization reproduces Tr(G F_Q^{-1})."""
    worst = 0.0
    for _ in range(5):
        rho = _random_density(rng, 3)
        ds = _random_model_derivs(rng, rho, 2)
        slds = SldSet(tuple(sld(rho, d) for d in ds), 3)
        fq = qfi_matrix(rho, slds)
        g = np.eye(2)
        direct = qfi_cr_bound(fq, g)
        variational = qfi_bound_via_minimization(rho, slds, g)
        worst = max(worst, abs(direct - variational) / abs(direct))
    return worst < 1e-6, f"max relative deviation {worst:.2e}"


def check_lossy_oracle(rng):
    """Block construction equals the beam-splitter dilation for N <= 4."""
    from .lossy import FockProbe, lossy_output
    from .oracles import beamsplitter_dilation_blocks

    worst = 0.0
    for n in (2, 3, 4):
        a = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
        a = a / np.linalg.norm(a)
        st = lossy_output(FockProbe(n, a), 0.41, 0.77)
        oracle = beamsplitter_dilation_blocks(a, 0.41, 0.77)
        worst = max(
            worst,
            max(float(np.max(np.abs(st.blocks[l][1] - oracle[l]))) for l in range(n + 1)),
        )
    return worst < 1e-10, f"max block deviation {worst:.2e}"


def check_dephasing_oracle(rng):
    """Block channel equals the 2^N tensor-product oracle for N <= 6."""
    from .dephasing import SymmetricProbe, dephase_symmetric
    from .oracles import tensor_blocks, tensor_dephasing_state

    worst = 0.0
    for n in (2, 4, 6):
        a = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
        a = a / np.linalg.norm(a)
        st = dephase_symmetric(SymmetricProbe(n, a), 0.7, 0.9)
        full = tensor_dephasing_state(a, 0.7, 0.9)
        blocks, mults, dev = tensor_blocks(full, n)
        worst = max(worst, dev)
        for tj, blk in blocks.items():
            worst = max(worst, float(np.max(np.abs(blk - st.blocks[tj]))))
            if mults[tj] != st.mults[tj]:
                return False, f"multiplicity mismatch at 2j={tj}"
    return worst < 1e-9, f"max deviation {worst:.2e}"


def check_loss_fisher_routes(rng):
    """The three F_eta routes agree for random probes."""
    from .lossy import (
        FockProbe,
        binomial_loss_fisher,
        loss_fisher,
        lossy_model,
        lossy_slds,
    )

    worst = 0.0
    for n in (2, 4):
        for _ in range(3):
            a = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
            a = a / np.linalg.norm(a)
            probe = FockProbe(n, a)
            eta = float(rng.uniform(0.2, 0.9))
            slds = lossy_slds(probe, 0.1, eta)
            fq = qfi_matrix(lossy_model(probe).eval_state([0.1, eta]), slds)
            f0 = loss_fisher(n, eta)
            worst = max(
                worst,
                abs(f0 - binomial_loss_fisher(n, eta)),
                abs(f0 - fq.entries[1, 1]),
            )
    return worst < 1e-8, f"max spread {worst:.2e}"


def check_dephasing_compatibility(rng):
    """|Tr rho L_phi L_eta| vanishes for parity-symmetric probes."""
    from .dephasing import SymmetricProbe, compat_residual

    worst = 0.0
    for n in (2, 4, 6):
        half = rng.standard_normal(n // 2 + 1) + 1j * rng.standard_normal(n // 2 + 1)
        full = np.concatenate([half[::-1], half[1:]])
        full = full / np.linalg.norm(full)
        probe = SymmetricProbe(n, full)
        worst = max(
            worst,
            compat_residual(probe, float(rng.uniform(0.3, 0.95)), float(rng.uniform(0, 6.28))),
        )
    return worst < 1e-10, f"max residual {worst:.2e}"


def check_holevo_sdp_oracle(rng):
    """Descent solver agrees with the SDP oracle on a random 2x2 model."""
    from .oracles import sdp_holevo_bound

    rho = _random_density(rng, 2)
    ds = _random_model_derivs(rng, rho, 2)
    slds = SldSet(tuple(sld(rho, d) for d in ds), 2)
    fq = qfi_matrix(rho, slds)
    g = np.eye(2)
    mine = holevo_bound(rho, slds, fq, g).value
    oracle = sdp_holevo_bound(rho.entries, ds, g)
    rel = abs(mine - oracle) / abs(oracle)
    return rel < 1e-4, f"relative deviation {rel:.2e}"


CHECKS = [
    ("sld-residuals", check_sld_residuals),
    ("povm-vs-qfi-ordering", check_povm_never_beats_qfi),
    ("qfi-additivity", check_qfi_additivity),
    ("inverse-diagonal-bound", check_inverse_diagonal_bound),
    ("eq13-crosscheck", check_eq13_crosscheck),
    ("channel-preserves-states", check_channel_preserves_states),
    ("finite-difference-oracle", check_finite_diff_oracle),
    ("eigh-determinism", check_eigh_determinism),
    ("holevo-ordering", check_holevo_ordering),
    ("variational-qfi", check_variational_qfi),
    ("lossy-dilation-oracle", check_lossy_oracle),
    ("dephasing-tensor-oracle", check_dephasing_oracle),
    ("loss-fisher-routes", check_loss_fisher_routes),
    ("dephasing-compatibility", check_dephasing_compatibility),
    ("holevo-sdp-oracle", check_holevo_sdp_oracle),
]


def run_selftest(seed: int = 0, stream=None) -> bool:
    import sys
    import time

    stream = stream or sys.stdout
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, fn in CHECKS:
        t0 = time.time()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name:28s} {detail} ({time.time() - t0:.2f}s)", file=stream)
    return all_ok
