import numpy as np
import pytest

from metrocomp import (
    DensityMatrix,
    SldSet,
    equality_iff_commutation_test,
    holevo_bound,
    qfi_bound_via_minimization,
    qfi_cr_bound,
    qfi_matrix,
    qfi_optimal_x,
    sld,
)
from metrocomp.holevo import _setup, _coeffs, hermitian_basis
from metrocomp.operators import dag, hermitize
from metrocomp.oracles import sdp_holevo_bound


def random_density(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = a @ dag(a)
    return DensityMatrix(rho / np.trace(rho).real)


def random_derivs(rng, rho, p):
    n = rho.dim
    out = []
    for _ in range(p):
        h = hermitize(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        d = hermitize(1j * (h @ rho.entries - rho.entries @ h)) + 0.3 * hermitize(
            rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        )
        d -= (np.trace(d) / n) * np.eye(n)
        out.append(d)
    return out


def make_slds(rho, ds):
    return SldSet(tuple(sld(rho, d) for d in ds), rho.dim)


def classical_mixing_model(rng, n=3):
    """Random model where the second parameter only drives eigenvalues
    (weak commutation holds by the classical-evolution argument)."""
    h = hermitize(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    a = rng.standard_normal(n)
    b = rng.standard_normal(n)
    eta0 = 0.3

    def probs(eta):
        z = np.exp(a + b * eta)
        return z / z.sum()

    p = probs(eta0)
    dp = probs(eta0 + 5e-7) - probs(eta0 - 5e-7)
    dp = dp / 1e-6
    basis = q  # columns
    rho = basis @ np.diag(p) @ dag(basis)
    dphi = 1j * (h @ rho - rho @ h)
    deta = basis @ np.diag(dp) @ dag(basis)
    deta -= (np.trace(deta) / n) * np.eye(n)
    return DensityMatrix(hermitize(rho)), [hermitize(dphi), hermitize(deta)]


def spin_half_two_axis():
    sx = np.array([[0, 1], [1, 0]], dtype=complex) / 2
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
    psi = np.array([1.0, (1.0 + 1.0j) / 2.0], dtype=complex)
    psi = psi / np.linalg.norm(psi)
    rho = DensityMatrix(np.outer(psi, psi.conj()))
    ds = [hermitize(1j * (h @ rho.entries - rho.entries @ h)) for h in (sx, sy)]
    return rho, ds


# ---------------------------------------------------------------------------
# qfi_optimal_x


def test_optimal_x_single_parameter():
    rng = np.random.default_rng(0)
    rho = random_density(rng, 3)
    ds = random_derivs(rng, rho, 1)
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    x = qfi_optimal_x(fq, slds)
    assert np.max(np.abs(x[0].entries - slds.slds[0].entries / fq.entries[0, 0])) < 1e-10


def test_optimal_x_diagonal_fisher():
    # orthogonal-support construction gives diagonal F_Q exactly
    rho = DensityMatrix(np.diag([0.4, 0.3, 0.2, 0.1]))
    d1 = np.zeros((4, 4), dtype=complex)
    d1[0, 1] = d1[1, 0] = 0.2
    d2 = np.zeros((4, 4), dtype=complex)
    d2[2, 3] = d2[3, 2] = 0.1
    slds = make_slds(rho, [d1, d2])
    fq = qfi_matrix(rho, slds)
    assert abs(fq.entries[0, 1]) < 1e-12
    x = qfi_optimal_x(fq, slds)
    for i in range(2):
        assert (
            np.max(np.abs(x[i].entries - slds.slds[i].entries / fq.entries[i, i])) < 1e-10
        )


def test_optimal_x_satisfies_constraints():
    rng = np.random.default_rng(1)
    for _ in range(5):
        rho = random_density(rng, 3)
        ds = random_derivs(rng, rho, 2)
        slds = make_slds(rho, ds)
        fq = qfi_matrix(rho, slds)
        xs = qfi_optimal_x(fq, slds)
        for i, x in enumerate(xs):
            for j, d in enumerate(ds):
                target = 1.0 if i == j else 0.0
                assert abs(np.trace(x.entries @ d).real - target) < 1e-8


def test_optimal_x_value_matches_qfi_bound():
    rng = np.random.default_rng(2)
    rho = random_density(rng, 2)
    ds = random_derivs(rng, rho, 2)
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    g = np.eye(2) + 0.3 * np.ones((2, 2))
    xs = qfi_optimal_x(fq, slds)
    rev = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            rev[i, j] = np.trace(rho.entries @ xs[i].entries @ xs[j].entries).real
    assert abs(np.trace(g @ rev) - qfi_cr_bound(fq, g)) < 1e-8


# ---------------------------------------------------------------------------
# qfi_bound_via_minimization


def test_minimization_single_parameter():
    rng = np.random.default_rng(3)
    rho = random_density(rng, 3)
    ds = random_derivs(rng, rho, 1)
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    val = qfi_bound_via_minimization(rho, slds, np.eye(1))
    assert val == pytest.approx(1.0 / fq.entries[0, 0], rel=1e-6)


def test_minimization_dephased_qubit():
    eta = 0.7
    phi = 0.4
    v = np.array([1.0, np.exp(1j * phi)]) / np.sqrt(2.0)
    proj = np.outer(v, v.conj())
    rho = DensityMatrix(eta * proj + (1 - eta) * np.eye(2) / 2)
    sz = np.diag([1.0, -1.0]).astype(complex)
    dphi = eta * hermitize(1j * (sz / 2 @ proj - proj @ sz / 2))
    deta = hermitize(proj - np.eye(2) / 2)
    slds = make_slds(rho, [dphi, deta])
    val = qfi_bound_via_minimization(rho, slds, np.eye(2))
    assert val == pytest.approx(1 / eta**2 + (1 - eta**2), abs=1e-6)


def test_minimization_matches_closed_form_random():
    rng = np.random.default_rng(4)
    for trial in range(25):
        dim = int(rng.integers(2, 5))
        p = int(rng.integers(1, 4))
        rho = random_density(rng, dim)
        ds = random_derivs(rng, rho, p)
        slds = make_slds(rho, ds)
        fq = qfi_matrix(rho, slds)
        a = rng.standard_normal((p, p))
        g = a @ a.T + p * np.eye(p)
        direct = qfi_cr_bound(fq, g)
        val = qfi_bound_via_minimization(rho, slds, g)
        assert abs(val - direct) / abs(direct) < 1e-6


# ---------------------------------------------------------------------------
# holevo_bound


def test_holevo_gradient_is_consistent():
    # analytic (sub)gradient of the full objective vs central differences
    rng = np.random.default_rng(5)
    rho = random_density(rng, 3)
    ds = random_derivs(rng, rho, 2)
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    g, basis, q, qr, qi, a, null, _ = _setup(rho, slds, np.eye(2))
    x0 = _coeffs([x.entries for x in qfi_optimal_x(fq, slds)], basis)
    k = null.shape[1]

    def unpack(z):
        return x0 + z.reshape(2, k) @ null.T

    def objective(z):
        xc = unpack(z)
        m = g @ (xc @ qi @ xc.T)
        return float(np.trace(g @ (xc @ qr @ xc.T)) + np.linalg.svd(m, compute_uv=False).sum())

    def gradient(z):
        xc = unpack(z)
        m = g @ (xc @ qi @ xc.T)
        u, _, vt = np.linalg.svd(m)
        d = u @ vt
        return ((2.0 * g @ xc @ qr + (d.T @ g - g @ d) @ xc @ qi) @ null).reshape(-1)

    z = 0.2 * rng.standard_normal(2 * k)
    ga = gradient(z)
    h = 1e-6
    for idx in rng.choice(len(z), size=8, replace=False):
        e = np.zeros_like(z)
        e[idx] = h
        num = (objective(z + e) - objective(z - e)) / (2 * h)
        assert abs(num - ga[idx]) < 1e-7 * max(1.0, abs(num))


def test_holevo_compatible_model_attains_qfi_bound():
    rng = np.random.default_rng(6)
    rho, ds = classical_mixing_model(rng)
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    sol = holevo_bound(rho, slds, fq, np.eye(2))
    qb = qfi_cr_bound(fq, np.eye(2))
    assert abs(sol.value - qb) < 1e-6
    assert sol.constraint_residual < 1e-6


def test_holevo_incompatible_model_strict_gap():
    rho, ds = spin_half_two_axis()
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    sol = holevo_bound(rho, slds, fq, np.eye(2))
    qb = qfi_cr_bound(fq, np.eye(2))
    assert sol.value > qb + 1e-4
    oracle = sdp_holevo_bound(rho.entries, ds, np.eye(2))
    assert abs(sol.value - oracle) / abs(oracle) < 1e-4


def test_holevo_single_parameter_equals_inverse_qfi():
    rng = np.random.default_rng(7)
    rho = random_density(rng, 3)
    ds = random_derivs(rng, rho, 1)
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    sol = holevo_bound(rho, slds, fq, np.eye(1))
    assert sol.value == pytest.approx(1.0 / fq.entries[0, 0], rel=1e-8)


def test_holevo_ordering_and_warm_start_ceiling():
    rng = np.random.default_rng(8)
    for _ in range(6):
        rho = random_density(rng, 3)
        ds = random_derivs(rng, rho, 2)
        slds = make_slds(rho, ds)
        fq = qfi_matrix(rho, slds)
        g = np.eye(2)
        sol = holevo_bound(rho, slds, fq, g)
        qb = qfi_cr_bound(fq, g)
        assert sol.value >= qb - 1e-6
        # warm-start objective = qfi bound + trace-norm term; never exceeded
        assert sol.value <= sol.objective_trace[0] + 1e-12
        # accepted-iterate objective is monotone
        tr = sol.objective_trace
        assert all(b <= a + 1e-12 for a, b in zip(tr, tr[1:]))


def test_holevo_matches_sdp_oracle_random():
    rng = np.random.default_rng(9)
    for _ in range(6):
        rho = random_density(rng, 2)
        ds = random_derivs(rng, rho, 2)
        slds = make_slds(rho, ds)
        fq = qfi_matrix(rho, slds)
        sol = holevo_bound(rho, slds, fq, np.eye(2))
        oracle = sdp_holevo_bound(rho.entries, ds, np.eye(2))
        assert abs(sol.value - oracle) <= 1e-4 * max(abs(oracle), 1.0)


def test_holevo_matches_direct_search_general_cost():
    # grid/simplex oracle on the same objective, independent minimizer
    from scipy.optimize import minimize

    rng = np.random.default_rng(10)
    rho = random_density(rng, 2)
    ds = random_derivs(rng, rho, 2)
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    g = np.diag([1.0, 2.5])
    sol = holevo_bound(rho, slds, fq, g)

    gg, basis, q, qr, qi, a, null, _ = _setup(rho, slds, g)
    x0 = _coeffs([x.entries for x in qfi_optimal_x(fq, slds)], basis)
    k = null.shape[1]

    def objective(z):
        xc = x0 + z.reshape(2, k) @ null.T
        m = g @ (xc @ qi @ xc.T)
        return float(np.trace(g @ (xc @ qr @ xc.T)) + np.linalg.svd(m, compute_uv=False).sum())

    best = np.inf
    for seed in range(6):
        r = np.random.default_rng(seed)
        res = minimize(objective, 0.3 * r.standard_normal(2 * k), method="Nelder-Mead",
                       options={"maxiter": 20000, "fatol": 1e-14, "xatol": 1e-12})
        best = min(best, res.fun)
    assert sol.value <= best + 1e-7
    assert abs(sol.value - best) < 1e-5 * max(1.0, abs(best))


# ---------------------------------------------------------------------------
# equality iff commutation


def test_equality_iff_commutation_families():
    rng = np.random.default_rng(11)
    for _ in range(8):
        rho, ds = classical_mixing_model(rng)
        slds = make_slds(rho, ds)
        fq = qfi_matrix(rho, slds)
        rep = equality_iff_commutation_test(rho, slds, fq, np.eye(2))
        assert rep.violation_below_tol and rep.gap_below_tol
        assert rep.biconditional_holds
    for _ in range(8):
        rho = random_density(rng, 3)
        ds = random_derivs(rng, rho, 2)
        slds = make_slds(rho, ds)
        fq = qfi_matrix(rho, slds)
        rep = equality_iff_commutation_test(rho, slds, fq, np.eye(2))
        assert not rep.violation_below_tol
        assert not rep.gap_below_tol
        assert rep.biconditional_holds


def test_equality_commuting_generators_orthogonal_supports():
    rho = DensityMatrix(np.diag([0.4, 0.3, 0.2, 0.1]))
    d1 = np.zeros((4, 4), dtype=complex)
    d1[0, 1] = d1[1, 0] = 0.2
    d2 = np.zeros((4, 4), dtype=complex)
    d2[2, 3] = d2[3, 2] = 0.1
    slds = make_slds(rho, [d1, d2])
    fq = qfi_matrix(rho, slds)
    rep = equality_iff_commutation_test(rho, slds, fq, np.eye(2))
    assert rep.gap < 1e-6 and rep.max_weak_violation < 1e-8


def test_equality_spin_half_two_axis():
    rho, ds = spin_half_two_axis()
    slds = make_slds(rho, ds)
    fq = qfi_matrix(rho, slds)
    rep = equality_iff_commutation_test(rho, slds, fq, np.eye(2))
    assert rep.gap > 1e-4 and rep.max_weak_violation > 1e-4
