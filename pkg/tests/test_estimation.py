import numpy as np
import pytest
from scipy.special import comb

from metrocomp import (
    DensityMatrix,
    ParametricModel,
    Povm,
    SldSet,
    ValidationError,
    classical_fisher,
    compatibility_check,
    eigh,
    model_slds,
    povm_fisher,
    qfi_cr_bound,
    qfi_matrix,
    sld,
)
from metrocomp.errors import UnidentifiableParametersError, UnsaturableDirectionError
from metrocomp.operators import dag, hermitize

SZ = np.diag([1.0, -1.0]).astype(complex)


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


def phase_model(phi0=0.0):
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)

    def ev(phi):
        u = np.diag(np.exp(1j * phi[0] * np.diag(SZ) / 2))
        v = u @ plus
        return DensityMatrix(np.outer(v, v.conj()))

    def dv(phi):
        rho = ev(phi).entries
        return [hermitize(1j * (SZ / 2 @ rho - rho @ SZ / 2))]

    return ParametricModel(1, ev, dv, "qubit-phase")


def dephased_model():
    def ev(p):
        phi, eta = p
        v = np.array([1.0, np.exp(1j * phi)], dtype=complex) / np.sqrt(2.0)
        return DensityMatrix(eta * np.outer(v, v.conj()) + (1 - eta) * np.eye(2) / 2)

    def dv(p):
        phi, eta = p
        v = np.array([1.0, np.exp(1j * phi)], dtype=complex) / np.sqrt(2.0)
        proj = np.outer(v, v.conj())
        dphi = p[1] * hermitize(1j * (SZ / 2 @ proj - proj @ SZ / 2)) * 1.0
        deta = hermitize(proj - np.eye(2) / 2)
        return [dphi, deta]

    return ParametricModel(2, ev, dv, "dephased-qubit")


# ---------------------------------------------------------------------------
# classical_fisher


def test_classical_fisher_binomial():
    eta = 0.37
    p = np.array([eta, 1 - eta])
    dp = np.array([[1.0, -1.0]])
    f = classical_fisher(p, dp)
    assert f.entries[0, 0] == pytest.approx(1.0 / (eta * (1 - eta)), rel=1e-12)


def test_classical_fisher_binomial_multi_n():
    # direct sum oracle over outcomes of P(l|eta) = C(N,l) eta^(N-l)(1-eta)^l
    n, eta = 5, 0.62
    ls = np.arange(n + 1)
    p = comb(n, ls) * eta ** (n - ls) * (1 - eta) ** ls
    dp = p * ((n - ls) / eta - ls / (1 - eta))
    expected = float(np.sum(dp**2 / p))
    f = classical_fisher(p, dp[None, :])
    assert f.entries[0, 0] == pytest.approx(expected, rel=1e-12)
    assert f.entries[0, 0] == pytest.approx(n / (eta * (1 - eta)), rel=1e-12)


def test_classical_fisher_constant_distribution():
    f = classical_fisher(np.array([0.25, 0.75]), np.zeros((2, 2)))
    assert np.all(f.entries == 0.0)


def test_classical_fisher_two_outcome_phase():
    phi = 0.8
    p = np.array([np.cos(phi / 2) ** 2, np.sin(phi / 2) ** 2])
    dp = np.array([[-np.sin(phi) / 2, np.sin(phi) / 2]])
    f = classical_fisher(p, dp)
    assert f.entries[0, 0] == pytest.approx(1.0, rel=1e-12)


def test_classical_fisher_rejects_negative():
    with pytest.raises(ValidationError):
        classical_fisher(np.array([1.2, -0.2]), np.zeros((1, 2)))


# ---------------------------------------------------------------------------
# sld / qfi


def test_sld_pure_state_formula():
    m = phase_model()
    phi = np.array([0.3])
    rho = m.eval_state(phi)
    l = sld(rho, m.derivs(phi)[0]).entries
    # pure-state oracle: L = 2 d rho
    assert np.max(np.abs(l - 2 * m.derivs(phi)[0])) < 1e-8


def test_sld_full_rank_qubit_hand_solve():
    p = 0.7
    rho = DensityMatrix(np.diag([p, 1 - p]))
    c = 0.11
    drho = np.diag([c, -c]).astype(complex)
    l = sld(rho, drho).entries
    assert np.allclose(np.diag(l), [c / p, -c / (1 - p)])


def test_sld_zero_derivative():
    rho = DensityMatrix(np.diag([0.6, 0.4]))
    assert np.max(np.abs(sld(rho, np.zeros((2, 2))).entries)) == 0.0


def test_sld_unsaturable_direction():
    rho = DensityMatrix(np.diag([1.0, 0.0]))
    # derivative living on the kernel-kernel block
    drho = np.diag([0.0, 1.0]) - np.diag([1.0, 0.0])
    with pytest.raises(UnsaturableDirectionError):
        sld(rho, hermitize(drho - np.trace(drho) / 2 * 0))


def test_sld_residual_random_models():
    rng = np.random.default_rng(3)
    for dim in (2, 3, 4, 5, 6):
        for p in (1, 2, 3):
            rho = random_density(rng, dim)
            for d in random_derivs(rng, rho, p):
                l = sld(rho, d).entries
                res = np.max(np.abs(0.5 * (l @ rho.entries + rho.entries @ l) - d))
                assert res < 1e-8


def test_qfi_single_qubit_phase():
    m = phase_model()
    phi = np.array([0.4])
    s = model_slds(m, phi)
    f = qfi_matrix(m.eval_state(phi), s)
    assert f.entries[0, 0] == pytest.approx(1.0, abs=1e-10)


def test_qfi_dephased_qubit_diag():
    m = dephased_model()
    for eta in (0.3, 0.6, 0.9):
        phi = np.array([0.25, eta])
        s = model_slds(m, phi)
        f = qfi_matrix(m.eval_state(phi), s)
        assert f.entries[0, 0] == pytest.approx(eta**2, abs=1e-10)
        assert f.entries[1, 1] == pytest.approx(1 / (1 - eta**2), abs=1e-8)
        assert abs(f.entries[0, 1]) < 1e-10


def test_qfi_duplicated_parameter_degenerate():
    rng = np.random.default_rng(5)
    rho = random_density(rng, 3)
    d = random_derivs(rng, rho, 1)[0]
    s = SldSet((sld(rho, d), sld(rho, d)), 3)
    f = qfi_matrix(rho, s)
    w = np.linalg.eigvalsh(f.entries)
    assert w[0] < 1e-10 * w[-1]
    with pytest.raises(UnidentifiableParametersError):
        qfi_cr_bound(f, np.eye(2))


def test_qfi_cr_bound_examples():
    from metrocomp.estimation import FisherMatrix

    f = FisherMatrix(np.diag([4.0, 4.0]), "quantum")
    assert qfi_cr_bound(f, np.eye(2)) == pytest.approx(0.5, rel=1e-14)
    assert qfi_cr_bound(f, f.entries) == pytest.approx(2.0, rel=1e-14)


def test_inverse_diagonal_dominates():
    rng = np.random.default_rng(7)
    for _ in range(30):
        p = int(rng.integers(2, 5))
        a = rng.standard_normal((p, p))
        f = a @ a.T + p * np.eye(p)
        finv = np.linalg.inv(f)
        for i in range(p):
            assert finv[i, i] >= 1.0 / f[i, i] - 1e-10
        off = f - np.diag(np.diag(f))
        if np.max(np.abs(off)) > 1e-6:
            assert any(
                finv[i, i] > 1.0 / f[i, i] + 1e-12
                for i in range(p)
                if np.max(np.abs(off[i])) > 1e-6
            )
    d = np.diag(rng.random(3) + 0.5)
    dinv = np.linalg.inv(d)
    assert all(abs(dinv[i, i] - 1 / d[i, i]) < 1e-10 for i in range(3))


# ---------------------------------------------------------------------------
# povm_fisher


def test_povm_fisher_sld_eigenbasis_attains_qfi():
    m = phase_model()
    phi = np.array([0.6])
    s = model_slds(m, phi)
    fq = qfi_matrix(m.eval_state(phi), s)
    _, u = eigh(s.slds[0].entries)
    povm = Povm(tuple(np.outer(u[:, k], u[:, k].conj()) for k in range(2)))
    fc = povm_fisher(m, phi, povm)
    assert abs(fc.entries[0, 0] - fq.entries[0, 0]) < 1e-8


def test_povm_fisher_trivial_measurement():
    m = phase_model()
    povm = Povm((np.eye(2),))
    f = povm_fisher(m, np.array([0.3]), povm)
    assert np.all(f.entries == 0.0)


def test_povm_never_beats_qfi():
    rng = np.random.default_rng(11)
    for _ in range(10):
        dim = int(rng.integers(2, 5))
        rho = random_density(rng, dim)
        ds = random_derivs(rng, rho, 2)
        s = SldSet(tuple(sld(rho, d) for d in ds), dim)
        fq = qfi_matrix(rho, s)
        model = ParametricModel(2, lambda phi, r=rho: r, lambda phi, d=ds: d)
        h = hermitize(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
        _, u = eigh(h)
        povm = Povm(tuple(np.outer(u[:, k], u[:, k].conj()) for k in range(dim)))
        fc = povm_fisher(model, np.zeros(2), povm)
        assert np.linalg.eigvalsh(fq.entries - fc.entries)[0] > -1e-8


def test_qfi_additivity_on_tensor_products():
    rng = np.random.default_rng(13)
    rho = random_density(rng, 3)
    ds = random_derivs(rng, rho, 2)
    s = SldSet(tuple(sld(rho, d) for d in ds), 3)
    fq = qfi_matrix(rho, s)
    rho2 = DensityMatrix(np.kron(rho.entries, rho.entries))
    ds2 = [np.kron(d, rho.entries) + np.kron(rho.entries, d) for d in ds]
    s2 = SldSet(tuple(sld(rho2, d) for d in ds2), 9)
    fq2 = qfi_matrix(rho2, s2)
    assert np.max(np.abs(fq2.entries - 2 * fq.entries)) < 1e-8


# ---------------------------------------------------------------------------
# compatibility_check


def test_compatibility_single_parameter_trivial():
    m = phase_model()
    phi = np.array([0.2])
    s = model_slds(m, phi)
    fq = qfi_matrix(m.eval_state(phi), s)
    rep = compatibility_check(m.eval_state(phi), s, fq)
    assert rep.compatible and rep.strong_ok


def test_compatibility_spin_half_two_axis_violated():
    # any pure qubit probe violates weak commutation for two-axis rotations
    sx = np.array([[0, 1], [1, 0]], dtype=complex) / 2
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
    worst = np.inf
    for theta in np.linspace(0.1, np.pi - 0.1, 12):
        for phi_a in np.linspace(0, 2 * np.pi, 12, endpoint=False):
            psi = np.array([np.cos(theta / 2), np.exp(1j * phi_a) * np.sin(theta / 2)])
            rho = DensityMatrix(np.outer(psi, psi.conj()))
            ds = [hermitize(1j * (h @ rho.entries - rho.entries @ h)) for h in (sx, sy)]
            s = SldSet(tuple(sld(rho, d) for d in ds), 1)
            fq = qfi_matrix(rho, s)
            rep = compatibility_check(rho, s, fq)
            # variance-degenerate poles give vanishing QFI; restrict to
            # maximal-variance band where both parameters are sensed
            if min(fq.entries[0, 0], fq.entries[1, 1]) > 0.5:
                worst = min(worst, np.max(np.abs(rep.weak_commutation)))
    assert worst > 0.1


def test_compatibility_eq13_crosscheck():
    rng = np.random.default_rng(17)
    for _ in range(5):
        rho = random_density(rng, 4)
        ds = random_derivs(rng, rho, 3)
        s = SldSet(tuple(sld(rho, d) for d in ds), 4)
        fq = qfi_matrix(rho, s)
        rep = compatibility_check(rho, s, fq, derivs=ds)
        assert rep.eq13_residual < 1e-8
