import numpy as np
import pytest

from metrocomp import (
    DensityMatrix,
    HermitianOperator,
    KrausChannel,
    ParametricModel,
    Povm,
    ValidationError,
    apply_channel,
    eigh,
    finite_diff_derivs,
)
from metrocomp.errors import DimensionMismatchError, UnsaturableDirectionError
from metrocomp.operators import dag, hermitize

SZ = np.diag([1.0, -1.0]).astype(complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def dephasing_channel(eta):
    k0 = np.sqrt((1 + eta) / 2) * np.eye(2)
    k1 = np.sqrt((1 - eta) / 2) * SZ
    return KrausChannel((k0, k1))


def test_hermitian_operator_rejects_nonhermitian():
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_density_matrix_validation():
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(2))  # trace 2
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([1.5, -0.5]))  # negative eigenvalue


def test_povm_validation():
    p1 = np.diag([1.0, 0.0])
    with pytest.raises(ValidationError):
        Povm((p1, p1))  # does not sum to identity
    povm = Povm((p1, np.eye(2) - p1))
    assert len(povm) == 2


def test_kraus_completeness():
    with pytest.raises(ValidationError):
        KrausChannel((np.eye(2) * 0.5,))
    dephasing_channel(0.3)  # valid


def test_apply_channel_identity():
    rho = DensityMatrix.from_pure(np.array([0.6, 0.8j]))
    out = apply_channel(KrausChannel((np.eye(2),)), rho)
    assert np.max(np.abs(out.entries - rho.entries)) < 1e-14


def test_apply_channel_dephasing_offdiagonal():
    # hand oracle: K0 X K0 + K1 X K1 shrinks the off-diagonal to eta/2
    eta = 0.37
    rho = DensityMatrix.from_pure(PLUS)
    out = apply_channel(dephasing_channel(eta), rho)
    assert abs(out.entries[0, 1] - eta / 2) < 1e-14
    assert abs(np.trace(out.entries) - 1.0) < 1e-12


def test_apply_channel_full_dephasing():
    out = apply_channel(dephasing_channel(0.0), DensityMatrix.from_pure(PLUS))
    assert np.max(np.abs(out.entries - np.eye(2) / 2)) < 1e-14


def test_apply_channel_dim_mismatch():
    with pytest.raises(DimensionMismatchError):
        apply_channel(dephasing_channel(0.5), DensityMatrix(np.eye(3) / 3))


def test_apply_channel_preserves_positivity():
    rng = np.random.default_rng(0)
    chan = dephasing_channel(0.61)
    for _ in range(20):
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        rho = a @ dag(a)
        rho = DensityMatrix(rho / np.trace(rho).real)
        out = apply_channel(chan, rho)
        assert abs(np.trace(out.entries).real - 1.0) < 1e-12
        assert np.linalg.eigvalsh(out.entries)[0] > -1e-10


def test_finite_diff_constant_model():
    ds = finite_diff_derivs(lambda phi: np.eye(2) / 2, np.zeros(2), 1e-5)
    assert all(np.max(np.abs(d)) == 0.0 for d in ds)


def test_finite_diff_matches_commutator():
    def ev(phi):
        u = np.diag(np.exp(1j * phi[0] * np.diag(SZ) / 2))
        v = u @ PLUS
        return np.outer(v, v.conj())

    d = finite_diff_derivs(ev, np.zeros(1), 1e-5)[0]
    rho = ev(np.zeros(1))
    analytic = 1j * (SZ / 2 @ rho - rho @ SZ / 2)
    assert np.max(np.abs(d - analytic)) < 1e-8


def test_finite_diff_two_commuting_generators():
    h1 = np.diag([1.0, -1.0, 0.0]).astype(complex)
    h2 = np.diag([0.0, 1.0, -1.0]).astype(complex)
    psi = np.array([1.0, 1.0, 1.0], dtype=complex) / np.sqrt(3.0)

    def ev(phi):
        u = np.diag(np.exp(1j * (phi[0] * np.diag(h1) + phi[1] * np.diag(h2))))
        v = u @ psi
        return np.outer(v, v.conj())

    phi0 = np.array([0.2, -0.4])
    ds = finite_diff_derivs(ev, phi0, 1e-5)
    rho = ev(phi0)
    for d, h in zip(ds, (h1, h2)):
        analytic = 1j * (h @ rho - rho @ h)
        assert np.max(np.abs(d - analytic)) < 1e-8


def test_finite_diff_rejects_bad_step():
    with pytest.raises(ValidationError):
        finite_diff_derivs(lambda p: np.eye(2), np.zeros(1), 0.0)


def test_eigh_examples():
    w, _ = eigh(SZ)
    assert np.allclose(w, [-1.0, 1.0])
    sz1 = np.diag([-1.0, 0.0, 1.0]).astype(complex)
    w, _ = eigh(sz1)
    assert np.allclose(w, [-1.0, 0.0, 1.0])


def test_eigh_reconstruction_and_determinism():
    rng = np.random.default_rng(42)
    h = hermitize(rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
    w, u = eigh(h)
    assert np.max(np.abs((u * w) @ dag(u) - h)) < 1e-10
    w2, u2 = eigh(h.copy())
    assert np.array_equal(w, w2) and np.array_equal(u, u2)
    # phase convention: largest-magnitude component real positive
    for k in range(8):
        idx = np.argmax(np.abs(u[:, k]))
        assert u[idx, k].imag == pytest.approx(0.0, abs=1e-14)
        assert u[idx, k].real > 0


def test_eigh_rejects_nonhermitian():
    with pytest.raises(ValidationError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_parametric_model_validation():
    def ev(phi):
        u = np.diag(np.exp(1j * phi[0] * np.diag(SZ) / 2))
        v = u @ PLUS
        return DensityMatrix(np.outer(v, v.conj()))

    def dv(phi):
        rho = ev(phi).entries
        return [hermitize(1j * (SZ / 2 @ rho - rho @ SZ / 2))]

    model = ParametricModel(1, ev, dv, "qubit-phase")
    rng = np.random.default_rng(1)
    for _ in range(10):
        assert model.validate_at(rng.uniform(-2, 2, 1)) < 1e-6

    bad = ParametricModel(1, ev, lambda phi: [np.zeros((2, 2))], "broken")
    with pytest.raises(ValidationError):
        bad.validate_at([0.1])
