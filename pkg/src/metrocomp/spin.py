"""Collective angular momentum operators in the |j, m> basis.

Basis ordering is m = -j, -j+1, ..., +j (ascending), so S_z is diagonal
with ascending entries.  Matrix exponentials of Hermitian generators go
through the eigendecomposition, which is exact at these sizes.
"""

import numpy as np
from scipy.special import comb

from .errors import ValidationError
from .operators import dag

__all__ = [
    "check_spin",
    "dim_j",
    "m_values",
    "spin_z",
    "spin_plus",
    "spin_minus",
    "spin_x",
    "spin_y",
    "axis_operator",
    "expm_hermitian",
    "rotation",
    "coherent_state",
]


def check_spin(j) -> float:
    jj = float(j)
    if jj < 0 or abs(2 * jj - round(2 * jj)) > 1e-12:
        raise ValidationError(f"spin must be a nonnegative half-integer, got {j}")
    return round(2 * jj) / 2


def dim_j(j) -> int:
    return int(round(2 * check_spin(j))) + 1


def m_values(j) -> np.ndarray:
    j = check_spin(j)
    return np.arange(-j, j + 0.5)


def spin_z(j) -> np.ndarray:
    return np.diag(m_values(j)).astype(complex)


def spin_plus(j) -> np.ndarray:
    j = check_spin(j)
    m = m_values(j)[:-1]
    return np.diag(np.sqrt(j * (j + 1) - m * (m + 1)), -1).astype(complex)


def spin_minus(j) -> np.ndarray:
    return dag(spin_plus(j))


def spin_x(j) -> np.ndarray:
    sp = spin_plus(j)
    return 0.5 * (sp + dag(sp))


def spin_y(j) -> np.ndarray:
    sp = spin_plus(j)
    return -0.5j * (sp - dag(sp))


def axis_operator(n, j) -> np.ndarray:
    """n . S for a unit 3-vector n = (nx, ny, nz)."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,):
        raise ValidationError("axis must be a 3-vector")
    norm = np.linalg.norm(n)
    if abs(norm - 1.0) > 1e-12:
        raise ValidationError(f"axis must be a unit vector, |n| = {norm}")
    return n[0] * spin_x(j) + n[1] * spin_y(j) + n[2] * spin_z(j)


def expm_hermitian(h: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """exp(scale * H) for Hermitian H via eigendecomposition."""
    w, u = np.linalg.eigh(h)
    return (u * np.exp(scale * w)) @ dag(u)


def rotation(axis, angle, j) -> np.ndarray:
    """exp(-i * angle * n.S)."""
    return expm_hermitian(axis_operator(axis, j), -1j * angle)


def coherent_state(j, theta: float, phi: float = 0.0) -> np.ndarray:
    """Spin coherent state along (theta, phi); theta = pi/2, phi = 0 is +x.

    Components in the |j, m> basis (m ascending).
    """
    j = check_spin(j)
    m = m_values(j)
    amps = (
        np.sqrt(comb(int(round(2 * j)), (j + m).round().astype(int)))
        * np.cos(theta / 2.0) ** (j + m)
        * np.sin(theta / 2.0) ** (j - m)
        * np.exp(-1j * phi * m)
    )
    return amps / np.linalg.norm(amps)
