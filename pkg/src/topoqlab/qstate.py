"""Polarisation-qubit state algebra.

Two-photon matrices use the ordering |HH>, |HV>, |VH>, |VV>, with the first
factor the signal photon. Density matrices are plain complex ndarrays and get
validated on entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
PAULI_BASIS = (I2, X, Y, Z)

PHASE_GATE = np.diag([1, -1j]).astype(complex)
HADAMARD_LIKE = (X + Z) / np.sqrt(2)

BASIS_LABELS_2Q = ("HH", "HV", "VH", "VV")

TOL = 1e-10


def ket(*amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex).ravel()
    return v / np.linalg.norm(v)


def pure(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def singlet_ket() -> np.ndarray:
    return np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def singlet() -> np.ndarray:
    """Projector onto (|HV> - |VH>)/sqrt(2)."""
    return pure(singlet_ket())


def werner(p: float) -> np.ndarray:
    return p * singlet() + (1 - p) * np.eye(4) / 4


def check_density_matrix(rho, tol: float = TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
        raise DomainError(f"expected a 2x2 or 4x4 matrix, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise DomainError(f"density matrix trace {np.trace(rho).real:.12g} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise DomainError("density matrix has a negative eigenvalue")
    return rho


def is_unitary(k: np.ndarray, tol: float = TOL) -> bool:
    k = np.asarray(k)
    return bool(np.abs(k.conj().T @ k - np.eye(k.shape[0])).max() < tol)


def sqrtm_psd(a: np.ndarray, clamp: float = TOL) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; eigenvalues in (-clamp, 0) are set to 0.

    Eigenvalues below the round-off floor ``dim * eps * max|w|`` are treated
    as exact zeros so that their square roots do not leak ~1e-8 noise.
    """
    a = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(a)
    if w.min() < -clamp:
        raise DomainError(f"matrix not PSD (min eigenvalue {w.min():.3e})")
    floor = w.size * np.finfo(float).eps * np.abs(w).max()
    w = np.where(w > floor, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def spin_flip(rho: np.ndarray) -> np.ndarray:
    yy = np.kron(Y, Y)
    return yy @ rho.conj() @ yy


@dataclass(frozen=True)
class ConcurrenceBreakdown:
    """Eigenvalues ``lambdas`` (decreasing) of rho * rho_tilde, ``gamma`` and ``value = max(0, gamma)``.

    ``rho_tilde = (Y (x) Y) rho* (Y (x) Y)`` is the spin-flipped state.
    """

    lambdas: np.ndarray
    gamma: float
    value: float

    def __float__(self):
        return float(self.value)


def concurrence(rho: np.ndarray) -> ConcurrenceBreakdown:
    rho = check_density_matrix(rho)
    if rho.shape != (4, 4):
        raise DomainError("concurrence needs a two-qubit (4x4) state")
    # With rho = W W^dagger, the singular values of W^T (Y (x) Y) W are the
    # square roots of the eigenvalues of rho @ rho_tilde. Working with them
    # directly avoids sqrt() of round-off-sized eigenvalues on rank-deficient
    # states.
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    factor = v * np.sqrt(np.clip(w, 0, None))
    s = np.linalg.svd(factor.T @ np.kron(Y, Y) @ factor, compute_uv=False)
    s = np.sort(s)[::-1]
    gamma = float(s[0] - s[1] - s[2] - s[3])
    return ConcurrenceBreakdown(s**2, gamma, max(0.0, gamma))


def purity(rho: np.ndarray) -> float:
    rho = check_density_matrix(rho)
    return float(np.real(np.trace(rho @ rho)))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Evaluated as the squared nuclear norm of ``sqrt(rho) sqrt(sigma)``, which
    keeps full precision when either state is (nearly) pure.
    """
    rho = check_density_matrix(rho)
    sigma = check_density_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DomainError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    s = np.linalg.svd(sqrtm_psd(rho) @ sqrtm_psd(sigma), compute_uv=False)
    return float(min(1.0, np.sum(s) ** 2))


Side = Literal["first", "second"]


def lift(k: np.ndarray, side: Side) -> np.ndarray:
    if side == "first":
        return np.kron(k, I2)
    if side == "second":
        return np.kron(I2, k)
    raise DomainError(f"side must be 'first' or 'second', got {side!r}")


def apply_one_sided_channel(rho: np.ndarray, k: np.ndarray, side: Side, require_unitary: bool = True) -> np.ndarray:
    """``(K (x) I) rho (K (x) I)^dagger`` or the same on the second photon."""
    k = np.asarray(k, dtype=complex)
    if k.shape != (2, 2):
        raise DomainError("single-qubit operator must be 2x2")
    if require_unitary and not is_unitary(k):
        raise DomainError("operator is not unitary")
    big = lift(k, side)
    return big @ np.asarray(rho, dtype=complex) @ big.conj().T


def depolarize(rho: np.ndarray, p: float, side: Side | None = None) -> np.ndarray:
    """Depolarising channel of strength ``p``: ``(1-p) rho + p * (maximally mixed)`` on one photon.

    ``side=None`` treats ``rho`` as a single qubit.
    """
    if not 0 <= p <= 1:
        raise DomainError("depolarising strength must lie in [0, 1]")
    rho = np.asarray(rho, dtype=complex)
    if side is None:
        return (1 - p) * rho + p * np.trace(rho) * I2 / 2
    out = (1 - p) * rho
    for pauli in (X, Y, Z):
        big = lift(pauli, side)
        out = out + (p / 4) * big @ rho @ big
    return out + (p / 4) * rho


def random_density_matrix(rng: np.random.Generator, dim: int = 4, rank: int | None = None) -> np.ndarray:
    """``A A^dagger / tr`` with complex Gaussian ``A`` (``dim x rank``)."""
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))
