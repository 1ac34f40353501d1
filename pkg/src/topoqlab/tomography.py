"""State and process reconstruction from tomographic counts.

Process-matrix layout
---------------------
``chi[m, n]`` multiplies ``E_n rho E_m^dagger`` with ``E = (I, X, Y, Z)``::

    eps(rho) = sum_mn chi[m, n] E_n rho E_m^dagger

This is the transpose of the textbook ``E_m rho E_n^dagger`` layout. With it
the phase gate S = diag(1, -i) has
``chi = 1/2 [[1, 0, 0, i], [0, 0, 0, 0], [0, 0, 0, 0], [-i, 0, 0, 1]]`` and
``eps(rho) = S rho S^dagger``. Trace preservation reads
``sum_mn chi[m, n] E_m^dagger E_n = I`` and a trace-preserving chi has unit trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import product
from typing import Callable, Mapping

import numpy as np
import scipy.linalg
import scipy.optimize

from . import qstate
from .errors import ConstrainedFitError, DomainError, InversionError
from .measurement import (
    PROCESS_INPUT_LABELS,
    PROCESS_OUTPUT_LABELS,
    CountsTable,
    ProcessSetting,
    expected_counts,
    jones,
)

PAULI_LABELS = ("I", "X", "Y", "Z")
PAULI_BASIS = qstate.PAULI_BASIS


def _hermitian_basis(dim: int) -> list[np.ndarray]:
    """Tensor products of Paulis, normalised to ``tr(B_i B_j) = delta_ij``."""
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise DomainError(f"dimension {dim} is not a power of two")
    return [reduce(np.kron, ops) / np.sqrt(dim) for ops in product(PAULI_BASIS, repeat=n)]


def _born_matrix(table: CountsTable) -> np.ndarray:
    """Real matrix mapping Hermitian-basis coefficients to expected counts."""
    basis = _hermitian_basis(table.dimension)
    tr = np.real(np.einsum("kij,bji->kb", table.projectors, np.array(basis)))
    return table.exposure[:, None] * tr


def linear_inversion_state(table: CountsTable) -> np.ndarray:
    """Least-squares solution of ``N tr(rho P_k) = n_k``; Hermitian, unit trace, possibly not PSD."""
    a = _born_matrix(table)
    d2 = table.dimension**2
    if np.linalg.matrix_rank(a) < d2:
        raise InversionError(f"design matrix rank {np.linalg.matrix_rank(a)} < {d2}: settings not informationally complete")
    coef, *_ = np.linalg.lstsq(a, table.counts(), rcond=None)
    basis = _hermitian_basis(table.dimension)
    rho = sum(c * b for c, b in zip(coef, basis))
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if tr <= 0:
        raise InversionError("linear inversion produced non-positive trace")
    return rho / tr


def project_psd(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues to zero and renormalise the trace."""
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, 0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


# ---------------------------------------------------------------------------
# maximum likelihood


def _tril_indices(dim: int):
    return np.tril_indices(dim, -1)


def params_to_t(x: np.ndarray, dim: int) -> np.ndarray:
    """Lower-triangular T from ``dim`` real diagonal entries then (re, im) of the strict lower part."""
    t = np.zeros((dim, dim), dtype=complex)
    t[np.diag_indices(dim)] = x[:dim]
    low = _tril_indices(dim)
    m = low[0].size
    t[low] = x[dim : dim + m] + 1j * x[dim + m : dim + 2 * m]
    return t


def t_to_params(t: np.ndarray) -> np.ndarray:
    dim = t.shape[0]
    low = _tril_indices(dim)
    return np.concatenate([np.real(np.diag(t)), np.real(t[low]), np.imag(t[low])])


def rho_from_params(x: np.ndarray, dim: int) -> np.ndarray:
    t = params_to_t(x, dim)
    m = t.conj().T @ t
    return m / np.trace(m).real


def params_from_rho(rho: np.ndarray) -> np.ndarray:
    """Parameters of the lower-triangular T with ``T^dagger T = rho`` (rho positive definite)."""
    j = np.eye(rho.shape[0])[::-1]
    chol = np.linalg.cholesky(j @ rho @ j)  # J rho J = L L^dagger
    return t_to_params(j @ chol.conj().T @ j)


def _poisson_deviance(n: np.ndarray, mu: np.ndarray) -> float:
    """``sum_k mu_k - n_k - n_k ln(mu_k / n_k)``: half the Poisson deviance, zero for a perfect fit.

    Equals the negative log-likelihood minus its rho-independent saturated
    value, so it stays O(number of settings) instead of O(total counts) and
    likelihood changes of 1e-10 remain resolvable in double precision.
    """
    pos = n > 0
    terms = mu - n
    terms[pos] -= n[pos] * np.log(mu[pos] / n[pos])
    return float(np.sum(terms))


def log_likelihood(rho: np.ndarray, table: CountsTable) -> float:
    """Poisson log-likelihood ``sum_k n_k ln(mu_k) - mu_k`` relative to the saturated model (so <= 0)."""
    n = table.counts()
    mu = table.exposure * np.real(np.einsum("kij,ji->k", table.projectors, rho))
    return -_poisson_deviance(n, np.clip(mu, 1e-300, None))


def negative_log_likelihood(x: np.ndarray, table: CountsTable) -> tuple[float, np.ndarray]:
    """Objective and analytic gradient with respect to the T parameters."""
    dim = table.dimension
    t = params_to_t(x, dim)
    m = t.conj().T @ t
    trace_m = np.trace(m).real
    rho = m / trace_m

    n = table.counts()
    mu = table.exposure * np.real(np.einsum("kij,ji->k", table.projectors, rho))
    mu = np.clip(mu, 1e-300, None)
    f = _poisson_deviance(n, mu)

    # dF = tr(G drho); chain through rho = M / tr M and M = T^dagger T
    g = np.einsum("k,kij->ij", (1 - n / mu) * table.exposure, table.projectors)
    g_m = (g - np.real(np.trace(g @ rho)) * np.eye(dim)) / trace_m
    q = 2 * (t @ g_m)
    low = _tril_indices(dim)
    grad = np.concatenate([np.real(np.diag(q)), np.real(q[low]), np.imag(q[low])])
    return f, grad


@dataclass
class StateEstimate:
    rho: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    initial_log_likelihood: float
    linear_min_eigenvalue: float

    def metrics(self, reference: np.ndarray | None = None) -> dict:
        out = {"purity": qstate.purity(self.rho)}
        if self.rho.shape == (4, 4):
            out["concurrence"] = qstate.concurrence(self.rho).value
        if reference is not None:
            out["fidelity"] = qstate.fidelity(self.rho, reference)
        return out


def mle_state(
    table: CountsTable,
    max_iter: int = 100_000,
    ll_tol: float = 1e-10,
    step_tol: float = 1e-8,
    init_mixing: float = 1e-3,
) -> StateEstimate:
    """Maximum-likelihood density matrix with ``rho = T^dagger T / tr``.

    Starts from the PSD-projected linear inversion, mixed with ``init_mixing``
    of the identity so that T is well defined. L-BFGS rounds are repeated
    until one round improves the log-likelihood by less than ``ll_tol`` and
    moves the (trace-normalised) parameters by less than ``step_tol``.
    Running out of ``max_iter`` returns the current estimate with
    ``converged=False``.
    """
    if table.counts().sum() <= 0:
        raise DomainError("no counts to fit")
    dim = table.dimension
    lin = linear_inversion_state(table)
    lin_min = float(np.linalg.eigvalsh(lin).min())
    rho0 = (1 - init_mixing) * project_psd(lin) + init_mixing * np.eye(dim) / dim
    x = params_from_rho(rho0)
    ll_prev = log_likelihood(rho0, table)
    ll_init = ll_prev

    iterations = 0
    converged = False
    while iterations < max_iter:
        res = scipy.optimize.minimize(
            negative_log_likelihood,
            x,
            args=(table,),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": min(2000, max_iter - iterations), "ftol": 1e-16, "gtol": 1e-14, "maxcor": 30},
        )
        iterations += max(int(res.nit), 1)
        x_new = res.x / np.sqrt(np.sum(res.x**2))
        ll_new = log_likelihood(rho_from_params(x_new, dim), table)
        step = float(np.linalg.norm(x_new - x / np.sqrt(np.sum(x**2))))
        improvement = ll_new - ll_prev
        if ll_new >= ll_prev:
            x, ll_prev = x_new, ll_new
        if abs(improvement) < ll_tol and step < step_tol:
            converged = True
            break
    rho = rho_from_params(x, dim)
    return StateEstimate(rho, ll_prev, iterations, converged, ll_init, lin_min)


# ---------------------------------------------------------------------------
# process tomography


def apply_chi(chi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``sum_mn chi[m, n] E_n rho E_m^dagger``."""
    out = np.zeros((2, 2), dtype=complex)
    for m, em in enumerate(PAULI_BASIS):
        for n, en in enumerate(PAULI_BASIS):
            if chi[m, n] != 0:
                out += chi[m, n] * en @ rho @ em.conj().T
    return out


def trace_preservation_defect(chi: np.ndarray) -> np.ndarray:
    """``sum_mn chi[m, n] E_m^dagger E_n - I``."""
    out = -np.eye(2, dtype=complex)
    for m, em in enumerate(PAULI_BASIS):
        for n, en in enumerate(PAULI_BASIS):
            out += chi[m, n] * em.conj().T @ en
    return out


def pauli_coefficients(k: np.ndarray) -> np.ndarray:
    """``c`` with ``K = sum_m c_m E_m``."""
    return np.array([np.trace(e.conj().T @ k) / 2 for e in PAULI_BASIS])


def chi_from_unitary(k: np.ndarray) -> np.ndarray:
    """Process matrix of ``rho -> K rho K^dagger``: ``chi[m, n] = conj(c_m) c_n``."""
    k = np.asarray(k, dtype=complex)
    if k.shape != (2, 2) or not qstate.is_unitary(k):
        raise DomainError("chi_from_unitary needs a 2x2 unitary")
    c = pauli_coefficients(k)
    return np.outer(c.conj(), c)


def depolarizing_chi(p: float) -> np.ndarray:
    return np.diag([1 - 3 * p / 4, p / 4, p / 4, p / 4]).astype(complex)


@dataclass
class ChiMatrix:
    matrix: np.ndarray
    psd_margin: float
    tp_defect: float
    residual_norm: float
    penalty_weight: float
    evaluations: int
    residuals: dict = field(default_factory=dict)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return apply_chi(self.matrix, rho)


def _process_forward(records: Mapping[str, CountsTable]):
    """Design tensor ``B[k, m, n] = tr(P_k E_n rho_k E_m^dagger)`` and data vectors."""
    rows, counts, exposure = [], [], []
    for prep, table in records.items():
        rho_in = qstate.pure(jones(prep))
        for proj, n_k, n_exp in zip(table.projectors, table.counts(), table.exposure):
            rows.append(
                [[np.trace(proj @ en @ rho_in @ em.conj().T) for en in PAULI_BASIS] for em in PAULI_BASIS]
            )
            counts.append(n_k)
            exposure.append(n_exp)
    return np.array(rows), np.array(counts, dtype=float), np.array(exposure, dtype=float)


def linear_inversion_chi(records: Mapping[str, CountsTable]) -> np.ndarray:
    """Unconstrained Hermitian least-squares chi (may be non-PSD / non-TP)."""
    b, n, exposure = _process_forward(records)
    herm = _hermitian_basis(4)  # 16 Hermitian 4x4 matrices as basis for chi
    a = np.real(np.einsum("kmn,bmn->kb", b, np.array(herm))) * exposure[:, None]
    if np.linalg.matrix_rank(a) < 16:
        raise InversionError("process settings do not determine chi")
    coef, *_ = np.linalg.lstsq(a, n, rcond=None)
    chi = sum(c * h for c, h in zip(coef, herm))
    return 0.5 * (chi + chi.conj().T)


def _a_from_chi(chi: np.ndarray) -> np.ndarray:
    start = project_psd(chi) if np.trace(chi).real > 0 else np.eye(4) / 4
    return qstate.sqrtm_psd(start)


class _ProcessProblem:
    """Scaled least-squares residuals for ``chi = A^dagger A`` with a trace-preservation penalty.

    ``x`` packs ``Re A`` then ``Im A`` row-major (32 reals). Count residuals
    are divided by the largest exposure so both blocks are O(1).
    """

    def __init__(self, records: Mapping[str, CountsTable]):
        b, n, exposure = _process_forward(records)
        self.n_ref = exposure.max()
        self.counts = n
        self.weights = exposure / self.n_ref
        self.b_flat = b.reshape(len(n), 16)
        self.ee = np.array([[em.conj().T @ en for en in PAULI_BASIS] for em in PAULI_BASIS]).reshape(16, 2, 2)

    @staticmethod
    def chi_of(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a = (x[:16] + 1j * x[16:]).reshape(4, 4)
        return a.conj().T @ a, a

    def model(self, chi: np.ndarray) -> np.ndarray:
        return np.real(self.b_flat @ chi.ravel()) * self.weights

    def defect(self, chi: np.ndarray) -> np.ndarray:
        d = np.einsum("k,kij->ij", chi.ravel(), self.ee) - np.eye(2)
        return np.concatenate([d.real.ravel(), d.imag.ravel()])

    def data_residual_norm(self, chi: np.ndarray) -> float:
        return float(np.linalg.norm(self.model(chi) - self.counts / self.n_ref) * self.n_ref)

    def residuals(self, x: np.ndarray, w: float) -> np.ndarray:
        chi, _ = self.chi_of(x)
        return np.concatenate([self.model(chi) - self.counts / self.n_ref, np.sqrt(w) * self.defect(chi)])

    def jacobian(self, x: np.ndarray, w: float) -> np.ndarray:
        _, a = self.chi_of(x)
        # d chi / d(Re A_ab) = e_ba A + A^dagger e_ab ; the imaginary part picks up +-i
        cols = []
        for part in (1.0, 1j):
            for ia in range(4):
                for ib in range(4):
                    e = np.zeros((4, 4), dtype=complex)
                    e[ia, ib] = part
                    cols.append(e.conj().T @ a + a.conj().T @ e)
        dchi = np.array(cols).reshape(32, 16)
        j_model = np.real(dchi @ self.b_flat.T).T * self.weights[:, None]
        d = dchi @ self.ee.reshape(16, 4)
        j_def = np.concatenate([d.real, d.imag], axis=1).T * np.sqrt(w)
        return np.vstack([j_model, j_def])


def process_tomography(
    records: Mapping[str, CountsTable],
    tp_tol: float = 1e-6,
    initial_weight: float = 1.0,
    max_weight: float = 1e16,
) -> ChiMatrix:
    """Least-squares chi over the 24 process settings with ``chi = A^dagger A``.

    Minimises ``sum_k (N p_k(chi) - n_k)^2`` (internally divided by the largest
    exposure) plus ``w * |trace-preservation defect|^2``; ``w`` grows tenfold
    until the defect drops below ``tp_tol``. Starts from the PSD-projected
    linear-inversion chi. Deterministic.
    """
    missing = set(PROCESS_INPUT_LABELS) - set(records)
    if missing:
        raise DomainError(f"missing preparations {sorted(missing)}")
    prob = _ProcessProblem(records)
    a0 = _a_from_chi(linear_inversion_chi(records))
    x = np.concatenate([a0.real.ravel(), a0.imag.ravel()])

    w = initial_weight
    evaluations = 0
    while True:
        res = scipy.optimize.least_squares(
            prob.residuals, x, jac=prob.jacobian, args=(w,), method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000
        )
        x = res.x
        evaluations += int(res.nfev)
        chi, _ = prob.chi_of(x)
        tp = float(np.abs(prob.defect(chi)).max())
        if tp < tp_tol:
            break
        if w >= max_weight:
            resid = {"tp_defect": tp, "penalty_weight": w, "data_residual_norm": prob.data_residual_norm(chi)}
            raise ConstrainedFitError(f"trace-preservation defect {tp:.3e} stuck above {tp_tol:.1e}", resid)
        w *= 10

    chi = 0.5 * (chi + chi.conj().T)
    return ChiMatrix(
        matrix=chi,
        psd_margin=float(np.linalg.eigvalsh(chi).min()),
        tp_defect=tp,
        residual_norm=prob.data_residual_norm(chi),
        penalty_weight=w,
        evaluations=evaluations,
    )


def process_counts(
    channel: Callable[[np.ndarray], np.ndarray], exposure: float = 1e4
) -> dict[str, CountsTable]:
    """Expected counts of the 24 process settings, keyed by preparation label."""
    out = {}
    for prep in PROCESS_INPUT_LABELS:
        settings = [ProcessSetting(prep, o) for o in PROCESS_OUTPUT_LABELS]
        rho_out = channel(settings[0].input_state)
        out[prep] = expected_counts(rho_out, settings, exposure)
    return out


def process_fidelity(chi: np.ndarray, chi_ideal: np.ndarray, tol: float = 1e-6) -> float:
    """``tr(chi chi_ideal)`` for a rank-1 ideal; Uhlmann fidelity otherwise. Clamped to [0, 1]."""
    chi = np.asarray(chi, dtype=complex)
    chi_ideal = np.asarray(chi_ideal, dtype=complex)
    for c in (chi, chi_ideal):
        if abs(np.trace(c) - 1) > tol:
            raise DomainError(f"chi trace {np.trace(c).real:.9g} != 1; wrong normalisation convention")
    ev = np.linalg.eigvalsh(0.5 * (chi_ideal + chi_ideal.conj().T))
    if ev[-2] < 1e-9:
        f = float(np.real(np.trace(chi @ chi_ideal)))
    else:
        r = qstate.sqrtm_psd(chi_ideal, clamp=1e-8)
        m = r @ chi @ r
        f = float(np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(0.5 * (m + m.conj().T)), 0, None))) ** 2)
    return min(1.0, max(0.0, f))


def nearest_unitary(chi: np.ndarray) -> np.ndarray:
    """Unitary whose chi is closest to the dominant eigenvector of ``chi``.

    Global phase is fixed so that the first non-negligible entry of K is real
    and positive.
    """
    w, v = np.linalg.eigh(0.5 * (chi + chi.conj().T))
    c = v[:, -1].conj()  # chi ~ conj(c) c^T
    k = sum(cm * e for cm, e in zip(c, PAULI_BASIS))
    u, _ = scipy.linalg.polar(k)
    flat = u.ravel()
    lead = flat[np.argmax(np.abs(flat) > 1e-8)]
    return u * (abs(lead) / lead)
