from __future__ import annotations

import numpy as np
import pytest

from topoqlab import measurement as M
from topoqlab import qstate as Q
from topoqlab import tomography as T
from topoqlab.errors import ConstrainedFitError, DomainError, InversionError

S_CHI = 0.5 * np.array([[1, 0, 0, 1j], [0, 0, 0, 0], [0, 0, 0, 0], [-1j, 0, 0, 1]])
SETTINGS = M.build_state_tomo_settings()


def state_table(rho, exposure=1e4, seed=None):
    t = M.expected_counts(rho, SETTINGS, exposure)
    return t if seed is None else M.sample_counts(t, seed)


def kraus_chi(kraus):
    """Independent chi from Kraus operators, in the layout eps = sum chi[m, n] E_n rho E_m^dagger."""
    chi = np.zeros((4, 4), dtype=complex)
    for k in kraus:
        c = np.array([np.trace(p.conj().T @ k) / 2 for p in Q.PAULI_BASIS])
        chi += np.outer(c.conj(), c)
    return chi


# ---------------------------------------------------------------- linear inversion


def test_linear_inversion_exact():
    np.testing.assert_allclose(T.linear_inversion_state(state_table(Q.singlet())), Q.singlet(), atol=1e-10)
    np.testing.assert_allclose(T.linear_inversion_state(state_table(np.eye(4) / 4)), np.eye(4) / 4, atol=1e-10)


def test_linear_inversion_noisy_can_go_negative():
    mins = [np.linalg.eigvalsh(T.linear_inversion_state(state_table(Q.singlet(), seed=s))).min() for s in range(20)]
    assert min(mins) < 0
    assert max(abs(m) for m in mins) < 0.05


def test_linear_inversion_rank_deficient():
    settings = [M.MeasurementSetting((a, b)) for a in ("H", "V") for b in ("H", "V")]
    with pytest.raises(InversionError):
        T.linear_inversion_state(M.expected_counts(Q.singlet(), settings, 1e4))


# ---------------------------------------------------------------- MLE


def test_parameterisation_round_trip():
    rng = np.random.default_rng(0)
    rho = Q.random_density_matrix(rng)
    x = T.params_from_rho(rho)
    assert x.size == 16
    t = T.params_to_t(x, 4)
    np.testing.assert_array_equal(np.triu(t, 1), 0)
    np.testing.assert_allclose(T.rho_from_params(x, 4), rho, atol=1e-12)


def test_mle_noiseless_singlet():
    est = T.mle_state(state_table(Q.singlet()))
    assert est.converged
    assert Q.fidelity(est.rho, Q.singlet()) > 1 - 1e-6


def test_mle_noiseless_phase_gate_output():
    truth = Q.apply_one_sided_channel(Q.singlet(), Q.PHASE_GATE, "first")
    est = T.mle_state(state_table(truth))
    assert Q.fidelity(est.rho, truth) > 1 - 1e-6
    assert np.abs(est.rho - truth).max() < 1e-6


@pytest.mark.parametrize("seed", range(8))
def test_mle_output_is_physical(seed):
    rng = np.random.default_rng(seed)
    truth = Q.random_density_matrix(rng, rank=int(rng.integers(1, 5)))
    est = T.mle_state(state_table(truth, exposure=300, seed=seed))
    Q.check_density_matrix(est.rho)
    assert est.log_likelihood >= est.initial_log_likelihood
    assert est.converged


def test_mle_rejects_empty_counts():
    t = M.CountsTable(SETTINGS, np.zeros(16), 1e4, observed=np.zeros(16, dtype=int))
    with pytest.raises(DomainError):
        T.mle_state(t)


def test_mle_iteration_cap_reports_non_convergence():
    est = T.mle_state(state_table(Q.werner(0.9), seed=1), max_iter=1)
    assert not est.converged
    Q.check_density_matrix(est.rho)


def test_likelihood_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    table = state_table(Q.werner(0.8), seed=2)
    h = 1e-6
    for _ in range(5):
        x = rng.normal(size=16)
        _, g = T.negative_log_likelihood(x, table)
        fd = np.array(
            [(T.negative_log_likelihood(x + h * e, table)[0] - T.negative_log_likelihood(x - h * e, table)[0]) / (2 * h) for e in np.eye(16)]
        )
        assert np.linalg.norm(g - fd) < 1e-5 * np.linalg.norm(fd)


def test_mle_equivariant_under_h_v_relabel():
    xx = np.kron(Q.X, Q.X)
    truth = Q.werner(0.85)
    truth = Q.apply_one_sided_channel(truth, Q.random_unitary(np.random.default_rng(3)), "first")
    table = state_table(truth, seed=11)
    swapped = M.CountsTable(table.settings, table.expected, table.exposure, table.observed, projectors=xx @ table.projectors @ xx)
    a, b = T.mle_state(table), T.mle_state(swapped)
    assert np.abs(b.rho - xx @ a.rho @ xx).max() < 1e-8


def test_mle_poisson_singlet_ensemble():
    fids, conc = [], []
    for seed in range(30):
        est = T.mle_state(state_table(Q.singlet(), seed=seed))
        fids.append(Q.fidelity(est.rho, Q.singlet()))
        conc.append(Q.concurrence(est.rho).value)
    assert np.median(fids) > 0.99
    assert np.median(conc) > 0.99


def test_metrics_dict():
    est = T.mle_state(state_table(Q.singlet()))
    m = est.metrics(Q.singlet())
    assert set(m) == {"purity", "concurrence", "fidelity"}
    assert m["concurrence"] == pytest.approx(1, abs=1e-5)


# ---------------------------------------------------------------- process matrices


def test_chi_from_unitary_examples():
    ident = T.chi_from_unitary(Q.I2)
    assert ident[0, 0] == 1 and np.count_nonzero(np.abs(ident) > 1e-15) == 1
    z = T.chi_from_unitary(Q.Z)
    assert z[3, 3] == pytest.approx(1) and np.count_nonzero(np.abs(z) > 1e-15) == 1
    np.testing.assert_allclose(T.chi_from_unitary(Q.PHASE_GATE), S_CHI, atol=1e-15)


def test_chi_from_unitary_rejects_non_unitary():
    with pytest.raises(DomainError):
        T.chi_from_unitary(np.diag([1, 0.5]))


def test_phase_gate_chi_action_identity():
    rng = np.random.default_rng(8)
    s = Q.PHASE_GATE
    for _ in range(100):
        rho = Q.random_density_matrix(rng, dim=2)
        assert np.abs(T.apply_chi(S_CHI, rho) - s @ rho @ s.conj().T).max() < 1e-10


@pytest.mark.parametrize("name", ["I", "X", "Y", "Z", "S", "H"])
def test_chi_from_unitary_reproduces_channel(name):
    k = {"I": Q.I2, "X": Q.X, "Y": Q.Y, "Z": Q.Z, "S": Q.PHASE_GATE, "H": Q.HADAMARD_LIKE}[name]
    chi = T.chi_from_unitary(k)
    rng = np.random.default_rng(9)
    for _ in range(10):
        rho = Q.random_density_matrix(rng, dim=2)
        np.testing.assert_allclose(T.apply_chi(chi, rho), k @ rho @ k.conj().T, atol=1e-12)
    assert np.abs(T.trace_preservation_defect(chi)).max() < 1e-14
    assert np.trace(chi).real == pytest.approx(1)


def test_depolarizing_chi_matches_kraus_oracle():
    p = 0.2
    kraus = [np.sqrt(1 - 3 * p / 4) * Q.I2] + [np.sqrt(p / 4) * s for s in (Q.X, Q.Y, Q.Z)]
    np.testing.assert_allclose(T.depolarizing_chi(p), kraus_chi(kraus), atol=1e-15)
    rho = Q.random_density_matrix(np.random.default_rng(10), dim=2)
    np.testing.assert_allclose(T.apply_chi(T.depolarizing_chi(p), rho), Q.depolarize(rho, p), atol=1e-15)


@pytest.mark.parametrize("name", ["I", "S", "Z", "H"])
def test_process_tomography_noiseless_unitaries(name):
    k = {"I": Q.I2, "S": Q.PHASE_GATE, "Z": Q.Z, "H": Q.HADAMARD_LIKE}[name]
    chi = T.process_tomography(T.process_counts(lambda r: k @ r @ k.conj().T))
    assert np.abs(chi.matrix - T.chi_from_unitary(k)).max() < 1e-3
    assert chi.tp_defect < 1e-6
    assert chi.psd_margin >= -1e-8


def test_process_tomography_phase_gate_matches_matrix():
    s = Q.PHASE_GATE
    chi = T.process_tomography(T.process_counts(lambda r: s @ r @ s.conj().T))
    assert np.abs(chi.matrix - S_CHI).max() < 1e-3
    assert T.process_fidelity(chi.matrix, S_CHI) > 0.999
    np.testing.assert_allclose(T.nearest_unitary(chi.matrix), s, atol=1e-3)


def test_process_tomography_depolarizing():
    p = 0.1
    chi = T.process_tomography(T.process_counts(lambda r: Q.depolarize(r, p)))
    assert np.abs(chi.matrix - np.diag([1 - 3 * p / 4, p / 4, p / 4, p / 4])).max() < 1e-3


def test_process_tomography_missing_preparation():
    recs = T.process_counts(lambda r: r)
    del recs["D"]
    with pytest.raises(DomainError):
        T.process_tomography(recs)


def test_process_tomography_infeasible_raises_with_residuals():
    recs = T.process_counts(lambda r: r)
    h = recs["H"]
    recs["H"] = M.CountsTable(h.settings, 3 * h.expected, h.exposure)
    with pytest.raises(ConstrainedFitError) as info:
        T.process_tomography(recs, initial_weight=1e-12, max_weight=1e-10)
    assert info.value.residuals["tp_defect"] > 1e-6


def test_process_jacobian_matches_finite_differences():
    s = Q.PHASE_GATE
    recs = T.process_counts(lambda r: Q.depolarize(s @ r @ s.conj().T, 0.1))
    prob = T._ProcessProblem(recs)
    rng = np.random.default_rng(12)
    h = 1e-6
    for _ in range(3):
        x = rng.normal(size=32) * 0.5
        j = prob.jacobian(x, 10.0)
        fd = np.column_stack([(prob.residuals(x + h * e, 10.0) - prob.residuals(x - h * e, 10.0)) / (2 * h) for e in np.eye(32)])
        assert np.linalg.norm(j - fd) < 1e-5 * np.linalg.norm(fd)


def test_process_fidelity_values():
    chi_s, chi_i = T.chi_from_unitary(Q.PHASE_GATE), T.chi_from_unitary(Q.I2)
    assert T.process_fidelity(chi_s, chi_s) == pytest.approx(1, abs=1e-14)
    overlap = abs(np.trace(Q.PHASE_GATE @ Q.I2.conj().T) / 2) ** 2
    assert overlap == pytest.approx(0.5)
    assert T.process_fidelity(chi_s, chi_i) == pytest.approx(0.5, abs=1e-14)
    # mixed ideal goes through the Uhlmann branch
    assert T.process_fidelity(T.depolarizing_chi(0.3), T.depolarizing_chi(0.3)) == pytest.approx(1, abs=1e-8)


def test_process_fidelity_convention_mismatch():
    with pytest.raises(DomainError):
        T.process_fidelity(2 * S_CHI, S_CHI)


def test_process_tomography_poisson_median_fidelity():
    s = Q.PHASE_GATE
    clean = T.process_counts(lambda r: s @ r @ s.conj().T, exposure=1e4)
    fids = []
    for seed in range(50):
        recs = {k: M.sample_counts(t, seed * 4 + j) for j, (k, t) in enumerate(clean.items())}
        fids.append(T.process_fidelity(T.process_tomography(recs).matrix, S_CHI))
    assert np.median(fids) > 0.98
