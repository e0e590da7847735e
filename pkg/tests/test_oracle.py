import numpy as np
import pytest

from ringctrl import (
    LaxEigenvector,
    Q_GAUGE,
    RingConfig,
    SITE_GAUGE,
    WaveFunction,
    couplings_from_lax,
    hamiltonian_matrix,
    integrate,
    q_transform,
    wavefunction_from_lax,
)
from ringctrl.oracle import (
    LaxMatrixState,
    check_bvp_conditions,
    chiral_anticommutation_defect,
    chiral_operator,
    complement_basis,
    conjugate_pair_defect,
    coupling_basis,
    evolve_lax_matrix,
    lax_matrix,
    nearest_neighbor_mask,
    project_hamiltonian,
    schrodinger_propagate,
    subspace_closure_check,
)

from conftest import random_valid_eigenvector


# ----------------------------------------------------------- rank-2 state ---

def test_lax_matrix_structure():
    rng = np.random.default_rng(1)
    for n in (3, 8, 15):
        a = random_valid_eigenvector(n, rng)
        state = LaxMatrixState(lax_matrix(a, 1.6))
        herm, tr, realpart, rank2, eigdef = state.structure_defects(1.6)
        assert herm < 1e-15
        assert tr < 1e-15
        assert realpart < 1e-15  # purely imaginary in the q gauge
        assert rank2 < 1e-14
        assert eigdef < 1e-14


def test_project_hamiltonian_equals_eigenvector_route():
    rng = np.random.default_rng(2)
    for n in (3, 5, 8, 15):
        cfg = RingConfig(n, lax_scale=2.2)
        for _ in range(25):
            a = random_valid_eigenvector(n, rng)
            j_matrix = project_hamiltonian(
                LaxMatrixState(lax_matrix(a, cfg.lax_scale)), cfg
            ).j
            j_vector = couplings_from_lax(a, cfg).j
            np.testing.assert_allclose(j_matrix, j_vector, atol=1e-10)


def test_project_hamiltonian_zero_nn_sector():
    # invariant operator with empty nearest-neighbor entries -> zero controls
    basis = dict(coupling_basis(5, Q_GAUGE))
    lmat = 3.0 * basis[(1, 3)] + 0.5 * basis[(2, 5)]
    j = project_hamiltonian(LaxMatrixState(lmat), RingConfig(5))
    assert j.norm == 0.0


def test_project_hamiltonian_three_site_example():
    cfg = RingConfig(3, lax_scale=1.0)
    a = LaxEigenvector(np.array([np.sqrt(0.5), 0.0, 0.0]),
                       np.array([0.0, np.sqrt(0.5), 0.0]))
    j = project_hamiltonian(LaxMatrixState(lax_matrix(a, 1.0)), cfg)
    np.testing.assert_allclose(j.j, [-1.0, 0.0, 0.0], atol=1e-15)


def test_nearest_neighbor_mask_matches_q_hamiltonian():
    rng = np.random.default_rng(3)
    for n in (3, 7, 15):
        cfg = RingConfig(n, lax_scale=1.3)
        a = random_valid_eigenvector(n, rng)
        lmat = lax_matrix(a, cfg.lax_scale)
        hq = hamiltonian_matrix(couplings_from_lax(a, cfg), Q_GAUGE, cfg)
        np.testing.assert_allclose(nearest_neighbor_mask(lmat), hq, atol=1e-14)


# -------------------------------------------------------- matrix evolution ---

def test_evolve_constant_when_nn_sector_empty():
    basis = dict(coupling_basis(5, Q_GAUGE))
    lmat = 1.2 * basis[(1, 3)] - 0.4 * basis[(1, 4)]
    evo = evolve_lax_matrix(LaxMatrixState(lmat), 1.0, RingConfig(5), samples=5)
    assert np.max(np.abs(evo.l_matrices[-1] - lmat)) < 1e-12
    assert evo.unitarity_defect() < 1e-10


@pytest.mark.parametrize("n", [3, 5, 7])
def test_matrix_oracle_agrees_with_reduced_path(n):
    rng = np.random.default_rng(40 + n)
    cfg = RingConfig(n, lax_scale=1.0)
    a0 = random_valid_eigenvector(n, rng)
    t_eval = np.linspace(0.0, 1.0, 11)
    evo = evolve_lax_matrix(LaxMatrixState(lax_matrix(a0, 1.0)), 1.0, cfg,
                            rtol=1e-12, atol=1e-12, t_eval=t_eval)
    traj, _ = integrate(a0, 1.0, cfg, rtol=1e-12, atol=1e-12, t_eval=t_eval)
    for i in range(len(t_eval)):
        rebuilt = lax_matrix(traj.state(i), 1.0)
        assert np.max(np.abs(rebuilt - evo.l_matrices[i])) < 1e-8
    assert evo.eigenvalue_drift() < 1e-8
    assert evo.rank2_defect() < 1e-8
    assert evo.conjugation_defect() < 1e-8
    assert evo.unitarity_defect() < 1e-8


def test_conjugate_pair_eigenvectors():
    rng = np.random.default_rng(5)
    for n in (3, 9, 15):
        a = random_valid_eigenvector(n, rng)
        assert conjugate_pair_defect(LaxMatrixState(lax_matrix(a, 2.0)), 2.0) < 1e-8


# ----------------------------------------------------------- BVP identity ---

def test_bvp_conditions_vanish_on_structure():
    rng = np.random.default_rng(6)
    a = random_valid_eigenvector(9, rng)
    state = LaxMatrixState(lax_matrix(a, 1.5))
    psi = wavefunction_from_lax(a, Q_GAUGE)
    plp, qlq = check_bvp_conditions(state, psi)
    assert plp < 1e-13
    assert qlq < 1e-13


def test_bvp_conditions_discriminate():
    # plugging the eigenvector itself gives P L P = l0 P, clearly nonzero
    rng = np.random.default_rng(7)
    a = random_valid_eigenvector(9, rng)
    state = LaxMatrixState(lax_matrix(a, 1.5))
    psi_eig = WaveFunction(a.as_complex(), Q_GAUGE)
    plp, _ = check_bvp_conditions(state, psi_eig)
    assert plp == pytest.approx(1.5, rel=1e-10)


def test_bvp_conditions_zero_matrix():
    psi = WaveFunction(np.array([1.0, 0, 0], dtype=complex), Q_GAUGE)
    plp, qlq = check_bvp_conditions(LaxMatrixState(np.zeros((3, 3))), psi)
    assert plp == 0.0 and qlq == 0.0


def test_bvp_conditions_require_normalized_state():
    psi = WaveFunction(np.array([2.0, 0, 0], dtype=complex), Q_GAUGE)
    with pytest.raises(ValueError):
        check_bvp_conditions(LaxMatrixState(np.zeros((3, 3))), psi)


# ------------------------------------------------- Schrodinger propagation ---

def test_schrodinger_constant_without_couplings():
    cfg = RingConfig(5)
    psi0 = WaveFunction(np.array([0, 0, 1, 0, 0], dtype=complex), SITE_GAUGE)
    times = np.linspace(0.0, 1.0, 9)
    js = np.zeros((9, 5))
    _, psis, norm_defect = schrodinger_propagate(psi0, times, js, cfg)
    np.testing.assert_allclose(psis[-1], psi0.amplitudes, atol=1e-12)
    assert norm_defect < 1e-12


def test_schrodinger_norm_conserved_random_drive():
    rng = np.random.default_rng(8)
    cfg = RingConfig(6)
    amp = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    amp /= np.linalg.norm(amp)
    times = np.linspace(0.0, 2.0, 41)
    js = 0.3 * np.sin(np.outer(times, np.arange(1, 7)))
    _, psis, norm_defect = schrodinger_propagate(
        WaveFunction(amp, SITE_GAUGE), times, js, cfg, rtol=1e-11, atol=1e-11
    )
    assert norm_defect < 1e-9


def test_schrodinger_validates_inputs():
    cfg = RingConfig(5)
    psi0 = WaveFunction(np.array([1, 0, 0, 0, 0], dtype=complex), SITE_GAUGE)
    with pytest.raises(ValueError):
        schrodinger_propagate(psi0, np.array([0.0, 1.0]), np.zeros((2, 5)), cfg)


def test_schrodinger_matches_reduced_wavefunction(sol15):
    # two independent evolution routes for the same state: driving the
    # Schrodinger equation with the reconstructed controls vs reading
    # sqrt(2) x(t) off the reduced trajectory; they agree up to global sign
    traj = sol15.trajectory
    psi0 = wavefunction_from_lax(sol15.a0, Q_GAUGE)
    t_eval = traj.times[:: len(traj.times) // 10]
    _, psis, _ = schrodinger_propagate(
        psi0, traj.times, traj.couplings(), sol15.config,
        rtol=1e-12, atol=1e-12, t_eval=t_eval,
    )
    stride = len(traj.times) // 10
    worst = 0.0
    for k, t in enumerate(t_eval):
        ref = np.sqrt(2.0) * traj.xs[k * stride].astype(complex)
        sign = np.sign(np.vdot(ref, psis[k]).real) or 1.0
        worst = max(worst, float(np.max(np.abs(sign * psis[k] - ref))))
    assert worst < 1e-6


# -------------------------------------------------------- operator algebra ---

def test_basis_orthonormal_and_complete():
    n = 6
    a_basis = [m for _, m in coupling_basis(n)]
    b_basis = [m for _, m in complement_basis(n)]
    assert len(a_basis) == n * (n - 1) // 2
    assert len(b_basis) == (n - 1) * (n + 2) // 2
    assert len(a_basis) + len(b_basis) == n * n - 1
    full = a_basis + b_basis
    gram = np.array([[np.trace(p.conj().T @ q).real for q in full] for p in full])
    np.testing.assert_allclose(gram, np.eye(len(full)), atol=1e-13)
    # every basis element is Hermitian and traceless
    for m in full:
        assert np.max(np.abs(m - m.conj().T)) < 1e-15
        assert abs(np.trace(m)) < 1e-15


def test_random_traceless_hermitian_expands_exactly():
    rng = np.random.default_rng(9)
    n = 5
    full = [m for _, m in coupling_basis(n)] + [m for _, m in complement_basis(n)]
    h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = h + h.conj().T
    h -= np.trace(h) / n * np.eye(n)
    recon = sum(np.trace(b.conj().T @ h) * b for b in full)
    np.testing.assert_allclose(recon, h, atol=1e-12)


def test_single_commutator_closure():
    # i[A_{1,2}, A_{2,3}] lies exactly in the coupling subspace
    basis = dict(coupling_basis(4))
    c = 1j * (basis[(1, 2)] @ basis[(2, 3)] - basis[(2, 3)] @ basis[(1, 2)])
    # it equals A_{1,3}/sqrt(2) exactly
    coeffs = {lbl: np.trace(m.conj().T @ c).real for lbl, m in coupling_basis(4)}
    np.testing.assert_allclose(c, coeffs[(1, 3)] * basis[(1, 3)], atol=1e-15)
    assert coeffs[(1, 3)] == pytest.approx(1 / np.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("n", [3, 6, 10, 15])
def test_subspace_closure(n):
    assert subspace_closure_check(n, trials=20, seed=0) < 1e-12


@pytest.mark.parametrize("n", [3, 9, 15])
def test_chiral_anticommutation_exact(n):
    assert chiral_anticommutation_defect(n) == 0.0


def test_chiral_even_range_does_not_anticommute():
    # negative control: even-range elements commute with sigma instead
    basis = dict(coupling_basis(5))
    sigma = chiral_operator(5)
    anti = basis[(1, 3)] @ sigma + sigma @ basis[(1, 3)]
    comm = basis[(1, 3)] @ sigma - sigma @ basis[(1, 3)]
    assert np.max(np.abs(anti)) > 0.5
    assert np.max(np.abs(comm)) == 0.0


def test_q_gauge_basis_pattern():
    # conjugating A_{m,m+1} with the diagonal phase gauge gives the purely
    # imaginary pattern (-i E_{m,m+1} + i E_{m+1,m})/sqrt(2)
    n = 4
    q_basis = dict(coupling_basis(n, Q_GAUGE))
    for m in range(1, n):
        expected = np.zeros((n, n), dtype=complex)
        expected[m - 1, m] = -1j / np.sqrt(2)
        expected[m, m - 1] = 1j / np.sqrt(2)
        np.testing.assert_allclose(q_basis[(m, m + 1)], expected, atol=1e-15)


def test_site_hamiltonian_expands_in_bulk_basis():
    # away from the seam, H = sqrt(2) sum_m J_m A_{m,m+1}
    rng = np.random.default_rng(10)
    n = 7
    cfg = RingConfig(n)
    j = rng.standard_normal(n)
    h = hamiltonian_matrix(j, SITE_GAUGE, cfg)
    basis = dict(coupling_basis(n))
    bulk = np.sqrt(2.0) * sum(j[m - 1] * basis[(m, m + 1)] for m in range(1, n))
    mask = np.ones((n, n), dtype=bool)
    mask[0, n - 1] = mask[n - 1, 0] = False
    np.testing.assert_allclose(h[mask], bulk[mask], atol=1e-14)
