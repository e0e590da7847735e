import numpy as np
import pytest

from ringctrl import (
    ConvergenceError,
    CouplingProfile,
    LaxEigenvector,
    Q_GAUGE,
    RingConfig,
    SITE_GAUGE,
    antiperiodic_shift,
    couplings_from_lax,
    hamiltonian_matrix,
    hermitian_defect,
    initial_guess_fit,
    partial_theta,
    q_transform,
    random_symmetric_guess,
    ring_neighbor,
    wavefunction_from_lax,
)

from conftest import random_valid_eigenvector


# ---------------------------------------------------------------- config ---

def test_config_validation():
    RingConfig(3)
    with pytest.raises(ValueError):
        RingConfig(2)
    with pytest.raises(ValueError):
        RingConfig(15, lax_scale=0.0)
    with pytest.raises(ValueError):
        RingConfig(15, transfer_time=-1.0)
    with pytest.raises(ValueError):
        RingConfig(15, boundary="periodic")


def test_config_require_odd():
    RingConfig(7).require_odd()
    with pytest.raises(ValueError):
        RingConfig(8).require_odd()


# --------------------------------------------------------- ring_neighbor ---

def test_ring_neighbor_interior():
    assert ring_neighbor(3, +1, RingConfig(15)) == (4, 1)
    assert ring_neighbor(7, -1, RingConfig(15)) == (6, 1)


def test_ring_neighbor_seam():
    # crossing the seam flips the sign in both directions
    assert ring_neighbor(15, +1, RingConfig(15)) == (1, -1)
    assert ring_neighbor(1, -1, RingConfig(15)) == (15, -1)


def test_ring_neighbor_errors():
    cfg = RingConfig(5)
    with pytest.raises(ValueError):
        ring_neighbor(0, +1, cfg)
    with pytest.raises(ValueError):
        ring_neighbor(6, +1, cfg)
    with pytest.raises(ValueError):
        ring_neighbor(2, 2, cfg)


def test_antiperiodic_shift_matches_ring_neighbor():
    rng = np.random.default_rng(3)
    for n in (3, 4, 7):
        cfg = RingConfig(n)
        v = rng.standard_normal(n)
        for direction in (+1, -1):
            shifted = antiperiodic_shift(v, direction)
            for m in range(1, n + 1):
                idx, sign = ring_neighbor(m, direction, cfg)
                assert shifted[m - 1] == sign * v[idx - 1]


def test_antiperiodic_shift_period_two_n():
    v = np.arange(1.0, 6.0)
    np.testing.assert_array_equal(antiperiodic_shift(v, 5), -v)
    np.testing.assert_array_equal(antiperiodic_shift(v, 10), v)
    np.testing.assert_array_equal(antiperiodic_shift(antiperiodic_shift(v, 3), -3), v)


# ------------------------------------------------------------ q_transform ---

def test_q_transform_examples():
    np.testing.assert_array_equal(
        q_transform(np.array([1, 0, 0, 0])), np.array([1, 0, 0, 0], dtype=complex)
    )
    np.testing.assert_array_equal(
        q_transform(np.array([0, 1, 0, 0])), np.array([0, 1j, 0, 0])
    )


def test_q_transform_roundtrip_is_exact():
    rng = np.random.default_rng(1)
    for n in (1, 4, 9, 16):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        back = q_transform(q_transform(v, "forward"), "inverse")
        np.testing.assert_array_equal(back, v)  # phases are exact +-1, +-i


def test_q_transform_is_unitary():
    rng = np.random.default_rng(2)
    v = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    assert np.linalg.norm(q_transform(v)) == pytest.approx(np.linalg.norm(v), abs=1e-14)


def test_q_transform_bad_direction():
    with pytest.raises(ValueError):
        q_transform(np.ones(3), "backward")


# ---------------------------------------------------------- partial_theta ---

def direct_theta_sum(p, q, terms=200):
    # independent oracle: high-precision term-by-term evaluation
    import mpmath

    with mpmath.workdps(60):
        total = mpmath.fsum(
            mpmath.mpf(p) ** m * mpmath.mpf(q) ** (m * m) for m in range(terms)
        )
        return float(total)


def test_partial_theta_trivial():
    assert partial_theta(0.0, 1 / np.e) == 1.0


def test_partial_theta_against_direct_sum():
    q = 1 / np.e
    for p in (1.0, 4.0, 0.3, -2.0, 49.0):
        assert partial_theta(p, q) == pytest.approx(direct_theta_sum(p, q), rel=1e-14)


def test_partial_theta_frozen_values():
    # regression constants computed with direct_theta_sum
    assert partial_theta(1.0, 1 / np.e) == pytest.approx(1.3863186024133263, abs=1e-15)
    assert partial_theta(4.0, 1 / np.e) == pytest.approx(2.772495037593996, abs=1e-14)


def test_partial_theta_validation():
    with pytest.raises(ValueError):
        partial_theta(1.0, 0.0)
    with pytest.raises(ValueError):
        partial_theta(1.0, 1.5)
    with pytest.raises(ValueError):
        partial_theta(np.inf, 0.5)
    with pytest.raises(ConvergenceError):
        partial_theta(2.0, 0.999999, tol=1e-300, max_terms=50)


# ---------------------------------------------------------- LaxEigenvector ---

def test_eigenvector_defects_and_validation():
    a = LaxEigenvector(np.array([np.sqrt(0.5), 0.0]), np.array([0.0, np.sqrt(0.5)]))
    assert max(a.defects()) < 1e-15
    a.require_valid(1e-12)
    bad = LaxEigenvector(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        bad.require_valid(1e-10)


def test_eigenvector_complex_roundtrip():
    rng = np.random.default_rng(7)
    a = random_valid_eigenvector(6, rng)
    b = LaxEigenvector.from_complex(a.as_complex())
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    z = a.as_real_pair()
    c = LaxEigenvector.from_real_pair(z)
    np.testing.assert_array_equal(c.x, a.x)


def test_eigenvector_shape_mismatch():
    with pytest.raises(ValueError):
        LaxEigenvector(np.zeros(3), np.zeros(4))


# --------------------------------------------------- wavefunction_from_lax ---

def test_wavefunction_single_site():
    a = LaxEigenvector(np.array([np.sqrt(0.5), 0.0, 0.0]),
                       np.array([0.0, 0.5, -0.5]))
    psi = wavefunction_from_lax(a, Q_GAUGE)
    np.testing.assert_allclose(psi.amplitudes, [1.0, 0.0, 0.0], atol=1e-15)
    assert psi.amplitudes.imag.max() == 0.0


def test_wavefunction_norm_identity():
    # <x|x> = 1/2 within 1e-13 implies unit norm within 1e-12
    rng = np.random.default_rng(11)
    for n in (3, 8, 15):
        a = random_valid_eigenvector(n, rng)
        psi = wavefunction_from_lax(a, Q_GAUGE)
        assert psi.norm_defect() < 1e-12


def test_wavefunction_site_gauge_same_populations():
    rng = np.random.default_rng(12)
    a = random_valid_eigenvector(9, rng)
    pq = wavefunction_from_lax(a, Q_GAUGE).populations()
    ps = wavefunction_from_lax(a, SITE_GAUGE).populations()
    np.testing.assert_allclose(pq, ps, atol=1e-15)


def test_wavefunction_site_gauge_is_forward_dressing():
    rng = np.random.default_rng(13)
    a = random_valid_eigenvector(7, rng)
    psi_q = wavefunction_from_lax(a, Q_GAUGE).amplitudes
    psi_s = wavefunction_from_lax(a, SITE_GAUGE).amplitudes
    np.testing.assert_array_equal(psi_s, q_transform(psi_q, "forward"))


def test_wavefunction_rejects_bad_norm():
    a = LaxEigenvector(np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.5, -0.5]))
    with pytest.raises(ValueError):
        wavefunction_from_lax(a, Q_GAUGE)


# ------------------------------------------------------ couplings_from_lax ---

def test_couplings_zero_for_real_state():
    cfg = RingConfig(6, lax_scale=2.0)
    a = LaxEigenvector(np.full(6, np.sqrt(1 / 12)), np.zeros(6))
    assert couplings_from_lax(a, cfg).norm == 0.0


def test_couplings_three_site_example():
    cfg = RingConfig(3, lax_scale=1.0)
    a = LaxEigenvector(np.array([np.sqrt(0.5), 0.0, 0.0]),
                       np.array([0.0, np.sqrt(0.5), 0.0]))
    j = couplings_from_lax(a, cfg)
    np.testing.assert_allclose(j.j, [-1.0, 0.0, 0.0], atol=1e-15)


def test_couplings_brute_force_indexing():
    # independent route: explicit 1-based formula with ring_neighbor signs
    rng = np.random.default_rng(21)
    for n in (3, 5, 8):
        cfg = RingConfig(n, lax_scale=1.7)
        a = random_valid_eigenvector(n, rng)
        j = couplings_from_lax(a, cfg).j
        for m in range(1, n + 1):
            idx, sign = ring_neighbor(m, +1, cfg)
            xp = sign * a.x[idx - 1]
            yp = sign * a.y[idx - 1]
            expected = 2.0 * cfg.lax_scale * (xp * a.y[m - 1] - a.x[m - 1] * yp)
            assert j[m - 1] == pytest.approx(expected, abs=1e-15)


def test_couplings_antisymmetric_under_xy_swap():
    rng = np.random.default_rng(22)
    cfg = RingConfig(9, lax_scale=0.8)
    a = random_valid_eigenvector(9, rng)
    swapped = LaxEigenvector(a.y.copy(), a.x.copy())
    np.testing.assert_allclose(
        couplings_from_lax(swapped, cfg).j, -couplings_from_lax(a, cfg).j, atol=1e-15
    )


# ----------------------------------------------------- hamiltonian_matrix ---

def test_hamiltonian_zero():
    h = hamiltonian_matrix(CouplingProfile(np.zeros(5)), SITE_GAUGE)
    assert np.all(h == 0)


def test_hamiltonian_placement_three_sites():
    h = hamiltonian_matrix(CouplingProfile(np.array([1.0, 0.0, 0.0])), SITE_GAUGE)
    expected = np.zeros((3, 3), dtype=complex)
    expected[0, 1] = expected[1, 0] = 1.0
    np.testing.assert_array_equal(h, expected)


@pytest.mark.parametrize("gauge", [SITE_GAUGE, Q_GAUGE])
def test_hamiltonian_structure(gauge):
    rng = np.random.default_rng(31)
    for n in (3, 4, 9):
        j = rng.standard_normal(n)
        h = hamiltonian_matrix(CouplingProfile(j), gauge)
        assert hermitian_defect(h) == 0.0
        assert abs(np.trace(h)) == 0.0
        # Tr H^2 = 2 sum J^2 exactly up to rounding
        assert np.trace(h @ h).real == pytest.approx(2 * np.sum(j**2), rel=1e-14)
        if gauge == Q_GAUGE:
            assert np.max(np.abs(h.real)) == 0.0
        else:
            assert np.max(np.abs(h.imag)) == 0.0


def test_hamiltonian_bad_gauge():
    with pytest.raises(ValueError):
        hamiltonian_matrix(CouplingProfile(np.ones(4)), "weyl")


# ------------------------------------------------------- guess generators ---

def test_initial_guess_fit_symmetery_and_norms():
    for n in (3, 7, 15, 21):
        a = initial_guess_fit(RingConfig(n))
        np.testing.assert_array_equal(a.x, a.x[::-1])
        np.testing.assert_array_equal(a.y, -a.y[::-1])
        assert a.y[(n - 1) // 2] == 0.0
        dx, dy, dxy = a.defects()
        assert max(dx, dy) < 1e-12
        assert dxy < 1e-15  # exact pair cancellation up to summation order


def test_initial_guess_fit_shapes():
    a = initial_guess_fit(RingConfig(15))
    mid = 7  # 0-based middle site
    assert np.argmax(a.x) == mid
    assert np.all(np.diff(a.x[: mid + 1]) > 0)  # monotone rise to the peak
    assert a.y[0] < 0 < a.y[-1]  # antisymmetric kink with non-decaying tails
    assert abs(a.y[0]) > 0.05


def test_initial_guess_fit_even_n_rejected():
    with pytest.raises(ValueError):
        initial_guess_fit(RingConfig(8))


def test_random_symmetric_guess_deterministic():
    cfg = RingConfig(9)
    a = random_symmetric_guess(cfg, seed=5)
    b = random_symmetric_guess(cfg, seed=5)
    c = random_symmetric_guess(cfg, seed=6)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    assert np.any(a.x != c.x)
    np.testing.assert_array_equal(a.x, a.x[::-1])
    assert max(a.defects()) < 1e-12
