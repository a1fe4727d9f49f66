import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from nems_chaos.cantilever import PhasePoint, iterate_trajectory
from nems_chaos.errors import DomainError, IdentityViolation, NumericalFailure, UnsupportedMode
from nems_chaos.spin import (
    IDENTITY,
    KET_0,
    SIGMA_X,
    SIGMA_Z,
    SpinParams,
    coupling_chi,
    coupling_series,
    eigensystem_table,
    eigensystems,
    evolve_direct,
    evolve_spectral,
    floquet_operator,
    floquet_operators,
    kick_eigensystem,
    kick_hamiltonian,
    propagator,
    spectral_floquet_operator,
    transfer_matrix,
    unitarity_defect,
    verify_normalization_identities,
)

couplings = st.floats(-20, 20, allow_nan=False)
splittings = st.floats(0.01, 5, allow_nan=False)


def test_spin_params_validation():
    with pytest.raises(DomainError):
        SpinParams(level_splitting=0.0)
    with pytest.raises(DomainError):
        SpinParams(kick_period=-1.0)
    with pytest.raises(DomainError):
        SpinParams(coupling=math.nan)


def test_coupling_examples(default_spin):
    assert coupling_chi(PhasePoint(0.0, 0.3), default_spin) == 0.0
    assert coupling_chi(PhasePoint(0.5, 0.0), default_spin) == pytest.approx(1.0)
    assert coupling_chi(PhasePoint(3.0, math.pi / 2), default_spin) == pytest.approx(0.0, abs=1e-15)
    assert coupling_chi(PhasePoint(0.5, math.pi), default_spin) == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        coupling_chi(PhasePoint(-0.1, 0.0), default_spin)


def test_coupling_series_folds_negative_actions(default_spin):
    traj = iterate_trajectory(PhasePoint(0.0, math.pi / 2), 5.0, 200)
    assert np.any(traj.action < 0)
    chis = coupling_series(traj, default_spin)
    assert chis.shape == (200,)
    expected = np.sqrt(2 * np.abs(traj.action[1:])) * np.cos(traj.angle[1:])
    np.testing.assert_allclose(chis, expected, rtol=1e-12, atol=1e-14)


def test_hamiltonian_examples():
    sp = SpinParams(level_splitting=0.4)
    np.testing.assert_allclose(kick_hamiltonian(0.0, sp), np.diag([0.2, -0.2]))
    H = kick_hamiltonian(0.3, sp)
    np.testing.assert_allclose(H, H.conj().T)
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [-0.25, 0.25], atol=1e-15)
    H0 = kick_hamiltonian(0.3, SpinParams(level_splitting=0.4, mixing_angle=0.0))
    np.testing.assert_allclose(H0, np.diag([0.35, -0.35]), atol=1e-15)


def test_floquet_zero_coupling(default_spin):
    np.testing.assert_allclose(floquet_operator(0.0, default_spin), np.diag([np.exp(-0.1j), np.exp(0.1j)]), atol=1e-15)


@given(couplings, splittings, st.floats(0.1, 3), st.floats(0, 2 * math.pi))
@settings(max_examples=200, deadline=None)
def test_floquet_matches_matrix_exponential(chi, w0, T, alpha):
    sp = SpinParams(level_splitting=w0, kick_period=T, mixing_angle=alpha)
    U = floquet_operator(chi, sp)
    ref = scipy.linalg.expm(-1j * T * kick_hamiltonian(chi, sp))
    np.testing.assert_allclose(U, ref, atol=1e-12)
    assert unitarity_defect(U) < 1e-13
    assert abs(np.linalg.det(U) - 1.0) < 1e-14


def test_spectral_operator_matches_exponential():
    sp = SpinParams(level_splitting=0.2, kick_period=1.0)
    es = kick_eigensystem(0.2, sp)
    np.testing.assert_allclose(spectral_floquet_operator(es), floquet_operator(0.2, sp), atol=1e-12)


def test_eigensystem_worked_example():
    es = kick_eigensystem(0.2, SpinParams(level_splitting=0.2))
    assert es.ratio == pytest.approx(1 + math.sqrt(2), rel=1e-14)
    assert es.eta == pytest.approx(math.cos(math.pi / 8), abs=1e-14)
    assert es.xi == pytest.approx(math.sin(math.pi / 8), abs=1e-14)
    assert es.eta == pytest.approx(0.92388, abs=1e-5)
    assert es.xi == pytest.approx(0.38268, abs=1e-5)
    assert es.quasiphase == pytest.approx(math.sqrt(0.08) / 2, rel=1e-15)


def test_eigensystem_residuals_random():
    rng = np.random.default_rng(5)
    sp = SpinParams()
    for chi in rng.normal(0, 3, 1000):
        es = kick_eigensystem(chi, sp)
        H = kick_hamiltonian(chi, sp)
        half = 0.5 * math.hypot(chi, sp.level_splitting)
        assert abs(es.eta**2 + es.xi**2 - 1) < 1e-12
        assert np.linalg.norm(H @ es.plus - half * es.plus) < 1e-12
        assert np.linalg.norm(H @ es.minus + half * es.minus) < 1e-12


def test_eigensystem_degenerate_limit():
    sp = SpinParams()
    es = kick_eigensystem(0.0, sp)
    assert (es.eta, es.xi) == (1.0, 0.0) and es.ratio == math.inf
    assert kick_eigensystem(-0.0, sp).eta == -1.0


def test_eigensystem_continuity_through_zero():
    sp = SpinParams()
    proj = lambda v: np.outer(v, v.conj())
    lo, hi, zero = (kick_eigensystem(c, sp) for c in (-1e-8, 1e-8, 0.0))
    for a, b in ((lo, hi), (lo, zero), (hi, zero)):
        np.testing.assert_allclose(proj(a.plus), proj(b.plus), atol=1e-7)
        np.testing.assert_allclose(proj(a.minus), proj(b.minus), atol=1e-7)
    for es in (lo, hi):
        H = kick_hamiltonian(es.coupling_value, sp)
        half = 0.5 * math.hypot(es.coupling_value, 0.2)
        assert np.linalg.norm(H @ es.plus - half * es.plus) < 1e-12


def test_eigensystem_requires_resonance():
    with pytest.raises(UnsupportedMode):
        kick_eigensystem(0.3, SpinParams(mixing_angle=1.0))
    with pytest.raises(UnsupportedMode):
        evolve_spectral([0.1, 0.2], SpinParams(mixing_angle=1.0))


def test_vectorised_eigensystems_match_scalar():
    sp = SpinParams()
    chis = np.array([-2.0, -1e-13, 0.0, 1e-13, 0.5, 3.0])
    phi, eta, xi = eigensystems(chis, sp)
    for c, p, e, x in zip(chis, phi, eta, xi):
        es = kick_eigensystem(c, sp)
        assert (p, e, x) == pytest.approx((es.quasiphase, es.eta, es.xi), abs=1e-15)
    table = eigensystem_table(chis, sp)
    assert table.shape == (6, 5) and list(table[:, 0]) == [1, 2, 3, 4, 5, 6]


def test_direct_zero_kicks(default_spin):
    out = evolve_direct(KET_0, [], default_spin)
    assert out.shape == (1, 2) and np.array_equal(out[0], KET_0)


def test_direct_uncoupled_phase(default_spin):
    out = evolve_direct(KET_0, np.zeros(40), default_spin)
    n = np.arange(41)
    np.testing.assert_allclose(out[:, 0], np.exp(-0.1j * n), atol=1e-13)
    np.testing.assert_allclose(out[:, 1], 0.0, atol=1e-15)


def test_direct_trajectory_input(default_spin):
    traj = iterate_trajectory(PhasePoint(0.3, 0.1), 5.0, 30)
    a = evolve_direct(KET_0, traj, default_spin)
    b = evolve_direct(KET_0, coupling_series(traj, default_spin), default_spin)
    assert np.array_equal(a, b) and a.shape == (31, 2)


def test_direct_matches_matrix_product():
    rng = np.random.default_rng(9)
    sp = SpinParams(mixing_angle=0.7)
    chis = rng.normal(0, 2, 25)
    ref = KET_0.copy()
    for c in chis:
        ref = scipy.linalg.expm(-1j * kick_hamiltonian(c, sp)) @ ref
    np.testing.assert_allclose(evolve_direct(KET_0, chis, sp)[-1], ref, atol=1e-12)
    np.testing.assert_allclose(propagator(chis, sp) @ KET_0, ref, atol=1e-12)


def test_direct_rejects_bad_input(default_spin):
    with pytest.raises(DomainError):
        evolve_direct(np.array([1.0, 1.0]), [0.1], default_spin)
    with pytest.raises(DomainError):
        evolve_direct(KET_0, [math.nan], default_spin)


def test_direct_flags_norm_drift(default_spin, monkeypatch):
    import nems_chaos.spin as spin

    def leaky(chis, sp):
        U = floquet_operators(chis, sp)
        return U * (1 + 1e-8)

    monkeypatch.setattr(spin, "floquet_operators", leaky)
    with pytest.raises(NumericalFailure):
        spin.evolve_direct(KET_0, np.ones(10), default_spin)


def test_spectral_three_kicks(default_spin):
    rng = np.random.default_rng(1)
    chis = rng.normal(0, 1.5, 3)
    psi, A = evolve_spectral(chis, default_spin)
    np.testing.assert_allclose(psi, evolve_direct(KET_0, chis, default_spin)[-1], atol=1e-12)


def test_spectral_trivial_lengths(default_spin):
    psi, A = evolve_spectral([], default_spin)
    assert np.array_equal(psi, KET_0) and np.array_equal(A, IDENTITY)
    psi1, A1 = evolve_spectral([0.7], default_spin)
    assert np.array_equal(A1, IDENTITY)
    np.testing.assert_allclose(psi1, floquet_operator(0.7, default_spin) @ KET_0, atol=1e-14)


@given(st.lists(couplings, min_size=1, max_size=50), splittings, st.floats(0.2, 3))
@settings(max_examples=100, deadline=None)
def test_spectral_equals_direct(chis, w0, T):
    sp = SpinParams(level_splitting=w0, kick_period=T)
    psi, _ = evolve_spectral(chis, sp)
    np.testing.assert_allclose(psi, evolve_direct(KET_0, chis, sp)[-1], atol=1e-10)


@given(couplings, st.integers(2, 30))
@settings(max_examples=100, deadline=None)
def test_identical_kicks_transfer_matrix_diagonal(chi, n):
    sp = SpinParams()
    phi, eta, xi = eigensystems(np.full(n, chi), sp)
    A = transfer_matrix(phi, eta, xi)
    assert abs(A[0, 1]) < 1e-14 and abs(A[1, 0]) < 1e-14
    assert abs(abs(A[0, 0]) - 1) < 1e-13 and abs(abs(A[1, 1]) - 1) < 1e-13


@given(st.lists(couplings, min_size=1, max_size=60))
@settings(max_examples=50, deadline=None)
def test_composition_determinant(chis):
    U = propagator(chis, SpinParams(mixing_angle=0.4))
    assert abs(abs(np.linalg.det(U)) - 1) < 1e-12 * len(chis)


@pytest.mark.parametrize("count", [1, 2, 3, 5, 12, 20])
def test_normalization_identities(count):
    for seed in range(20):
        report = verify_normalization_identities(count, seed)
        assert report.max_residual < 1e-10


def test_normalization_identities_single_kick():
    r = verify_normalization_identities(1, 0)
    assert r.norm_factored == pytest.approx(1.0, abs=1e-15)


def test_normalization_identities_bad_count():
    with pytest.raises(DomainError):
        verify_normalization_identities(0, 0)
    with pytest.raises(DomainError):
        verify_normalization_identities(21, 0)


def test_normalization_identity_violation_reported():
    with pytest.raises(IdentityViolation):
        verify_normalization_identities(5, 0, tol=0.0)
