import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nems_chaos.cantilever import (
    K_CRITICAL,
    TWO_PI,
    EnsembleSpec,
    MapParams,
    PhasePoint,
    action_from_xp,
    chaos_parameter,
    estimate_diffusion,
    fold_trajectory,
    iterate_ensemble,
    iterate_trajectory,
    parity_fold,
    reconstruct_xp,
    standard_map_step,
)
from nems_chaos.errors import DomainError

finite = st.floats(-50, 50, allow_nan=False)
angles = st.floats(0, TWO_PI, allow_nan=False, exclude_max=True)


def test_step_at_zero_angle():
    p = standard_map_step(PhasePoint(1.0, 0.0), 0.5)
    assert p.action == 1.0
    assert p.angle == pytest.approx(1.0, abs=1e-15)


def test_step_at_quarter_turn():
    p = standard_map_step(PhasePoint(0.0, math.pi / 2), 5.0)
    assert p.action == pytest.approx(-5.0, abs=1e-15)
    assert p.angle == pytest.approx((math.pi / 2 - 5.0) % TWO_PI, abs=1e-15)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_step_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        standard_map_step(PhasePoint(bad, 0.1), 1.0)
    with pytest.raises(DomainError):
        standard_map_step(PhasePoint(0.1, bad), 1.0)
    with pytest.raises(DomainError):
        standard_map_step(PhasePoint(0.1, 0.1), bad)


def _step_unwrapped(I, th, K):
    I1 = I - K * np.sin(th)
    return I1, th + I1


def test_jacobian_determinant_is_one():
    # complex-step derivatives of the unwrapped map: exact to rounding, no cancellation
    rng = np.random.default_rng(7)
    h = 1e-30
    for _ in range(1000):
        I, th = rng.uniform(-10, 10), rng.uniform(0, TWO_PI)
        K = rng.uniform(0, 10)
        dI = [v.imag / h for v in _step_unwrapped(I + 1j * h, th, K)]
        dth = [v.imag / h for v in _step_unwrapped(I, th + 1j * h, K)]
        det = dI[0] * dth[1] - dth[0] * dI[1]
        assert abs(det - 1.0) < 1e-12
        p = standard_map_step(PhasePoint(I, th), K)
        I1, th1 = _step_unwrapped(I, th, K)
        assert p.action == I1
        assert abs(math.remainder(p.angle - th1, TWO_PI)) < 1e-12


@given(finite, angles, st.floats(0, 20, allow_nan=False), st.integers(0, 200))
@settings(max_examples=60, deadline=None)
def test_angles_reduced_and_actions_finite(I, th, K, n):
    traj = iterate_trajectory(PhasePoint(I, th), K, n)
    assert len(traj) == n + 1
    assert np.all((traj.angle >= 0) & (traj.angle < TWO_PI))
    assert np.all(np.isfinite(traj.action))


def test_iterate_zero_kicks_returns_start():
    p0 = PhasePoint(0.3, 0.1)
    traj = iterate_trajectory(p0, 5.0, 0)
    assert list(traj) == [p0]


def test_iterate_matches_repeated_step():
    traj = iterate_trajectory(PhasePoint(0.3, 0.1), 2.0, 50)
    p = PhasePoint(0.3, 0.1)
    for q in traj[1:]:
        p = standard_map_step(p, 2.0)
        assert q == p


def test_iterate_rejects_negative_count():
    with pytest.raises(DomainError):
        iterate_trajectory(PhasePoint(0.3, 0.1), 1.0, -1)


def test_regular_orbit_bounded():
    traj = iterate_trajectory(PhasePoint(0.3, 0.1), 0.5, 10_000)
    assert np.max(np.abs(traj.action - 0.3)) < 1.0


def test_parity_fold_commutes_with_map():
    # (I, th) -> (-I, -th) is a symmetry of the standard map
    rng = np.random.default_rng(3)
    for _ in range(200):
        p = PhasePoint(rng.uniform(-5, 5), rng.uniform(0, TWO_PI))
        mirrored = PhasePoint(-p.action, (-p.angle) % TWO_PI)
        a = standard_map_step(mirrored, 3.0)
        b = standard_map_step(p, 3.0)
        assert a.action == pytest.approx(-b.action, abs=1e-12)
        assert abs(math.remainder(a.angle + b.angle, TWO_PI)) < 1e-12


def test_parity_fold_values():
    assert parity_fold(PhasePoint(2.0, 1.0)) == PhasePoint(2.0, 1.0)
    q = parity_fold(PhasePoint(-2.0, 1.0))
    assert q.action == 2.0 and q.angle == pytest.approx(TWO_PI - 1.0)
    folded = fold_trajectory(iterate_trajectory(PhasePoint(0.0, math.pi / 2), 5.0, 100))
    assert np.all(folded.action >= 0)


def test_chaos_parameter_zero_drive():
    mp = MapParams(kick_period=1.0, drive_strength=0.0, nonlinearity=2.0, mass=1.0, resonator_freq=1.0, initial_action=1.0)
    assert chaos_parameter(mp).K == 0.0


def _real_unit_set(eps):
    m = 6e-17
    x0 = a0 = 5e-3
    T = 10e-6
    w = 2 * math.pi * 5e6
    mu = w**2 * m / (2 * a0**2)
    I0 = 0.5 * m * x0**2 * w
    return MapParams(kick_period=T, drive_strength=eps, nonlinearity=mu, mass=m, resonator_freq=w, initial_action=I0)


@pytest.mark.parametrize("eps", [0.003, 0.0003])
def test_chaos_parameter_real_units(eps):
    expected = eps * 10e-6 * 1.5 * math.pi * 2 * math.pi * 5e6
    crit = chaos_parameter(_real_unit_set(eps))
    assert crit.K == pytest.approx(expected, rel=1e-12)
    assert crit.merging_threshold == K_CRITICAL


def test_chaos_parameter_real_unit_magnitudes():
    strong = chaos_parameter(_real_unit_set(0.003))
    weak = chaos_parameter(_real_unit_set(0.0003))
    assert strong.K == pytest.approx(4.4413, abs=1e-3) and strong.regime == "chaotic"
    assert weak.K == pytest.approx(0.44413, abs=1e-4) and weak.regime == "regular"


def test_chaos_parameter_consistency():
    mp = _real_unit_set(0.003)
    K = chaos_parameter(mp).K
    ok = MapParams(stochasticity=K * (1 + 1e-12), **mp.physical_fields())
    assert chaos_parameter(ok).K == ok.stochasticity
    with pytest.raises(DomainError):
        chaos_parameter(MapParams(stochasticity=5.0, **mp.physical_fields()))


def test_chaos_parameter_missing_fields():
    with pytest.raises(DomainError, match="missing"):
        chaos_parameter(MapParams(kick_period=1.0))
    assert chaos_parameter(MapParams(stochasticity=0.5)).regime == "regular"


def test_reconstruct_examples():
    assert reconstruct_xp(PhasePoint(0.0, 1.3), 1.0, 1.0) == (0.0, -0.0)
    x, p = reconstruct_xp(PhasePoint(2.0, 0.0), 1.0, 1.0)
    assert x == pytest.approx(2.0) and p == pytest.approx(0.0)


def test_reconstruct_negative_action():
    assert reconstruct_xp(PhasePoint(-1e-13, 0.2), 1.0, 1.0) == (0.0, -0.0)
    with pytest.raises(DomainError):
        reconstruct_xp(PhasePoint(-1e-6, 0.2), 1.0, 1.0)


@given(st.floats(0, 100), angles, st.floats(0.1, 10), st.floats(0.1, 10))
@settings(max_examples=200, deadline=None)
def test_reconstruct_round_trip(I, th, m, w):
    x, p = reconstruct_xp(PhasePoint(I, th), m, w)
    assert action_from_xp(x, p, m, w) == pytest.approx(I, abs=1e-12, rel=1e-12)


def test_ensemble_deterministic():
    es = EnsembleSpec(50, 20, seed=11)
    assert np.array_equal(iterate_ensemble(es, 5.0), iterate_ensemble(es, 5.0))
    assert not np.array_equal(iterate_ensemble(es, 5.0), iterate_ensemble(EnsembleSpec(50, 20, seed=12), 5.0))


def test_ensemble_fixed_angle():
    a = iterate_ensemble(EnsembleSpec(10, 5, seed=0, fixed_angle=0.4), 2.0)
    assert np.all(a == a[:, :1])


def test_diffusion_one_kick():
    est = estimate_diffusion(EnsembleSpec(20_000, 1, seed=1), 5.0)
    assert abs(est.A) < 3 * est.A_stderr
    assert abs(est.B - 12.5) < 3 * est.B_stderr
    assert not est.regular_regime


def test_diffusion_zero_K():
    est = estimate_diffusion(EnsembleSpec(100, 3, seed=1), 0.0)
    assert est.A == 0.0 and est.B == 0.0 and est.regular_regime


@pytest.mark.slow
def test_diffusion_fit_slope():
    est = estimate_diffusion(EnsembleSpec(10_000, 200, seed=2), 5.0)
    assert 12.5 / 2 < est.fit_D < 12.5 * 2


def test_diffusion_superlinear_vs_regular():
    chaotic = iterate_ensemble(EnsembleSpec(1000, 1000, seed=4, initial_action=0.3), 5.0)
    regular = iterate_ensemble(EnsembleSpec(1000, 1000, seed=4, initial_action=0.3), 0.5)
    msd = lambda a: np.mean((a[-1] - a[0]) ** 2)
    assert msd(chaotic) / msd(regular) > 10
