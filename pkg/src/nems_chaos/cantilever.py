"""
Classical cantilever dynamics in action-angle variables.

The driven nonlinear cantilever is reduced to the Chirikov standard map

    I_{n+1} = I_n - K sin(theta_n)
    theta_{n+1} = theta_n + I_{n+1}   (mod 2 pi)

with the stochasticity parameter K obtained from the physical constants
by :func:`chaos_parameter`.  The action is kept unwrapped so that
ensemble averages see the diffusive growth; only the angle is reduced.

Random ensembles use numpy's ``default_rng`` (PCG64 bit generator) seeded
explicitly, so a given ``(seed, spec)`` reproduces bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi

#: Stochasticity at which the last rotational invariant circle breaks up.
K_CRITICAL = 0.9716

#: Negative actions down to this value are rounding noise and clamp to zero.
ACTION_TOL = 1e-12

#: Relative tolerance for a directly supplied K against the physical one.
K_CONSISTENCY_RTOL = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    """Cantilever state: action ``action`` and angle ``angle`` in [0, 2 pi)."""

    action: float
    angle: float


@dataclass(frozen=True)
class MapParams:
    """
    Parameters of the kicked cantilever.

    Either ``stochasticity`` is given directly, or all of the physical
    fields are, in which case K is derived from them.  When both are
    present they must agree to ``K_CONSISTENCY_RTOL``.
    """

    stochasticity: Optional[float] = None
    kick_period: Optional[float] = None
    drive_strength: Optional[float] = None
    nonlinearity: Optional[float] = None
    mass: Optional[float] = None
    resonator_freq: Optional[float] = None
    initial_action: Optional[float] = None

    def physical_fields(self):
        return {
            "drive_strength": self.drive_strength,
            "kick_period": self.kick_period,
            "nonlinearity": self.nonlinearity,
            "mass": self.mass,
            "resonator_freq": self.resonator_freq,
            "initial_action": self.initial_action,
        }


@dataclass(frozen=True)
class ChaosCriterion:
    K: float
    regime: str
    merging_threshold: float = K_CRITICAL


@dataclass(frozen=True)
class EnsembleSpec:
    """
    Ensemble of independent trajectories sharing one initial action.

    ``fixed_angle=None`` draws initial angles uniformly on [0, 2 pi);
    otherwise every member starts at that angle.
    """

    n_trajectories: int
    n_kicks: int
    seed: int
    initial_action: float = 0.0
    fixed_angle: Optional[float] = None

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise DomainError("n_trajectories must be positive")
        if self.n_kicks < 1:
            raise DomainError("n_kicks must be positive")


@dataclass(frozen=True)
class DiffusionEstimate:
    A: float
    B: float
    fit_D: float
    A_stderr: float
    B_stderr: float
    regular_regime: bool
    moments: np.ndarray  # columns: n, mean_I, var_I, msd


class Trajectory(Sequence):
    """
    A sequence of :class:`PhasePoint` backed by two float arrays.

    Indexing yields ``PhasePoint`` objects; ``action`` and ``angle`` expose
    the raw arrays for vectorised consumers.
    """

    def __init__(self, action, angle):
        self.action = np.asarray(action, dtype=float)
        self.angle = np.asarray(angle, dtype=float)
        if self.action.shape != self.angle.shape or self.action.ndim != 1:
            raise DomainError("action and angle must be 1-D arrays of equal length")

    def __len__(self):
        return self.action.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Trajectory(self.action[idx], self.angle[idx])
        return PhasePoint(float(self.action[idx]), float(self.angle[idx]))

    def __iter__(self) -> Iterator[PhasePoint]:
        for a, t in zip(self.action.tolist(), self.angle.tolist()):
            yield PhasePoint(a, t)

    @property
    def n_kicks(self):
        return len(self) - 1


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")


def standard_map_step(p: PhasePoint, K: float) -> PhasePoint:
    """Apply the standard map once and reduce the new angle to [0, 2 pi)."""
    _check_finite(action=p.action, angle=p.angle, K=K)
    action = p.action - K * math.sin(p.angle)
    angle = (p.angle + action) % TWO_PI
    # float modulo can round up to exactly 2 pi for tiny negative arguments
    if angle >= TWO_PI:
        angle = 0.0
    return PhasePoint(action, angle)


def iterate_trajectory(p0: PhasePoint, K: float, n_kicks: int) -> Trajectory:
    """Return ``n_kicks + 1`` points starting at ``p0``."""
    if n_kicks < 0:
        raise DomainError("n_kicks must be non-negative")
    _check_finite(action=p0.action, angle=p0.angle, K=K)
    action = np.empty(n_kicks + 1)
    angle = np.empty(n_kicks + 1)
    I, th = p0.action, p0.angle % TWO_PI
    action[0], angle[0] = I, th
    sin = math.sin
    for n in range(1, n_kicks + 1):
        I = I - K * sin(th)
        th = (th + I) % TWO_PI
        if th >= TWO_PI:
            th = 0.0
        action[n] = I
        angle[n] = th
    if not np.all(np.isfinite(action)):
        raise DomainError("action overflowed to a non-finite value")
    return Trajectory(action, angle)


def parity_fold(p: PhasePoint) -> PhasePoint:
    """
    Map a point with negative action onto its mirror image (-I, -theta).

    The standard map commutes with this reflection, so the folded point
    carries the same dynamics with a non-negative action, as needed for the
    oscillation amplitude sqrt(2 I / m w_r).
    """
    if p.action >= 0.0:
        return p
    return PhasePoint(-p.action, (-p.angle) % TWO_PI)


def fold_trajectory(traj: Trajectory) -> Trajectory:
    neg = traj.action < 0.0
    angle = np.where(neg, np.mod(-traj.angle, TWO_PI), traj.angle)
    return Trajectory(np.abs(traj.action), angle)


def chaos_parameter(mp: MapParams) -> ChaosCriterion:
    """
    Resonance-overlap parameter K = eps I0 T (6 pi mu / (m^2 w_r^2)).

    If ``mp.stochasticity`` is set it is used directly, after checking it
    against the physical value when those fields are present too.
    """
    fields = mp.physical_fields()
    have_physical = all(v is not None for v in fields.values())
    K_phys = None
    if have_physical:
        for name, v in fields.items():
            _check_finite(**{name: v})
        for name in ("kick_period", "mass", "resonator_freq"):
            if fields[name] <= 0:
                raise DomainError(f"{name} must be positive")
        if mp.drive_strength < 0:
            raise DomainError("drive_strength must be non-negative")
        K_phys = (
            mp.drive_strength
            * mp.initial_action
            * mp.kick_period
            * 6.0
            * math.pi
            * mp.nonlinearity
            / (mp.mass**2 * mp.resonator_freq**2)
        )
    if mp.stochasticity is not None:
        K = float(mp.stochasticity)
        _check_finite(stochasticity=K)
        if K_phys is not None and not math.isclose(K, K_phys, rel_tol=K_CONSISTENCY_RTOL, abs_tol=1e-300):
            raise DomainError(
                f"stochasticity {K!r} inconsistent with physical parameters (K={K_phys!r})"
            )
    elif K_phys is not None:
        K = K_phys
    else:
        missing = [k for k, v in fields.items() if v is None]
        raise DomainError(f"K not given and physical fields missing: {', '.join(missing)}")
    return ChaosCriterion(K=K, regime="regular" if K < 1.0 else "chaotic")


def reconstruct_xp(p: PhasePoint, m: float, omega_r: float):
    """Position and momentum of the cantilever from its action-angle state."""
    I = p.action
    if I < 0.0:
        if I < -ACTION_TOL:
            raise DomainError(f"negative action {I!r}; fold the point first")
        I = 0.0
    x = math.sqrt(2.0 * I / (m * omega_r)) * math.cos(p.angle)
    mom = -math.sqrt(2.0 * I * omega_r * m) * math.sin(p.angle)
    return x, mom


def action_from_xp(x: float, mom: float, m: float, omega_r: float) -> float:
    return 0.5 * (m * omega_r * x * x + mom * mom / (m * omega_r))


def _initial_ensemble(es: EnsembleSpec):
    rng = np.random.default_rng(es.seed)
    if es.fixed_angle is None:
        theta = rng.uniform(0.0, TWO_PI, es.n_trajectories)
    else:
        theta = np.full(es.n_trajectories, float(es.fixed_angle) % TWO_PI)
    return np.full(es.n_trajectories, float(es.initial_action)), theta


def iterate_ensemble(es: EnsembleSpec, K: float):
    """
    Evolve every ensemble member for ``es.n_kicks`` kicks.

    Returns the action array of shape ``(n_kicks + 1, n_trajectories)``.
    """
    I, theta = _initial_ensemble(es)
    out = np.empty((es.n_kicks + 1, es.n_trajectories))
    out[0] = I
    for n in range(1, es.n_kicks + 1):
        I = I - K * np.sin(theta)
        theta = np.mod(theta + I, TWO_PI)
        out[n] = I
    return out


def ensemble_moments(actions: np.ndarray) -> np.ndarray:
    """Rows ``n, mean_I, var_I, msd`` for an ``(n_kicks + 1, M)`` action array."""
    n = np.arange(actions.shape[0], dtype=float)
    dI = actions - actions[0]
    return np.column_stack(
        [n, actions.mean(axis=1), actions.var(axis=1), np.mean(dI * dI, axis=1)]
    )


def estimate_diffusion(es: EnsembleSpec, K: float, T: float = 1.0) -> DiffusionEstimate:
    """
    Drift and diffusion coefficients of the action by ensemble averaging.

    ``A`` and ``B`` are the one-kick conditional moments divided by ``T``;
    ``fit_D`` is the least-squares slope of the mean squared displacement
    of the action against elapsed time ``n T``.  For uniform initial
    angles the quasilinear values are A = 0 and B = K^2 / (2 T).
    """
    if T <= 0:
        raise DomainError("T must be positive")
    actions = iterate_ensemble(es, K)
    dI1 = actions[1] - actions[0]
    M = es.n_trajectories
    A = float(dI1.mean()) / T
    B = float(np.mean(dI1 * dI1)) / T
    A_se = float(dI1.std(ddof=1)) / math.sqrt(M) / T if M > 1 else math.inf
    B_se = float((dI1 * dI1).std(ddof=1)) / math.sqrt(M) / T if M > 1 else math.inf
    moments = ensemble_moments(actions)
    t = moments[1:, 0] * T
    msd = moments[1:, 3]
    fit_D = float(np.polyfit(t, msd, 1)[0]) if t.size >= 2 else float(msd[0] / t[0])
    return DiffusionEstimate(
        A=A,
        B=B,
        fit_D=fit_D,
        A_stderr=A_se,
        B_stderr=B_se,
        regular_regime=K < 1.0,
        moments=moments,
    )
