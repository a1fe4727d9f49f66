"""
Exact stroboscopic evolution of the NV spin driven by the cantilever.

Between kicks the spin feels the constant Hamiltonian

    H_n = 1/2 w0 sz + 1/2 chi_n (cos(alpha) sz + sin(alpha) sx),
    chi_n = g sqrt(2 I_n / (m w_r)) cos(theta_n),

so each kick contributes the SU(2) operator F_n = exp(-i H_n T).  Two
independent routes are provided:

* :func:`evolve_direct` multiplies the closed-form exponentials
  (any mixing angle);
* :func:`evolve_spectral` rebuilds the final state from the per-kick
  eigenbases and the transfer matrix of eigenbasis overlaps
  (resonant case ``alpha = pi/2``, initial state ``|0>``).

States are numpy complex arrays of shape ``(2,)`` holding the amplitudes
of ``|0>`` and ``|1>``; operators are ``(2, 2)`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cantilever import ACTION_TOL, PhasePoint, Trajectory, fold_trajectory
from .errors import DomainError, IdentityViolation, NumericalFailure, UnsupportedMode

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

KET_0 = np.array([1.0, 0.0], dtype=complex)
KET_1 = np.array([0.0, 1.0], dtype=complex)

NORM_DRIFT_TOL = 1e-9
UNITARITY_TOL = 1e-13
DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class SpinParams:
    """Defaults are the dimensionless set m = g = w_r = T = 1, w0 = 0.2, alpha = pi/2."""

    level_splitting: float = 0.2
    coupling: float = 1.0
    mixing_angle: float = math.pi / 2
    kick_period: float = 1.0
    mass: float = 1.0
    resonator_freq: float = 1.0

    def __post_init__(self):
        for name in ("level_splitting", "coupling", "mixing_angle", "kick_period", "mass", "resonator_freq"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.level_splitting <= 0:
            raise DomainError("level_splitting must be positive")
        if self.kick_period <= 0:
            raise DomainError("kick_period must be positive")
        if self.mass <= 0 or self.resonator_freq <= 0:
            raise DomainError("mass and resonator_freq must be positive")

    @property
    def resonant(self):
        return math.isclose(self.mixing_angle, math.pi / 2, rel_tol=0, abs_tol=1e-15)

    @property
    def degeneracy_tol(self):
        return DEGENERACY_RTOL * self.level_splitting


@dataclass(frozen=True)
class KickEigensystem:
    """Quasienergy and eigenbasis of one resonant Floquet operator.

    ``|phi+> = eta |0> + xi |1>`` and ``|phi-> = xi |0> - eta |1>``.
    ``ratio`` is ``inf`` (signed) in the degenerate limit ``chi -> 0``.
    """

    coupling_value: float
    quasiphase: float
    ratio: float
    eta: float
    xi: float

    @property
    def plus(self):
        return np.array([self.eta, self.xi], dtype=complex)

    @property
    def minus(self):
        return np.array([self.xi, -self.eta], dtype=complex)


def coupling_chi(p: PhasePoint, sp: SpinParams) -> float:
    I = p.action
    if I < 0.0:
        if I < -ACTION_TOL:
            raise DomainError(f"negative action {I!r}")
        I = 0.0
    return sp.coupling * math.sqrt(2.0 * I / (sp.mass * sp.resonator_freq)) * math.cos(p.angle)


def coupling_series(traj: Trajectory, sp: SpinParams) -> np.ndarray:
    """
    chi_n for kicks n = 1..N of a trajectory with N + 1 points.

    Points with negative action are parity-folded first; since cos is
    even the result equals g sqrt(2 |I_n| / (m w_r)) cos(theta_n).
    """
    folded = fold_trajectory(traj[1:])
    return sp.coupling * np.sqrt(2.0 * folded.action / (sp.mass * sp.resonator_freq)) * np.cos(folded.angle)


def as_couplings(kicks, sp):
    if isinstance(kicks, Trajectory):
        return coupling_series(kicks, sp)
    chis = np.asarray(kicks, dtype=float).reshape(-1)
    if not np.all(np.isfinite(chis)):
        raise DomainError("coupling values must be finite")
    return chis


def _field(chis, sp):
    """Components (a_x, a_z) of H = 1/2 (a_x sx + a_z sz)."""
    chis = np.asarray(chis, dtype=float)
    a_x = chis * math.sin(sp.mixing_angle)
    a_z = sp.level_splitting + chis * math.cos(sp.mixing_angle)
    return a_x, a_z


def kick_hamiltonian(chi: float, sp: SpinParams) -> np.ndarray:
    sz_coef = 0.5 * sp.level_splitting + 0.5 * chi * math.cos(sp.mixing_angle)
    sx_coef = 0.5 * chi * math.sin(sp.mixing_angle)
    return sz_coef * SIGMA_Z + sx_coef * SIGMA_X


def floquet_operators(chis, sp: SpinParams) -> np.ndarray:
    """
    Stack of exact one-period propagators, shape ``(N, 2, 2)``.

    Uses exp(-i (lam T / 2) n.sigma) = cos(lam T/2) 1 - i sin(lam T/2) n.sigma.
    """
    a_x, a_z = _field(chis, sp)
    lam = np.hypot(a_x, a_z)
    half = 0.5 * lam * sp.kick_period
    c = np.cos(half)
    # sin(half)/lam, with the lam -> 0 limit T/2
    s_over = np.where(lam > 0, np.sin(half) / np.where(lam > 0, lam, 1.0), 0.5 * sp.kick_period)
    U = np.empty(a_x.shape + (2, 2), dtype=complex)
    U[..., 0, 0] = c - 1j * s_over * a_z
    U[..., 1, 1] = c + 1j * s_over * a_z
    U[..., 0, 1] = -1j * s_over * a_x
    U[..., 1, 0] = -1j * s_over * a_x
    return U


def floquet_operator(chi: float, sp: SpinParams) -> np.ndarray:
    return floquet_operators(np.array([chi]), sp)[0]


def unitarity_defect(U: np.ndarray) -> np.ndarray:
    """max |U^dagger U - 1| for a single operator or a stack."""
    prod = np.conj(np.swapaxes(U, -1, -2)) @ U
    return np.max(np.abs(prod - IDENTITY), axis=(-2, -1))


def kick_eigensystem(chi: float, sp: SpinParams) -> KickEigensystem:
    """
    Closed-form eigenbasis of the resonant kick Hamiltonian.

    k = (w0 + sqrt(chi^2 + w0^2)) / chi, eta = k / sqrt(1 + k^2),
    xi = 1 / sqrt(1 + k^2).  Below ``sp.degeneracy_tol`` the limit
    eta = +-1, xi = 0 is returned without dividing by chi.
    """
    if not sp.resonant:
        raise UnsupportedMode("closed-form eigenstates require mixing_angle = pi/2")
    w0 = sp.level_splitting
    lam = math.hypot(chi, w0)
    phi = lam * sp.kick_period / 2.0
    if abs(chi) < sp.degeneracy_tol:
        sign = -1.0 if math.copysign(1.0, chi) < 0 else 1.0
        return KickEigensystem(chi, phi, sign * math.inf, sign, 0.0)
    k = (w0 + lam) / chi
    # eta = k / sqrt(1 + k^2), xi = 1 / sqrt(1 + k^2), in terms of 1/k so huge |k| stays finite
    inv_k = chi / (w0 + lam)
    norm = math.sqrt(1.0 + inv_k * inv_k)
    eta = math.copysign(1.0, chi) / norm
    xi = abs(inv_k) / norm
    return KickEigensystem(chi, phi, k, eta, xi)


def eigensystems(chis, sp: SpinParams):
    """Vectorised (phi, eta, xi) arrays for a sequence of couplings."""
    if not sp.resonant:
        raise UnsupportedMode("closed-form eigenstates require mixing_angle = pi/2")
    chis = np.asarray(chis, dtype=float)
    w0 = sp.level_splitting
    lam = np.hypot(chis, w0)
    phi = lam * sp.kick_period / 2.0
    degenerate = np.abs(chis) < sp.degeneracy_tol
    safe = np.where(degenerate, 1.0, chis)
    # 1/k = chi / (w0 + lam) avoids the division by chi
    inv_k = np.where(degenerate, 0.0, safe / (w0 + lam))
    norm = np.sqrt(1.0 + inv_k * inv_k)
    sign = np.where(np.signbit(chis), -1.0, 1.0)
    eta = sign / norm
    xi = np.abs(inv_k) / norm
    return phi, eta, xi


def spectral_floquet_operator(es: KickEigensystem) -> np.ndarray:
    """exp(-i phi) |phi+><phi+| + exp(i phi) |phi-><phi-|."""
    p, m = es.plus, es.minus
    return np.exp(-1j * es.quasiphase) * np.outer(p, p.conj()) + np.exp(1j * es.quasiphase) * np.outer(m, m.conj())


def evolve_direct(psi0, kicks, sp: SpinParams, check_unitarity=False) -> np.ndarray:
    """
    States after 0, 1, ..., N kicks, shape ``(N + 1, 2)``.

    ``kicks`` is a :class:`Trajectory` (its first point is the initial
    cantilever state) or a sequence of coupling values chi_1..chi_N.  The
    state is never renormalised; a norm drift above ``NORM_DRIFT_TOL``
    raises :class:`NumericalFailure`.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (2,):
        raise DomainError("spinor must have two components")
    if abs(np.vdot(psi0, psi0).real - 1.0) > 1e-12:
        raise DomainError("initial spinor is not normalised")
    chis = as_couplings(kicks, sp)
    U = floquet_operators(chis, sp)
    if check_unitarity:
        defect = unitarity_defect(U) if len(U) else np.zeros(0)
        if defect.size and defect.max() > UNITARITY_TOL:
            raise NumericalFailure(f"Floquet operator not unitary (defect {defect.max():.3e})")
    u00, u01, u10, u11 = (U[:, i, j].tolist() for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
    a, b = complex(psi0[0]), complex(psi0[1])
    out = np.empty((len(chis) + 1, 2), dtype=complex)
    amp0 = [a]
    amp1 = [b]
    for n in range(len(chis)):
        a, b = u00[n] * a + u01[n] * b, u10[n] * a + u11[n] * b
        amp0.append(a)
        amp1.append(b)
    out[:, 0] = amp0
    out[:, 1] = amp1
    drift = np.abs(np.sum(np.abs(out) ** 2, axis=1) - 1.0)
    if drift.max() > NORM_DRIFT_TOL:
        n_bad = int(np.argmax(drift > NORM_DRIFT_TOL))
        raise NumericalFailure(f"norm drift {drift[n_bad]:.3e} at kick {n_bad}")
    return out


def propagator(kicks, sp: SpinParams) -> np.ndarray:
    """Time-ordered product F_N ... F_1."""
    U = floquet_operators(as_couplings(kicks, sp), sp)
    total = IDENTITY.copy()
    for F in U:
        total = F @ total
    return total


def transfer_factor(phi, eta, xi, eta_prev, xi_prev) -> np.ndarray:
    """
    Overlap factor G_n, entries exp(-+i phi_n) <phi_n^a | phi_{n-1}^b>.

    Rows index the branch of kick n, columns the branch of kick n-1.
    """
    same = eta * eta_prev + xi * xi_prev
    cross = eta * xi_prev - xi * eta_prev
    em, ep = np.exp(-1j * phi), np.exp(1j * phi)
    return np.array([[em * same, em * cross], [-ep * cross, ep * same]], dtype=complex)


def transfer_matrix(phi, eta, xi) -> np.ndarray:
    """
    Accumulated transfer matrix indexed as ``A[branch of kick 1, branch of kick N]``.

    The branch amplitudes propagate as c_n = G_n c_{n-1}; the matrix that
    multiplies the first-kick amplitudes into the final eigenbasis is
    therefore (G_N ... G_2) transposed.  For N < 2 it is the identity.
    """
    prod = IDENTITY.copy()
    for n in range(1, len(phi)):
        prod = transfer_factor(phi[n], eta[n], xi[n], eta[n - 1], xi[n - 1]) @ prod
    return prod.T


def assemble_state(A, phi1, eta1, xi1, etaN, xiN) -> np.ndarray:
    """Four-term closed form of the evolved state starting from |0>."""
    plus_N = np.array([etaN, xiN], dtype=complex)
    minus_N = np.array([xiN, -etaN], dtype=complex)
    w_plus = eta1 * np.exp(-1j * phi1)
    w_minus = xi1 * np.exp(1j * phi1)
    return (
        A[0, 0] * w_plus * plus_N
        + A[0, 1] * w_plus * minus_N
        + A[1, 0] * w_minus * plus_N
        + A[1, 1] * w_minus * minus_N
    )


def evolve_spectral(kicks, sp: SpinParams):
    """
    Final state after N kicks from ``|0>`` via the eigenbasis expansion.

    Returns ``(psi_N, A)``.  Zero kicks return ``(|0>, identity)``.
    """
    if not sp.resonant:
        raise UnsupportedMode("spectral evolution requires mixing_angle = pi/2")
    chis = as_couplings(kicks, sp)
    if chis.size == 0:
        return KET_0.copy(), IDENTITY.copy()
    phi, eta, xi = eigensystems(chis, sp)
    A = transfer_matrix(phi, eta, xi)
    psi = assemble_state(A, phi[0], eta[0], xi[0], eta[-1], xi[-1])
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise NumericalFailure("spectral state lost normalisation")
    return psi, A


def eigensystem_table(kicks, sp: SpinParams) -> np.ndarray:
    """Rows ``n, chi, phi, eta, xi`` for kicks 1..N (debug output)."""
    chis = as_couplings(kicks, sp)
    phi, eta, xi = eigensystems(chis, sp)
    n = np.arange(1, chis.size + 1, dtype=float)
    return np.column_stack([n, chis, phi, eta, xi])


@dataclass(frozen=True)
class NormalizationReport:
    kick_count: int
    seed: int
    norm_direct: float
    norm_expansion: float
    norm_factored: float
    identical_kick_norm: float
    max_residual: float


def verify_normalization_identities(kick_count: int, seed: int, tol: float = 1e-9) -> NormalizationReport:
    """
    Check the closed-form normalisation identities on random kicks.

    Evaluates the 16-term bilinear expansion of <psi|psi> in the final
    eigenbasis, the factored product of (eta_n^2 + xi_n^2), and the
    identical-kick case, against the direct evolution.  Raises
    :class:`IdentityViolation` when any residual exceeds ``tol``.
    """
    from .closed_form import normalization_expansion

    if not 1 <= kick_count <= 20:
        raise DomainError("kick_count must be in 1..20")
    rng = np.random.default_rng(seed)
    sp = SpinParams(level_splitting=float(rng.uniform(0.05, 1.0)), kick_period=float(rng.uniform(0.5, 2.0)))
    chis = rng.normal(0.0, 2.0, kick_count)
    phi, eta, xi = eigensystems(chis, sp)
    A = transfer_matrix(phi, eta, xi)

    norm_expansion = normalization_expansion(A, phi[0], eta[0], xi[0], eta[-1], xi[-1]).real
    # factored form: kick 1 and every interior kick enter squared, the last once
    exps = np.full(kick_count, 2)
    exps[-1] = 1
    norm_factored = float(np.prod((eta**2 + xi**2) ** exps))
    psi_direct = evolve_direct(KET_0, chis, sp)[-1]
    norm_direct = float(np.vdot(psi_direct, psi_direct).real)

    same = np.full(kick_count, chis[0])
    phs, es_, xs = eigensystems(same, sp)
    A_same = transfer_matrix(phs, es_, xs)
    identical = normalization_expansion(A_same, phs[0], es_[0], xs[0], es_[-1], xs[-1]).real

    residual = max(abs(norm_expansion - 1.0), abs(norm_factored - 1.0), abs(norm_direct - 1.0), abs(identical - 1.0))
    report = NormalizationReport(kick_count, seed, norm_direct, norm_expansion, norm_factored, identical, residual)
    if residual > tol:
        raise IdentityViolation(f"normalisation identity residual {residual:.3e} > {tol:.1e}")
    return report
