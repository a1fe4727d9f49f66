"""
Diagnostics computed from the spin evolution and the cantilever drive.

Covers Pauli expectations, density matrices and the relative entropy of
coherence, recurrence distances, power spectra, level spacings, the
kick-Hamiltonian covariance, and detectors for time-translation symmetry
breaking and dynamical freezing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple

import numpy as np
from scipy.special import xlogy

from .cantilever import Trajectory
from .errors import DomainError
from .spin import KET_0, KET_1, SpinParams, _field, as_couplings, coupling_series, evolve_direct

NORM_TOL = 1e-10
DENSITY_TOL = 1e-12
EIGEN_TOL = 1e-10


@dataclass(frozen=True)
class SpectrumSeries:
    frequencies: np.ndarray
    power: np.ndarray
    component: str = ""


@dataclass(frozen=True)
class LevelSpacingSample:
    spacings: np.ndarray
    bin_edges: np.ndarray
    densities: np.ndarray


class TTSBRecord(NamedTuple):
    n: int
    k: int
    state_distance: float
    observable_distance: float
    state_recurred: bool
    observable_recurred: bool

    @property
    def is_event(self):
        return self.state_recurred and not self.observable_recurred


def _check_normalised(psi):
    psi = np.asarray(psi, dtype=complex)
    norms = np.sum(np.abs(psi) ** 2, axis=-1)
    if np.any(np.abs(norms - 1.0) > NORM_TOL):
        raise DomainError("spinor is not normalised")
    return psi


def pauli_expectations(psi):
    """
    Bloch vector (<sx>, <sy>, <sz>) of one state or of a ``(N, 2)`` stack.

    For a stack the result has shape ``(N, 3)``.
    """
    psi = _check_normalised(psi)
    a, b = psi[..., 0], psi[..., 1]
    ab = np.conj(a) * b
    out = np.stack([2.0 * ab.real, 2.0 * ab.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1)
    if out.ndim == 1:
        return tuple(float(v) for v in out)
    return out


def density_matrix(psi) -> np.ndarray:
    """|psi><psi| for one state ``(2,)`` or a stack ``(N, 2)``."""
    psi = _check_normalised(psi)
    return psi[..., :, None] * np.conj(psi[..., None, :])


def check_density_matrix(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (2, 2):
        raise DomainError("density matrix must be 2x2")
    if np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2)))) > DENSITY_TOL:
        raise DomainError("density matrix is not Hermitian")
    tr = rho[..., 0, 0] + rho[..., 1, 1]
    if np.max(np.abs(tr - 1.0)) > DENSITY_TOL:
        raise DomainError("density matrix trace differs from 1")
    return rho


def density_eigenvalues(rho):
    """E+- = (1/2)(rho11 + rho22 +- sqrt((rho11 - rho22)^2 + 4 |rho12|^2))."""
    r11 = rho[..., 0, 0].real
    r22 = rho[..., 1, 1].real
    disc = np.sqrt((r11 - r22) ** 2 + 4.0 * np.abs(rho[..., 0, 1]) ** 2)
    return 0.5 * (r11 + r22 + disc), 0.5 * (r11 + r22 - disc)


def coherence_relative_entropy(rho):
    """
    Relative entropy of coherence D = S(rho_diag) - S(rho), natural log.

    Accepts one 2x2 matrix (returns float) or a stack (returns array).
    """
    rho = check_density_matrix(rho)
    e_plus, e_minus = density_eigenvalues(rho)
    r11 = rho[..., 0, 0].real
    r22 = rho[..., 1, 1].real
    if np.min(e_minus) < -EIGEN_TOL or np.min(r11) < -EIGEN_TOL or np.min(r22) < -EIGEN_TOL:
        raise DomainError("density matrix has a negative eigenvalue")
    e_plus, e_minus, r11, r22 = (np.clip(v, 0.0, None) for v in (e_plus, e_minus, r11, r22))
    D = xlogy(e_plus, e_plus) + xlogy(e_minus, e_minus) - xlogy(r11, r11) - xlogy(r22, r22)
    D = np.where(rho[..., 0, 1] == 0, 0.0, np.maximum(D, 0.0))
    return float(D) if D.ndim == 0 else D


def evolve_mixed(p1: float, kicks, sp: SpinParams) -> np.ndarray:
    """
    rho(n) = U_n rho(0) U_n^dagger for rho(0) = p1 |0><0| + (1 - p1) |1><1|.

    Returns a ``(N + 1, 2, 2)`` stack.
    """
    if not 0.0 <= p1 <= 1.0:
        raise DomainError("p1 must lie in [0, 1]")
    up = evolve_direct(KET_0, kicks, sp)
    down = evolve_direct(KET_1, kicks, sp)
    return p1 * density_matrix(up) + (1.0 - p1) * density_matrix(down)


def recurrence_distance(psi_t, psi_0):
    """
    ||psi_t - psi_0||^2 = 2 - 2 Re <psi_0|psi_t>, in [0, 4].

    ``psi_t`` may be a ``(N, 2)`` stack.
    """
    psi_t = _check_normalised(psi_t)
    psi_0 = _check_normalised(psi_0)
    overlap = np.sum(np.conj(psi_0) * psi_t, axis=-1)
    d = np.clip(2.0 - 2.0 * overlap.real, 0.0, 4.0)
    return float(d) if d.ndim == 0 else d


def recurrence_periodicity(series):
    """
    Dominant period of a series and its normalised autocorrelation there.

    The period is N / k* with k* the strongest non-DC bin of the
    mean-removed periodogram.  Returns ``(lag, autocorrelation)``;
    a flat series gives ``(0, 0.0)``.
    """
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    N = x.size
    energy = float(np.dot(x, x))
    if N < 4 or energy == 0.0:
        return 0, 0.0
    P = np.abs(np.fft.rfft(x)) ** 2
    k = int(np.argmax(P[1:])) + 1
    lag = int(round(N / k))
    if lag >= N:
        return lag, 0.0
    ac = float(np.dot(x[:-lag], x[lag:]) / (N - lag)) / (energy / N)
    return lag, ac


def power_spectrum(series, T: float, component: str = "") -> SpectrumSeries:
    """
    |T sum_n s_n exp(-i w_k n T)|^2 at w_k = 2 pi k / (N T), k = 0..N-1.

    Plain DFT: no window, no zero padding.
    """
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        raise DomainError("empty series")
    if s.size < 2:
        raise DomainError("series needs at least two samples")
    if T <= 0:
        raise DomainError("T must be positive")
    N = s.size
    power = np.abs(T * np.fft.fft(s)) ** 2
    freqs = 2.0 * np.pi * np.arange(N) / (N * T)
    return SpectrumSeries(freqs, power, component)


def spectral_occupancy(spec: SpectrumSeries, rel_threshold: float) -> float:
    """Fraction of frequency bins with power >= rel_threshold * max power."""
    if not 0.0 < rel_threshold < 1.0:
        raise DomainError("rel_threshold must lie in (0, 1)")
    peak = spec.power.max()
    if peak == 0.0:
        return 0.0
    return float(np.mean(spec.power >= rel_threshold * peak))


def level_spacings(traj: Trajectory, sp: SpinParams, bins: int = 60) -> LevelSpacingSample:
    """
    Gaps S_n = sqrt(w0^2 + chi_n^2) of the kick Hamiltonians, n = 1..N,
    and their density-normalised histogram over [min S, max S].
    """
    chis = coupling_series(traj, sp)
    w0 = sp.level_splitting
    S = np.sqrt(w0 * w0 + chis * chis)
    # hypot-free form can round below w0 by one ulp
    S = np.maximum(S, w0)
    if S.size == 0:
        raise DomainError("trajectory has no kicks")
    dens, edges = np.histogram(S, bins=bins, density=True)
    return LevelSpacingSample(S, edges, dens)


def hamiltonian_covariances(kicks, sp: SpinParams, psi=KET_0, max_lag: int = 0, raw: bool = False):
    """
    Lag-averaged covariance of the kick Hamiltonians in a reference state,
    for lags 0..max_lag.

    Each H_n = (1/2) a_n . sigma with a_n = (a_x, 0, a_z).  The symmetrised
    product (1/2){H_n, H_m} = (1/4)(a_n . a_m) 1, so its expectation does
    not depend on the state.  With ``raw=True`` the unsymmetrised
    <H_n H_m>, which adds (i/4)(a_n x a_m) . <sigma>, is used and the
    result is complex.
    """
    psi = _check_normalised(psi)
    a_x, a_z = _field(as_couplings(kicks, sp), sp)
    N = a_x.size
    if max_lag < 0 or max_lag >= N:
        raise DomainError(f"lag must be in [0, {N - 1}]")
    sx, sy, sz = pauli_expectations(psi)
    h = 0.5 * (a_x * sx + a_z * sz)
    out = np.empty(max_lag + 1, dtype=complex if raw else float)
    for lag in range(max_lag + 1):
        n_end = N - lag
        ax_n, az_n = a_x[:n_end], a_z[:n_end]
        ax_m, az_m = a_x[lag:], a_z[lag:]
        sym = 0.25 * (ax_n * ax_m + az_n * az_m)
        val = sym - h[:n_end] * h[lag:]
        if raw:
            # (a_n x a_m)_y is the only non-zero cross-product component
            cross_y = az_n * ax_m - ax_n * az_m
            val = val + 0.25j * cross_y * sy
        out[lag] = val.mean()
    return out


def hamiltonian_correlation(kicks, sp: SpinParams, psi=KET_0, lag: int = 0) -> float:
    return float(hamiltonian_covariances(kicks, sp, psi, lag)[lag])


def correlation_decay_lag(cov, fraction: float = 0.1):
    """
    Smallest lag tau with |cov(l)| < fraction * cov(0) for every l > tau
    up to the end of ``cov``; ``None`` if the tail never settles.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.size < 2 or cov[0] <= 0:
        return None
    above = np.nonzero(np.abs(cov[1:]) >= fraction * cov[0])[0]
    tau = int(above[-1]) + 1 if above.size else 0
    return None if tau >= cov.size - 1 else tau


def ttsb_detector(states, expectations, eps_state: float, eps_obs: float, max_k: int = None) -> List[TTSBRecord]:
    """
    Find pairs (n, k) with ||psi(n+k) - psi(n)|| < eps_state.

    Each record also carries the Euclidean distance between the Bloch
    vectors at n and n + k.  A record with ``observable_recurred`` False is
    a time-translation-symmetry-breaking event.
    """
    if eps_state <= 0 or eps_obs <= 0:
        raise DomainError("thresholds must be positive")
    states = np.asarray(states, dtype=complex)
    expectations = np.asarray(expectations, dtype=float)
    if states.shape[0] != expectations.shape[0]:
        raise DomainError("states and expectations are not aligned")
    N = states.shape[0]
    max_k = N - 1 if max_k is None else min(max_k, N - 1)
    records = []
    for k in range(1, max_k + 1):
        diff = states[k:] - states[:-k]
        dist = np.sqrt(np.sum(np.abs(diff) ** 2, axis=1))
        hits = np.nonzero(dist < eps_state)[0]
        if hits.size == 0:
            continue
        obs = np.linalg.norm(expectations[k:][hits] - expectations[:-k][hits], axis=1)
        for n, d, o in zip(hits.tolist(), dist[hits].tolist(), obs.tolist()):
            records.append(TTSBRecord(n, k, d, o, True, o <= eps_obs))
    records.sort(key=lambda r: (r.n, r.k))
    return records


def freezing_detector(expectations_x, level: float = -1.0, band: float = 0.1) -> int:
    """Longest run of consecutive kicks with |<sx>_n - level| <= band."""
    if band <= 0:
        raise DomainError("band must be positive")
    inside = np.abs(np.asarray(expectations_x, dtype=float) - level) <= band
    best = run = 0
    for flag in inside.tolist():
        run = run + 1 if flag else 0
        if run > best:
            best = run
    return best
