"""
Term-by-term closed forms built from the transfer matrix.

For an initial state ``|0>`` the evolved spinor is

    psi_N = sum_{i,j} A_ij w_i |phi_N^j>,
    w_+ = eta_1 exp(-i phi_1),  w_- = xi_1 exp(+i phi_1),

so every quadratic quantity is a 16-term sum

    <psi|O|psi> = sum_{ijkl} (A_ij w_i)^* A_kl w_k <phi_N^j|O|phi_N^l>.

The functions here evaluate those sums with the final-eigenbasis matrix
elements written out explicitly.  They never touch the direct propagator
and serve as an independent check on it.
"""

from __future__ import annotations

import numpy as np

from .spin import SpinParams, as_couplings, eigensystems, transfer_matrix


def _weights(phi1, eta1, xi1):
    return np.array([eta1 * np.exp(-1j * phi1), xi1 * np.exp(1j * phi1)])


def _bilinear(A, w, M):
    total = 0j
    for i in range(2):
        for j in range(2):
            left = np.conj(A[i, j] * w[i])
            for k in range(2):
                for l in range(2):
                    total += left * A[k, l] * w[k] * M[j, l]
    return total


def _sigma_elements(etaN, xiN):
    """Matrix elements of sx, sy, sz between |phi_N^+> and |phi_N^->."""
    e, x = etaN, xiN
    sx = np.array([[2 * e * x, x * x - e * e], [x * x - e * e, -2 * e * x]], dtype=complex)
    sy = np.array([[0.0, 1j * (e * e + x * x)], [-1j * (e * e + x * x), 0.0]], dtype=complex)
    sz = np.array([[e * e - x * x, 2 * e * x], [2 * e * x, x * x - e * e]], dtype=complex)
    return sx, sy, sz


def normalization_expansion(A, phi1, eta1, xi1, etaN, xiN) -> complex:
    e, x = etaN, xiN
    overlap = np.array([[e * e + x * x, x * e - e * x], [e * x - x * e, x * x + e * e]], dtype=complex)
    return _bilinear(A, _weights(phi1, eta1, xi1), overlap)


def expectation_expansion(A, phi1, eta1, xi1, etaN, xiN):
    """(<sx>, <sy>, <sz>) from the transfer matrix; imaginary parts are dropped."""
    w = _weights(phi1, eta1, xi1)
    return tuple(float(_bilinear(A, w, M).real) for M in _sigma_elements(etaN, xiN))


def density_expansion(A, phi1, eta1, xi1, etaN, xiN) -> np.ndarray:
    """rho_ab = <a|psi><psi|b> as a 2x2 array."""
    w = _weights(phi1, eta1, xi1)
    basis = np.array([[etaN, xiN], [xiN, -etaN]], dtype=complex)  # rows: |phi_N^+>, |phi_N^->
    rho = np.empty((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            # operator |b><a| in the final eigenbasis
            M = np.array([[np.conj(basis[j, b]) * basis[l, a] for l in range(2)] for j in range(2)])
            rho[a, b] = _bilinear(A, w, M)
    return rho


def recurrence_expansion(A, phi1, eta1, xi1, etaN, xiN) -> float:
    """2 - (z^* + z) with z = <0|psi_N>."""
    w = _weights(phi1, eta1, xi1)
    z = A[0, 0] * w[0] * etaN + A[0, 1] * w[0] * xiN + A[1, 0] * w[1] * etaN + A[1, 1] * w[1] * xiN
    return float((2.0 - (np.conj(z) + z)).real)


def _spectral_data(kicks, sp: SpinParams):
    chis = as_couplings(kicks, sp)
    phi, eta, xi = eigensystems(chis, sp)
    A = transfer_matrix(phi, eta, xi)
    return A, phi[0], eta[0], xi[0], eta[-1], xi[-1]


def expectations_closed_form(kicks, sp: SpinParams):
    return expectation_expansion(*_spectral_data(kicks, sp))


def density_matrix_closed_form(kicks, sp: SpinParams) -> np.ndarray:
    return density_expansion(*_spectral_data(kicks, sp))


def recurrence_closed_form(kicks, sp: SpinParams) -> float:
    return recurrence_expansion(*_spectral_data(kicks, sp))
