"""Pure states on the facet span and their linear entropy / concurrence."""

from __future__ import annotations

import numpy as np

from .exceptions import ConstraintError
from .states import DIM, PHI, basis_ket, check_facet

NORM_TOL = 1e-12

# span vectors multiplying a, b, c (weight sqrt((1+rbar)/2)) and d, e, f (weight sqrt((1-rbar)/2))
PLUS_KETS = (basis_ket(0, 1), basis_ket(2, 0), basis_ket(1, 2))
MINUS_KETS = (basis_ket(1, 0), basis_ket(0, 2), basis_ket(2, 1))


def check_params(xi, tol=NORM_TOL):
    """Return ``xi`` as an array of six amplitudes after checking both normalizations."""
    xi = np.asarray(xi)
    if xi.shape != (6,):
        raise ConstraintError(f"expected 6 parameters (a, b, c, d, e, f), got shape {xi.shape}")
    res = np.array([np.sum(np.abs(xi[:3]) ** 2) - 1.0, np.sum(np.abs(xi[3:]) ** 2) - 1.0])
    if np.max(np.abs(res)) > tol:
        raise ConstraintError(
            f"|a|^2+|b|^2+|c|^2 and |d|^2+|e|^2+|f|^2 must equal 1 (residuals {res[0]:.2e}, {res[1]:.2e})",
            residual=res,
        )
    return xi


def swap_params(xi):
    """Parameters of the subsystem-swapped state (valid at ``-rbar``)."""
    xi = np.asarray(xi)
    return np.concatenate([xi[3:], xi[:3]])


def psi_sigma(rbar, z, xi):
    """Ansatz state ``sqrt(z)|Phi> + sqrt(1-z)[...]`` in the span of ``sigma(rbar, z)``."""
    check_facet(rbar, z)
    xi = check_params(xi)
    wp = np.sqrt(max(1.0 - z, 0.0) * (1.0 + rbar) / 2.0)
    wm = np.sqrt(max(1.0 - z, 0.0) * (1.0 - rbar) / 2.0)
    psi = np.sqrt(max(z, 0.0)) * PHI
    for amp, ket in zip(xi[:3], PLUS_KETS):
        psi = psi + wp * amp * ket
    for amp, ket in zip(xi[3:], MINUS_KETS):
        psi = psi + wm * amp * ket
    return psi


def _check_normalized(psi):
    psi = np.asarray(psi)
    if psi.shape != (DIM * DIM,):
        raise ConstraintError(f"expected a 9-component state, got shape {psi.shape}")
    norm = float(np.real(np.vdot(psi, psi)))
    if abs(norm - 1.0) > NORM_TOL:
        raise ConstraintError(f"state is not normalized (norm^2 = {norm!r})", residual=norm - 1.0)
    return psi


def reduced_density(psi):
    """Reduced state of subsystem A (B traced out)."""
    m = _check_normalized(psi).reshape(DIM, DIM)
    return m @ m.conj().T


def elin_pure(psi):
    """Linear entropy from the coefficient sum ``sum |psi_jk psi_lm - psi_jm psi_lk|^2``."""
    m = _check_normalized(psi).reshape(DIM, DIM)
    minors = np.einsum("jk,lm->jklm", m, m) - np.einsum("jm,lk->jklm", m, m)
    return float(np.sum(np.abs(minors) ** 2))


def elin_reduced(psi):
    """Linear entropy ``2 [1 - tr rho_A^2]`` from the reduced state."""
    rho_a = reduced_density(psi)
    return float(2.0 * (1.0 - np.real(np.trace(rho_a @ rho_a))))


def concurrence_pure(psi):
    return float(np.sqrt(max(elin_pure(psi), 0.0)))
