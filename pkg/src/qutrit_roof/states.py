"""States of the cyclically symmetric two-qutrit family and their facet.

Basis order is row-major ``|jk> -> 3*j + k`` with the first index on
subsystem A. Every matrix returned here is a plain ``numpy.ndarray``.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .exceptions import DomainError

DIM = 3
PSD_TOL = 1e-10
_EDGE_TOL = 1e-12

SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)
SQ6 = np.sqrt(6.0)

X_RANGE = (-1.0 / SQ6, np.sqrt(2.0 / 3.0))
Y_RANGE = (-1.0 / (3.0 * SQ2), SQ2 / 3.0)
R_RANGE = (-1.0 / SQ6, 1.0 / SQ6)


def idx(j, k):
    """Flat index of the product basis vector ``|j k>``."""
    return DIM * (j % DIM) + (k % DIM)


def basis_ket(j, k):
    v = np.zeros(DIM * DIM)
    v[idx(j, k)] = 1.0
    return v


PHI = sum(basis_ket(j, j) for j in range(DIM)) / SQ3
PHI_PROJ = np.outer(PHI, PHI)
RHO_PLUS = sum(np.outer(basis_ket(j, j + 1), basis_ket(j, j + 1)) for j in range(DIM)) / 3.0
RHO_MINUS = sum(np.outer(basis_ket(j, j - 1), basis_ket(j, j - 1)) for j in range(DIM)) / 3.0

# single-site cyclic shift S|j> = |j+1 mod 3>
SHIFT = np.roll(np.eye(DIM), 1, axis=0)
SHIFT2 = np.kron(SHIFT, SHIFT)

_DIAG_ORBITS = (
    [idx(j, j) for j in range(DIM)],
    [idx(j, j + 1) for j in range(DIM)],
    [idx(j, j - 1) for j in range(DIM)],
)
_OFFDIAG_PAIRS = [(idx(j, j), idx(k, k)) for j in range(DIM) for k in range(DIM) if j != k]


class TetraCoords(NamedTuple):
    """Hilbert-Schmidt scaled coordinates (x, y, r) of a family state."""

    x: float
    y: float
    r: float


class FacetCoords(NamedTuple):
    """Coordinates (rbar, z) on the facet spanned by Phi, rho_+ and rho_-."""

    rbar: float
    z: float


class RegionLabel(str, enum.Enum):
    SEPARABLE = "separable"
    PPT_ENTANGLED = "ppt_entangled"
    NPT_ENTANGLED = "npt_entangled"
    NONPHYSICAL = "nonphysical"


def family_parameters(x, y, r):
    """Return the matrix parameters (alpha, beta, gamma) for coordinates (x, y, r)."""
    return y * SQ2 / 3.0, x / SQ6, r / SQ6


def _diamond_min_eigenvalue(alpha, beta, gamma):
    # spectrum: jj-block {1/9+a+2b, 1/9+a-b (x2)}, diagonal 1/9-a/2 +- g (x3 each)
    base = 1.0 / 9.0
    return min(
        base + alpha + 2.0 * beta,
        base + alpha - beta,
        base - alpha / 2.0 + gamma,
        base - alpha / 2.0 - gamma,
    )


def in_tetrahedron(x, y, r, tol=PSD_TOL):
    """True if ``rho_diamond(x, y, r)`` is a physical state."""
    return _diamond_min_eigenvalue(*family_parameters(x, y, r)) >= -tol


def _diamond_matrix(alpha, beta, gamma):
    rho = np.zeros((DIM * DIM, DIM * DIM))
    d0, dp, dm = 1.0 / 9.0 + alpha, 1.0 / 9.0 - alpha / 2.0 + gamma, 1.0 / 9.0 - alpha / 2.0 - gamma
    for value, orbit in zip((d0, dp, dm), _DIAG_ORBITS):
        rho[orbit, orbit] = value
    for i, k in _OFFDIAG_PAIRS:
        rho[i, k] = beta
    return rho


def rho_diamond(x, y, r):
    """Density matrix of the family member with coordinates (x, y, r).

    Raises
    ------
    DomainError
        If the point lies outside the tetrahedron of physical states. The
        exception carries the most negative eigenvalue.
    """
    alpha, beta, gamma = family_parameters(x, y, r)
    lam = _diamond_min_eigenvalue(alpha, beta, gamma)
    if lam < -PSD_TOL:
        raise DomainError(
            f"coordinates ({x}, {y}, {r}) are outside the tetrahedron "
            f"(minimum eigenvalue {lam:.3e})",
            value=lam,
        )
    return _diamond_matrix(alpha, beta, gamma)


def check_facet(rbar, z):
    if not (-1.0 - _EDGE_TOL <= rbar <= 1.0 + _EDGE_TOL) or not (-_EDGE_TOL <= z <= 1.0 + _EDGE_TOL):
        raise DomainError(f"facet point (rbar={rbar}, z={z}) outside [-1,1]x[0,1]")


def facet_to_tetra(rbar, z):
    check_facet(rbar, z)
    return TetraCoords(
        z * np.sqrt(2.0 / 3.0),
        z * SQ2 / 3.0 - (1.0 - z) / (3.0 * SQ2),
        (1.0 - z) * rbar / SQ6,
    )


def facet_to_plane(rbar, z):
    """Map facet coordinates to affine coordinates ``(u, z)`` with ``u = (1-z) rbar``.

    The state is an affine function of ``(u, z)``; the facet becomes the
    triangle with corners (-1, 0), (1, 0), (0, 1). Works on arrays.
    """
    rbar = np.asarray(rbar, dtype=float)
    z = np.asarray(z, dtype=float)
    return (1.0 - z) * rbar, z


def plane_to_facet(u, z):
    """Inverse of :func:`facet_to_plane`; ``rbar`` is set to 0 at the apex z=1."""
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    w = 1.0 - z
    with np.errstate(divide="ignore", invalid="ignore"):
        rbar = np.where(w > 1e-15, u / np.where(w > 1e-15, w, 1.0), 0.0)
    return np.clip(rbar, -1.0, 1.0), z


def sigma(rbar, z):
    """Facet state ``z Phi + (1-z) [(1+rbar)/2 rho_+ + (1-rbar)/2 rho_-]``."""
    check_facet(rbar, z)
    return z * PHI_PROJ + (1.0 - z) * (
        0.5 * (1.0 + rbar) * RHO_PLUS + 0.5 * (1.0 - rbar) * RHO_MINUS
    )


def fidelities(rho):
    """Overlaps ``(tr rho Phi, tr rho rho_+, tr rho rho_-)``."""
    rho = np.asarray(rho)
    return tuple(float(np.real(np.trace(rho @ ref))) for ref in (PHI_PROJ, RHO_PLUS, RHO_MINUS))


def hs_distance(a, b):
    """Hilbert-Schmidt distance ``sqrt(tr (a-b)(a-b)^dagger)``."""
    diff = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(np.real(np.vdot(diff, diff))))


def partial_transpose(rho, subsystem="A"):
    """Partial transpose of a 9x9 operator on subsystem ``"A"`` or ``"B"``."""
    t = np.asarray(rho).reshape(DIM, DIM, DIM, DIM)
    if subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    elif subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return t.reshape(DIM * DIM, DIM * DIM)


def ppt_margin(x, y, r):
    """Minimum eigenvalue of the partial transpose of ``rho_diamond(x, y, r)``.

    The partial transpose splits into 2x2 blocks; the closed form below is
    ``[(2 - 3 sqrt2 y) - 3 sqrt6 sqrt(x^2 + r^2)] / 18``.
    """
    return ((2.0 - 3.0 * SQ2 * y) - 3.0 * SQ6 * np.hypot(x, r)) / 18.0


def is_ppt(x, y, r, tol=PSD_TOL):
    """Cone criterion ``3 sqrt6 sqrt(x^2+r^2) <= 2 - 3 sqrt2 y`` (eigenvalue tolerance ``tol``)."""
    if not in_tetrahedron(x, y, r):
        raise DomainError(f"coordinates ({x}, {y}, {r}) are outside the tetrahedron")
    # the diagonal jj entries of the partial transpose are nonnegative on the tetrahedron
    return bool(ppt_margin(x, y, r) >= -tol)


def z_ppt_boundary(rbar):
    """Largest z for which the facet state at ``rbar`` is PPT."""
    rb2 = np.asarray(rbar, dtype=float) ** 2
    out = (-1.0 + rb2 + 2.0 * np.sqrt(np.clip(1.0 - rb2, 0.0, None))) / (3.0 + rb2)
    return float(out) if np.ndim(out) == 0 else out


def z_sep_boundary(rbar):
    """Separable border ``z = (1 - |rbar|) / (3 - |rbar|)``.

    Solves ``z = [1 - rbar (1 - z)] / 3`` for z.
    """
    a = np.abs(np.asarray(rbar, dtype=float))
    out = (1.0 - a) / (3.0 - a)
    return float(out) if np.ndim(out) == 0 else out


def classify(rbar, z):
    """Region of the facet point; ties go to the less entangled label."""
    if not (-1.0 - _EDGE_TOL <= rbar <= 1.0 + _EDGE_TOL) or not (-_EDGE_TOL <= z <= 1.0 + _EDGE_TOL):
        return RegionLabel.NONPHYSICAL
    a = min(abs(rbar), 1.0)
    if z <= z_sep_boundary(a) + _EDGE_TOL:
        return RegionLabel.SEPARABLE
    if z <= z_ppt_boundary(a) + _EDGE_TOL:
        return RegionLabel.PPT_ENTANGLED
    return RegionLabel.NPT_ENTANGLED


def twirl(rho):
    """Project a two-qutrit operator onto the symmetric family.

    Equivalent to averaging over simultaneous cyclic shifts, the local phase
    group ``V(phi) = exp(i phi.g) (x) exp(-i phi.g)`` and complex conjugation:
    entries other than the diagonal and ``(jj, kk)`` vanish, the three
    members of each cyclic orbit are averaged and the ``(jj, kk)`` entries
    collapse onto the mean of their real parts.
    """
    rho = np.asarray(rho)
    diag = np.real(np.diag(rho))
    d0, dp, dm = (float(np.mean(diag[orbit])) for orbit in _DIAG_ORBITS)
    beta = float(np.mean([np.real(rho[i, k]) for i, k in _OFFDIAG_PAIRS]))
    out = np.zeros((DIM * DIM, DIM * DIM))
    for value, orbit in zip((d0, dp, dm), _DIAG_ORBITS):
        out[orbit, orbit] = value
    for i, k in _OFFDIAG_PAIRS:
        out[i, k] = beta
    return out


def check_density(rho, tol=1e-12, psd_tol=PSD_TOL):
    """Validate Hermiticity, unit trace and positivity; raise ``DomainError`` otherwise."""
    rho = np.asarray(rho)
    if rho.shape != (DIM * DIM, DIM * DIM):
        raise DomainError(f"expected a 9x9 matrix, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > tol:
        raise DomainError(f"matrix is not Hermitian (deviation {herm:.2e})", value=herm)
    tr = np.real(np.trace(rho))
    if abs(tr - 1.0) > tol:
        raise DomainError(f"trace is {tr!r}, expected 1", value=tr)
    lam = float(np.linalg.eigvalsh(rho).min())
    if lam < -psd_tol:
        raise DomainError(f"matrix is not positive semidefinite (eigenvalue {lam:.3e})", value=lam)
    return rho
