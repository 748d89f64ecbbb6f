"""Exact 2x2 density-matrix algebra, Bloch conversions, and state comparison functionals.

Basis convention: index 0 is the excited state |e>, index 1 the ground state |g>,
so the lowering operator has sigma_minus[1, 0] = 1.  The Bloch vector is
rho = (I + x sx + y sy + z sz) / 2, which puts |g><g| at (0, 0, -1).
"""

import warnings

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

KET_E = np.array([1.0, 0.0], dtype=complex)
KET_G = np.array([0.0, 1.0], dtype=complex)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-9


class StateValidationError(ValueError):
    """A matrix failed the density-matrix invariants."""


def bloch_to_state(b) -> np.ndarray:
    """Density matrix for a Bloch vector (x, y, z) with |b| <= 1."""
    x, y, z = (float(v) for v in b)
    norm2 = x * x + y * y + z * z
    if norm2 > 1.0 + PSD_TOL:
        raise StateValidationError(f"Bloch vector has |b| = {np.sqrt(norm2):.6g} > 1")
    return 0.5 * (IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


def state_to_bloch(rho: np.ndarray) -> np.ndarray:
    """Bloch vector (x, y, z) of a 2x2 density matrix."""
    rho = np.asarray(rho)
    x = 2.0 * rho[0, 1].real
    y = -2.0 * rho[0, 1].imag
    z = (rho[0, 0] - rho[1, 1]).real
    return np.array([x, y, z])


def ket_to_state(psi: np.ndarray) -> np.ndarray:
    """|psi><psi| for a (not necessarily normalized) 2-component ket."""
    psi = np.asarray(psi, dtype=complex)
    rho = np.outer(psi, psi.conj())
    return rho / np.trace(rho).real


def purity(rho: np.ndarray) -> float:
    """Tr[rho^2]; 1 for pure states, 1/2 for the maximally mixed qubit."""
    rho = np.asarray(rho)
    return float(np.einsum("ij,ji->", rho, rho).real)


def trsd(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Trace of the squared difference (squared Hilbert-Schmidt distance), in [0, 2]."""
    d = np.asarray(rho) - np.asarray(sigma)
    return float(np.einsum("ij,ji->", d, d).real)


def fidelity(rho: np.ndarray, sigma: np.ndarray, pure_tol: float = 1e-9) -> float:
    """Tr[rho sigma]; equals the Jozsa fidelity when either argument is pure.

    Warns (without failing) if neither argument is pure, since the overlap
    then underestimates the Jozsa fidelity.
    """
    if purity(rho) < 1.0 - pure_tol and purity(sigma) < 1.0 - pure_tol:
        warnings.warn(
            "fidelity: neither argument is pure; Tr[rho sigma] is not the "
            "Jozsa fidelity in this case",
            stacklevel=2,
        )
    return float(np.einsum("ij,ji->", np.asarray(rho), np.asarray(sigma)).real)


def min_eigenvalue(rho: np.ndarray) -> float:
    """Smaller eigenvalue of a 2x2 Hermitian matrix (closed form)."""
    rho = np.asarray(rho)
    mean = 0.5 * (rho[0, 0] + rho[1, 1]).real
    half_gap = 0.5 * (rho[0, 0] - rho[1, 1]).real
    rad = np.sqrt(half_gap * half_gap + abs(rho[0, 1]) ** 2)
    return float(mean - rad)


def validate_state(rho: np.ndarray, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; returns rho unchanged."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise StateValidationError(f"expected a 2x2 matrix, got shape {rho.shape}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > HERMITICITY_TOL:
        raise StateValidationError(f"not Hermitian: max|rho - rho^dag| = {herm:.3g}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateValidationError(f"trace deviates from 1 by {abs(tr - 1.0):.3g}")
    lo = min_eigenvalue(rho)
    if lo < -psd_tol:
        raise StateValidationError(f"negative eigenvalue {lo:.3g}")
    return rho


def repair_psd(rho: np.ndarray, abort_below: float = -PSD_TOL) -> np.ndarray:
    """Clip a slightly negative eigenvalue to zero and renormalize the trace.

    Violations beyond ``abort_below`` abort rather than being silently
    repaired, since they indicate an integrator bug rather than round-off.
    """
    lo = min_eigenvalue(rho)
    if lo >= 0.0:
        return rho
    if lo < abort_below:
        raise StateValidationError(
            f"eigenvalue {lo:.3g} below repair threshold {abort_below:.1g}"
        )
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0.0, None)
    out = (vecs * vals) @ vecs.conj().T
    return out / np.trace(out).real
