"""Dense complex linear algebra used throughout the compiler.

All routines are pure functions of their inputs and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NumericalError(RuntimeError):
    """A factorization failed or produced an out-of-tolerance result."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds. ``unitarity_tol`` is scaled by the matrix dimension."""

    unitarity_tol: float = 1e-10
    reconstruction_tol: float = 1e-8
    solve_tol: float = 1e-12

    def __post_init__(self):
        for name in ("unitarity_tol", "reconstruction_tol", "solve_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_TOLERANCES = Tolerances()

# phases closer than this are treated as one eigenvalue cluster
PHASE_CLUSTER_TOL = 1e-9


def as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def unitarity_error(m: np.ndarray) -> float:
    """Frobenius norm of ``M^dagger M - I``."""
    m = as_matrix(m)
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])))


def is_unitary(m: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    m = as_matrix(m)
    return unitarity_error(m) <= tol.unitarity_tol * m.shape[0]


def require_unitary(m: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES, what: str = "matrix"):
    m = as_matrix(m)
    err = unitarity_error(m)
    if err > tol.unitarity_tol * m.shape[0]:
        raise ValueError(
            f"{what} is not unitary: |M^+M - I|_F = {err:.3e} "
            f"exceeds {tol.unitarity_tol * m.shape[0]:.3e}"
        )
    return m


def is_identity(m: np.ndarray | None, atol: float = 1e-12) -> bool:
    """True for ``None`` (the identity tag) or a matrix entrywise within ``atol`` of I."""
    if m is None:
        return True
    return bool(np.max(np.abs(m - np.eye(m.shape[0]))) <= atol)


def is_global_phase(m: np.ndarray, atol: float = 1e-12) -> bool:
    """True if ``m`` is ``e^{ia} I`` up to ``atol`` entrywise."""
    z = m[0, 0]
    if abs(abs(z) - 1) > atol:
        return False
    return bool(np.max(np.abs(m - z * np.eye(m.shape[0]))) <= atol)


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition ``M = U diag(s) V^dagger``.

    Returns ``(U, s, V)`` with ``s`` sorted descending. Note that ``V`` is
    returned, not ``V^dagger``.
    """
    m = np.asarray(m, dtype=np.complex128)
    if not np.all(np.isfinite(m)):
        raise ValueError("svd input contains non-finite entries")
    try:
        u, s, vh = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"svd did not converge: {exc}") from exc
    return u, s, vh.conj().T


def eig_unitary(m, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[np.ndarray, np.ndarray]:
    """Spectral decomposition of a unitary, ``M = V diag(exp(i*phases)) V^dagger``.

    Uses the complex Schur form, which is diagonal for normal input, so ``V``
    is unitary even for degenerate spectra. Phases lie in (-pi, pi] and are
    sorted ascending (ties by original index). Each cluster of phases within
    ``PHASE_CLUSTER_TOL`` gets a QR-orthonormalized basis with positive
    R-diagonal so the output does not depend on LAPACK's arbitrary choice.
    """
    m = require_unitary(m, tol, "eig_unitary input")
    t, z = scipy.linalg.schur(m, output="complex")
    lam = np.diag(t)
    phases = np.angle(lam)
    # np.angle maps to [-pi, pi]; fold -pi onto +pi
    phases = np.where(phases <= -np.pi + 1e-15, np.pi, phases)
    order = np.lexsort((np.arange(len(phases)), phases))
    phases = phases[order]
    v = z[:, order]

    start = 0
    for stop in range(1, len(phases) + 1):
        if stop == len(phases) or phases[stop] - phases[stop - 1] > PHASE_CLUSTER_TOL:
            if stop - start > 1:
                q, r = np.linalg.qr(v[:, start:stop])
                signs = np.diag(r) / np.abs(np.diag(r))
                v[:, start:stop] = q * signs
            start = stop
    return v, phases


def haar_random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary from the QR of a complex Gaussian matrix.

    The R-diagonal phases are divided out of Q, which is what makes the
    distribution Haar rather than merely unitary.
    """
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def phase_distance(a, b) -> float:
    """``min_phi |A - e^{i phi} B|_F`` with ``phi = arg tr(B^dagger A)``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    overlap = np.vdot(b, a)  # tr(B^dagger A)
    phi = np.angle(overlap) if overlap != 0 else 0.0
    return float(np.linalg.norm(a - np.exp(1j * phi) * b))
