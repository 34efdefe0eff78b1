"""Dense complex linear algebra for the 4-level system.

Matrices and states are plain numpy arrays: Hermitian operators are (4, 4)
complex arrays, states are length-4 complex vectors. Everything here is a
pure function; spectral decompositions carry a deterministic phase gauge
(largest-magnitude component of each eigenvector made real-positive) so that
identical inputs give bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import (
    EXPECTATION_IMAG_TOL,
    HERMITICITY_TOL,
    STATE_NORM_TOL,
)


class NotHermitianError(ValueError):
    """Input matrix violates the Hermiticity contract."""


@dataclass(frozen=True)
class BandSolution:
    """Full spectral decomposition of a 4x4 Hermitian matrix.

    eigenvalues are sorted ascending; eigenvectors[:, i] belongs to
    eigenvalues[i] and the set is orthonormal.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def band(self, n: int) -> np.ndarray:
        """Eigenvector of the n-th band, 1-based ascending."""
        return self.eigenvectors[:, n - 1]


def require_hermitian(h: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise NotHermitianError(f"expected square matrix, got shape {h.shape}")
    if not np.isfinite(h).all():
        raise NotHermitianError("matrix has non-finite entries")
    dev = np.abs(h - np.conj(np.swapaxes(h, -1, -2))).max()
    if dev > tol:
        raise NotHermitianError(f"matrix deviates from Hermiticity by {dev:.3e} (tol {tol:.0e})")
    return h


def require_state(psi: np.ndarray, tol: float = STATE_NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"state norm {nrm} violates unit-norm contract (tol {tol:.0e})")
    return psi


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Deterministic eigenvector gauge: largest-|.| component real-positive.

    Acts on the last-but-one axis (component axis) for each column of a
    (..., d, d) stack of column-eigenvector matrices.
    """
    v = np.asarray(vectors)
    idx = np.argmax(np.abs(v), axis=-2)
    lead = np.take_along_axis(v, idx[..., None, :], axis=-2)[..., 0, :]
    mag = np.abs(lead)
    phase = np.where(mag == 0.0, 1.0 + 0.0j, lead / np.where(mag == 0.0, 1.0, mag))
    return v * np.conj(phase)[..., None, :]


def hermitian_eig(h: np.ndarray) -> BandSolution:
    """Spectral decomposition with ascending eigenvalues and fixed gauge."""
    h = require_hermitian(h)
    w, v = np.linalg.eigh(h)
    return BandSolution(eigenvalues=w, eigenvectors=fix_phase(v))


def eigh_stack(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched eigh over a (..., 4, 4) Hermitian stack, same gauge as hermitian_eig.

    No Hermiticity validation: internal hot path, callers construct the stack.
    """
    w, v = np.linalg.eigh(h)
    return w, fix_phase(v)


def expm_minus_iH(h: np.ndarray, s: float) -> np.ndarray:
    """exp(-i*s*H) via spectral decomposition; unitary to machine precision."""
    if not np.isfinite(s):
        raise ValueError("duration must be finite")
    sol = hermitian_eig(h)
    phase = np.exp(-1j * s * sol.eigenvalues)
    return (sol.eigenvectors * phase) @ sol.eigenvectors.conj().T


def propagator_stack(h: np.ndarray, dt: float) -> np.ndarray:
    """Batched exp(-i*dt*H) over a (L, 4, 4) stack (internal hot path)."""
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * dt * w)
    return np.einsum("lij,lj,lkj->lik", v, phase, v.conj())


def apply(u: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.asarray(u, dtype=complex) @ np.asarray(psi, dtype=complex)


def inner(psi: np.ndarray, phi: np.ndarray) -> complex:
    """<psi|phi>, conjugate-linear in the first argument."""
    return complex(np.vdot(psi, phi))


def expectation(psi: np.ndarray, h: np.ndarray) -> float:
    """<psi|H|psi> for Hermitian H; asserts the imaginary part is negligible."""
    val = np.vdot(psi, np.asarray(h, dtype=complex) @ psi)
    if abs(val.imag) > EXPECTATION_IMAG_TOL * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian?")
    return float(val.real)
