"""Dense complex linear algebra used throughout the package.

Everything here is a thin contract layer over LAPACK (via numpy): Hermitian
eigendecomposition, PSD square roots, partial traces and unitaries generated
by Hermitian matrices.  Functions accept stacks of matrices where noted.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

HERMITIAN_ATOL = 1e-12
PSD_SLACK = 1e-10


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(h: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    h = np.asarray(h)
    return h.ndim >= 2 and h.shape[-1] == h.shape[-2] and bool(np.allclose(h, dagger(h), rtol=0.0, atol=atol))


def _require_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise DomainError("matrix is not Hermitian within 1e-12")
    return h


def eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.

    Works on stacks ``(..., d, d)``.
    """
    return np.linalg.eigh(_require_hermitian(h))


def _clamped_sqrt(w: np.ndarray) -> np.ndarray:
    top = np.max(np.abs(w), axis=-1, keepdims=True)
    if np.any(w < -PSD_SLACK * top):
        raise DomainError("matrix is not positive semidefinite (eigenvalue below -1e-10 * max)")
    return np.sqrt(np.clip(w, 0.0, None))


def sqrt_psd(h: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues in ``[-1e-10 * max_eig, 0)`` are rounding noise and clamp to
    zero; anything more negative raises :class:`DomainError`.
    """
    w, v = eigh(h)
    root = _clamped_sqrt(w)
    return (v * root[..., None, :]) @ dagger(v)


def psd_eigvalsh(h: np.ndarray) -> np.ndarray:
    """Eigenvalues of a PSD matrix (stack), clamped at zero within the PSD slack."""
    w = np.linalg.eigvalsh(np.asarray(h))
    _clamped_sqrt(w)
    return np.clip(w, 0.0, None)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def partial_trace_second(m: np.ndarray, n: int, m_dim: int) -> np.ndarray:
    """Trace out the second factor of an operator on ``C^n (x) C^m_dim``.

    ``out[i, j] = sum_k m[i*m_dim + k, j*m_dim + k]``.
    """
    m = np.asarray(m)
    if m.shape[-2:] != (n * m_dim, n * m_dim):
        raise DomainError(f"expected a {n * m_dim}x{n * m_dim} matrix, got shape {m.shape}")
    blocks = m.reshape(m.shape[:-2] + (n, m_dim, n, m_dim))
    return np.einsum("...ikjk->...ij", blocks)


def reduced_from_vector(psi: np.ndarray, n: int, m_dim: int) -> np.ndarray:
    """``tr_2 |psi><psi|`` without forming the full projector."""
    mat = np.asarray(psi).reshape(psi.shape[:-1] + (n, m_dim))
    return mat @ dagger(mat)


def unitary_exp(h: np.ndarray, scale: float) -> np.ndarray:
    """``exp(-1j * scale * h)`` for Hermitian ``h``, via its eigendecomposition."""
    w, v = eigh(h)
    return (v * np.exp(-1j * scale * w)[..., None, :]) @ dagger(v)
