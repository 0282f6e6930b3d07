"""Density matrices, fidelity and Bures distance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import matrix
from .errors import DomainError

TRACE_ATOL = 1e-10
SPECTRUM_ATOL = 1e-12
FIDELITY_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix.

    Validation allows 1e-10 of rounding slack on the trace and on negative
    eigenvalues, which Monte Carlo states routinely carry.
    """

    matrix: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DomainError(f"density matrix must be square, got shape {mat.shape}")
        if self.validate:
            if not matrix.is_hermitian(mat):
                raise DomainError("density matrix is not Hermitian")
            tr = np.trace(mat).real
            if abs(tr - 1.0) > TRACE_ATOL:
                raise DomainError(f"density matrix trace is {tr!r}, expected 1")
            w = np.linalg.eigvalsh(mat)
            if w[0] < -matrix.PSD_SLACK:
                raise DomainError(f"density matrix has eigenvalue {w[0]:.3g} < 0")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.einsum("ij,ji->", self.matrix, self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return matrix.psd_eigvalsh(self.matrix)


@dataclass(frozen=True)
class FixedStateSpectrum:
    """Eigenvalues of a fixed state sigma (non-negative, summing to one)."""

    eigs: tuple[float, ...]

    def __post_init__(self):
        eigs = tuple(float(e) for e in self.eigs)
        if not eigs:
            raise DomainError("spectrum is empty")
        if min(eigs) < 0:
            raise DomainError(f"spectrum has a negative entry: {eigs}")
        if abs(math.fsum(eigs) - 1.0) > SPECTRUM_ATOL:
            raise DomainError(f"spectrum sums to {math.fsum(eigs)!r}, expected 1")
        object.__setattr__(self, "eigs", eigs)

    @classmethod
    def pure(cls, n: int) -> "FixedStateSpectrum":
        return cls((1.0,) + (0.0,) * (n - 1))

    @classmethod
    def maximally_mixed(cls, n: int) -> "FixedStateSpectrum":
        return cls((1.0 / n,) * n)

    @property
    def n(self) -> int:
        return len(self.eigs)

    @property
    def a(self) -> tuple[float, ...]:
        """Inverse eigenvalues ``1/eig`` of the strictly positive entries."""
        return tuple(1.0 / e for e in self.eigs if e > 0)

    @property
    def is_full_rank(self) -> bool:
        return min(self.eigs) > 0

    @property
    def degenerate(self) -> bool:
        """True when two eigenvalues coincide (relative tolerance 1e-12)."""
        s = sorted(self.eigs)
        return any(abs(y - x) <= 1e-12 * max(abs(y), 1e-300) for x, y in zip(s, s[1:]))

    @property
    def is_pure(self) -> bool:
        return abs(max(self.eigs) - 1.0) <= SPECTRUM_ATOL

    @property
    def is_maximally_mixed(self) -> bool:
        return all(abs(e - 1.0 / self.n) <= SPECTRUM_ATOL for e in self.eigs)


def from_spectrum(spec: FixedStateSpectrum) -> DensityMatrix:
    """Diagonal density matrix carrying the given eigenvalues."""
    return DensityMatrix(np.diag(np.asarray(spec.eigs, dtype=complex)))


def _check_dims(r1: DensityMatrix, r2: DensityMatrix) -> None:
    if r1.dim != r2.dim:
        raise DomainError(f"dimension mismatch: {r1.dim} vs {r2.dim}")


def symmetrized_product(a: DensityMatrix, b: DensityMatrix) -> np.ndarray:
    """``sqrt(a) b sqrt(a)``: Hermitian PSD with the same spectrum as ``a b``."""
    _check_dims(a, b)
    root = matrix.sqrt_psd(a.matrix)
    prod = root @ b.matrix @ root
    return 0.5 * (prod + matrix.dagger(prod))


def _hermitian_root(a: np.ndarray) -> np.ndarray:
    root = matrix.sqrt_psd(a)
    return 0.5 * (root + matrix.dagger(root))


def _root_fidelity_raw(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # the squared singular values of sqrt(a) sqrt(b) are the eigenvalues of
    # sqrt(a) b sqrt(a); summing singular values skips the square root of
    # rounding-level eigenvalues, which for rank-deficient states costs ~1e-8
    # and breaks the swap symmetry
    prod = _hermitian_root(a) @ _hermitian_root(b)
    return np.linalg.svd(prod, compute_uv=False).sum(axis=-1)


def root_fidelity(r1: DensityMatrix, r2: DensityMatrix) -> float:
    """``sqrt(F) = tr sqrt(sqrt(r1) r2 sqrt(r1))``."""
    _check_dims(r1, r2)
    return float(np.clip(_root_fidelity_raw(r1.matrix, r2.matrix), 0.0, 1.0))


def fidelity(r1: DensityMatrix, r2: DensityMatrix) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(r1) r2 sqrt(r1)))**2``.

    The square roots of the eigenvalues of the Hermitian symmetrized product
    are taken as the singular values of ``sqrt(r1) sqrt(r2)``, never through the
    non-Hermitian ``r1 r2``; values within 1e-9 outside [0, 1] are clamped.
    """
    _check_dims(r1, r2)
    f = float(_root_fidelity_raw(r1.matrix, r2.matrix) ** 2)
    if f > 1.0 + FIDELITY_SLACK:
        raise DomainError(f"fidelity {f!r} exceeds 1; inputs are not valid states")
    return min(max(f, 0.0), 1.0)


def bures_distance_sq(r1: DensityMatrix, r2: DensityMatrix) -> float:
    """Squared Bures distance ``2 - 2 sqrt(F)``, in [0, 2]."""
    return 2.0 - 2.0 * math.sqrt(fidelity(r1, r2))


# ---------------------------------------------------------------------------
# stacked variants used by the Monte Carlo harness


def product_eigenvalues(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``sqrt(a) b sqrt(a)`` for stacks of states ``(N, n, n)``.

    ``a`` may be a single ``(n, n)`` matrix shared across the stack.
    """
    root = matrix.sqrt_psd(a)
    prod = root @ b @ root
    prod = 0.5 * (prod + matrix.dagger(prod))
    return matrix.psd_eigvalsh(prod)


def root_fidelity_stack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.clip(_root_fidelity_raw(a, b), 0.0, 1.0)
