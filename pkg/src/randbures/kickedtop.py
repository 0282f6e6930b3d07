"""Coupled kicked tops: Floquet evolution and reduced-state ensembles.

Two spins ``j1`` and ``j2`` are each kicked (``exp(-i kappa/(2j) Jz^2)``),
rotated by ``pi/2`` about ``y`` and coupled through ``exp(-i eps/sqrt(j1 j2)
Jz1 Jz2)``.  The product state is stored as an ``n x m`` matrix ``Psi`` so one
step is ``Psi -> phase * (U1 Psi U2^T)`` and the reduced state of the first
top is ``Psi Psi^dagger``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import matrix
from .errors import DomainError
from .states import DensityMatrix

DEFAULT_THETA = 2.25
DEFAULT_PHI = 1.1


def _check_spin(j: float) -> float:
    two_j = 2 * j
    if two_j < 0 or abs(two_j - round(two_j)) > 1e-12:
        raise DomainError(f"spin must be a non-negative integer or half-integer, got {j!r}")
    return round(two_j) / 2


@dataclass(frozen=True)
class KickedTopConfig:
    """Parameters of one coupled-kicked-top trajectory.

    ``n = 2 j1 + 1`` is the dimension of the reduced states, ``m = 2 j2 + 1``
    that of the traced-out top.  Consecutive samples are correlated; use batch
    means for error bars.
    """

    j1: float
    j2: float
    kappa1: float
    kappa2: float
    epsilon: float
    theta1: float = DEFAULT_THETA
    phi1: float = DEFAULT_PHI
    theta2: float = DEFAULT_THETA
    phi2: float = DEFAULT_PHI
    transient: int = 500
    samples: int = 1000
    thinning: int = 1

    def __post_init__(self):
        for name in ("j1", "j2"):
            j = _check_spin(getattr(self, name))
            if j <= 0:
                raise DomainError(f"{name} must be positive, got {j}")
            object.__setattr__(self, name, j)
        if self.transient < 0:
            raise DomainError(f"transient must be >= 0, got {self.transient}")
        if self.samples < 1:
            raise DomainError(f"samples must be >= 1, got {self.samples}")
        if self.thinning < 1:
            raise DomainError(f"thinning must be >= 1, got {self.thinning}")

    @property
    def n(self) -> int:
        return int(2 * self.j1 + 1)

    @property
    def m(self) -> int:
        return int(2 * self.j2 + 1)


def _m_values(j: float) -> np.ndarray:
    return j - np.arange(int(round(2 * j)) + 1)


def raising_operator(j: float) -> np.ndarray:
    """``J+`` in the basis ``m_z = j, j-1, ..., -j``."""
    j = _check_spin(j)
    mz = _m_values(j)
    dim = mz.size
    jp = np.zeros((dim, dim), dtype=complex)
    # <m+1|J+|m> sits one row above the column of m
    for col in range(1, dim):
        m = mz[col]
        jp[col - 1, col] = math.sqrt(j * (j + 1) - m * (m + 1))
    return jp


def angular_momentum_ops(j: float) -> tuple[np.ndarray, np.ndarray]:
    """``(Jy, Jz)`` for spin ``j`` in the basis ``m_z = j, ..., -j``."""
    j = _check_spin(j)
    jp = raising_operator(j)
    jy = (jp - matrix.dagger(jp)) / 2j
    jz = np.diag(_m_values(j)).astype(complex)
    return jy, jz


def jx_operator(j: float) -> np.ndarray:
    jp = raising_operator(j)
    return 0.5 * (jp + matrix.dagger(jp))


def coherent_state(j: float, theta: float, phi: float) -> np.ndarray:
    """Spin coherent state ``|theta, phi>`` with <J> along (sin t cos p, sin t sin p, cos t) j.

    ``|j, j>`` rotated by ``theta`` about the axis ``(sin phi, -cos phi, 0)``.
    """
    j = _check_spin(j)
    jy, _ = angular_momentum_ops(j)
    jx = jx_operator(j)
    top = np.zeros(int(round(2 * j)) + 1, dtype=complex)
    top[0] = 1.0
    generator = math.sin(phi) * jx - math.cos(phi) * jy
    # unitary_exp(h, s) = exp(-i s h); the rotation is exp(+i theta generator)
    psi = matrix.unitary_exp(generator, -theta) @ top
    return psi / np.linalg.norm(psi)


def single_top_unitary(j: float, kappa: float) -> np.ndarray:
    """``exp(-i kappa/(2j) Jz^2) exp(-i pi/2 Jy)``."""
    jy, _ = angular_momentum_ops(j)
    kick = np.exp(-1j * kappa / (2 * j) * _m_values(j) ** 2)
    return kick[:, None] * matrix.unitary_exp(jy, math.pi / 2)


@dataclass(frozen=True, eq=False)
class FloquetOperator:
    """One period of the coupled tops, ``U = U12 (U1 (x) U2)``, kept in factored form.

    ``coupling[a, b] = exp(-i eps m_a m_b / sqrt(j1 j2))`` are the diagonal
    entries of ``U12`` on the product basis.
    """

    u1: np.ndarray
    u2: np.ndarray
    coupling: np.ndarray

    @property
    def dim(self) -> int:
        return self.u1.shape[0] * self.u2.shape[0]

    @functools.cached_property
    def _u2_t(self) -> np.ndarray:
        return np.ascontiguousarray(self.u2.T)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Apply ``U`` to a state given as an ``n x m`` matrix (or a flat vector)."""
        flat = psi.ndim == 1
        mat = psi.reshape(self.coupling.shape) if flat else psi
        out = self.coupling * (self.u1 @ mat @ self._u2_t)
        return out.reshape(-1) if flat else out

    def dense(self) -> np.ndarray:
        """The full ``nm x nm`` matrix; for checks, not for time stepping."""
        return self.coupling.reshape(-1)[:, None] * matrix.kron(self.u1, self.u2)


def build_floquet(config: KickedTopConfig) -> FloquetOperator:
    u1 = single_top_unitary(config.j1, config.kappa1)
    u2 = single_top_unitary(config.j2, config.kappa2)
    m1, m2 = _m_values(config.j1), _m_values(config.j2)
    coupling = np.exp(-1j * config.epsilon / math.sqrt(config.j1 * config.j2) * np.outer(m1, m2))
    return FloquetOperator(u1, u2, coupling)


def initial_state(config: KickedTopConfig) -> np.ndarray:
    """Product coherent state as an ``n x m`` matrix."""
    a = coherent_state(config.j1, config.theta1, config.phi1)
    b = coherent_state(config.j2, config.theta2, config.phi2)
    return np.outer(a, b)


def trajectory(config: KickedTopConfig) -> Iterator[np.ndarray]:
    """Yield the ``n x m`` state matrices that enter the ensemble."""
    floquet = build_floquet(config)
    psi = initial_state(config)
    for _ in range(config.transient):
        psi = floquet.apply(psi)
    for _ in range(config.samples):
        for _ in range(config.thinning):
            psi = floquet.apply(psi)
        yield psi


def evolve_stack(config: KickedTopConfig) -> np.ndarray:
    """Reduced states of the first top as an array ``(samples, n, n)``."""
    out = np.empty((config.samples, config.n, config.n), dtype=complex)
    for idx, psi in enumerate(trajectory(config)):
        rho = psi @ matrix.dagger(psi)
        out[idx] = 0.5 * (rho + matrix.dagger(rho))
    return out


def evolve_ensemble(config: KickedTopConfig) -> list[DensityMatrix]:
    """Reduced density matrices ``tr_2 |psi(t)><psi(t)|`` after the transient."""
    return [DensityMatrix(rho) for rho in evolve_stack(config)]


def _check_pair(config_a: KickedTopConfig, config_b: KickedTopConfig) -> None:
    if config_a.j1 != config_b.j1:
        raise DomainError(f"paired systems need the same j1, got {config_a.j1} and {config_b.j1}")
    if config_a.samples != config_b.samples:
        raise DomainError("paired systems need the same number of samples")


def evolve_pair_stack(config_a: KickedTopConfig, config_b: KickedTopConfig) -> tuple[np.ndarray, np.ndarray]:
    _check_pair(config_a, config_b)
    return evolve_stack(config_a), evolve_stack(config_b)


def evolve_pair_ensemble(
    config_a: KickedTopConfig, config_b: KickedTopConfig
) -> list[tuple[DensityMatrix, DensityMatrix]]:
    """Step-aligned reduced states of two independent coupled-top systems."""
    a, b = evolve_pair_stack(config_a, config_b)
    return [(DensityMatrix(x), DensityMatrix(y)) for x, y in zip(a, b)]
