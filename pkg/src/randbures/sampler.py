"""Hilbert-Schmidt random density matrices via the fixed-trace Wishart construction.

Reproducibility contract
------------------------
The sample index space is cut into chunks of ``CHUNK_SIZE`` consecutive
samples.  Chunk ``c`` of a run with seed ``S`` draws from
``PCG64(SeedSequence(S, spawn_key=(c,)))``, so any worker can regenerate any
chunk and results do not depend on how chunks are spread over workers.
Inside a chunk, the complex Ginibre block ``G`` of shape ``(size, n, m)`` is
built from two calls to numpy's ziggurat ``standard_normal``: real parts
first, then imaginary parts, each scaled by ``1/sqrt(2)``.  For pairs, the
``rho_1`` block is drawn before the ``rho_2`` block from the same generator.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, TypeVar

import numpy as np

from .errors import DomainError
from .states import DensityMatrix

CHUNK_SIZE = 1024

T = TypeVar("T")


@dataclass(frozen=True)
class EnsembleSpec:
    """Dimensions and sampling budget of a random-state ensemble.

    ``m2`` is set only for two-state ensembles.
    """

    n: int
    m: int
    m2: int | None = None
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        if self.m < self.n or (self.m2 is not None and self.m2 < self.n):
            raise DomainError(f"need n <= m (got n={self.n}, m={self.m}, m2={self.m2})")
        if self.samples < 1:
            raise DomainError(f"samples must be positive, got {self.samples}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def m1(self) -> int:
        return self.m

    @property
    def v1(self) -> int:
        return self.m - self.n

    @property
    def v2(self) -> int | None:
        return None if self.m2 is None else self.m2 - self.n

    def chunks(self) -> list[tuple[int, int]]:
        """``(chunk_index, size)`` pairs covering ``samples``."""
        full, rest = divmod(self.samples, CHUNK_SIZE)
        out = [(c, CHUNK_SIZE) for c in range(full)]
        if rest:
            out.append((full, rest))
        return out


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def ginibre(n: int, m: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of ``n x m`` complex Gaussian matrices with ``E|g|^2 = 1``."""
    re = rng.standard_normal((size, n, m))
    im = rng.standard_normal((size, n, m))
    return (re + 1j * im) * np.sqrt(0.5)


def wishart_stack(n: int, m: int, size: int, rng: np.random.Generator) -> np.ndarray:
    if m < n:
        raise DomainError(f"need n <= m, got n={n}, m={m}")
    g = ginibre(n, m, size, rng)
    w = g @ np.conj(np.swapaxes(g, -1, -2))
    return 0.5 * (w + np.conj(np.swapaxes(w, -1, -2)))


def density_stack(n: int, m: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` samples of ``rho = W / tr W`` as an array ``(size, n, n)``."""
    w = wishart_stack(n, m, size, rng)
    tr = np.trace(w, axis1=-2, axis2=-1).real
    return w / tr[:, None, None]


def sample_wishart(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """One Wishart-Laguerre matrix ``W = G G^dagger``, density ~ det(W)^(m-n) exp(-tr W)."""
    return wishart_stack(n, m, 1, rng)[0]


def sample_density(n: int, m: int, rng: np.random.Generator) -> DensityMatrix:
    """One Hilbert-Schmidt distributed density matrix of dimension ``n``."""
    return DensityMatrix(density_stack(n, m, 1, rng)[0])


def sample_pair(n: int, m1: int, m2: int, rng: np.random.Generator) -> tuple[DensityMatrix, DensityMatrix]:
    """Two independent random states, traced-out dimensions ``m1`` and ``m2``."""
    return sample_density(n, m1, rng), sample_density(n, m2, rng)


def chunk_states(spec: EnsembleSpec, chunk: int, size: int) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Regenerate chunk ``chunk`` of the ensemble described by ``spec``."""
    rng = chunk_rng(spec.seed, chunk)
    first = density_stack(spec.n, spec.m, size, rng)
    if spec.m2 is None:
        return first
    return first, density_stack(spec.n, spec.m2, size, rng)


def iter_chunks(spec: EnsembleSpec) -> Iterator[np.ndarray | tuple[np.ndarray, np.ndarray]]:
    for chunk, size in spec.chunks():
        yield chunk_states(spec, chunk, size)


def _run_chunk(args):
    func, spec, chunk, size = args
    return func(chunk_states(spec, chunk, size))


def map_chunks(func: Callable[..., T], spec: EnsembleSpec, workers: int = 1) -> list[T]:
    """Apply ``func`` to every chunk's states; results come back in chunk order.

    ``func`` must be picklable (a module-level function) when ``workers > 1``.
    """
    tasks = [(func, spec, c, size) for c, size in spec.chunks()]
    if workers <= 1:
        return [_run_chunk(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chunk, tasks))
