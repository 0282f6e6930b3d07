"""Shared quadrature helpers and fixtures."""

from __future__ import annotations

import numpy as np
import pytest


def graded_gauss_legendre(lo: float, hi: float, panels: int, order: int = 20, grading: float = 3.0):
    """Composite Gauss-Legendre nodes and weights, panels graded towards ``lo``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = lo + (hi - lo) * np.linspace(0.0, 1.0, panels + 1) ** grading
    a, b = edges[:-1, None], edges[1:, None]
    return ((a + b) / 2 + (b - a) / 2 * x).ravel(), ((b - a) / 2 * w).ravel()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(rng, n: int, rank: int | None = None) -> np.ndarray:
    g = rng.standard_normal((n, rank or n)) + 1j * rng.standard_normal((n, rank or n))
    w = g @ g.conj().T
    return w / np.trace(w).real
