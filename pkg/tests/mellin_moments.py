"""Mellin moments of the two Meijer G-functions by quadrature, and their closed forms."""

import math

import mpmath
import numpy as np

from randbures import specfun
from randbures.specfun import MeijerGSpec213, MeijerGSpec321

from conftest import graded_gauss_legendre


def moment_213(j, k, v1, v2, power=None):
    """``integral_0^inf y^power G(y) dy``, ``power = k + 1/2`` by default."""
    power = k + 0.5 if power is None else power
    u, w = graded_gauss_legendre(0.0, 30.0, 60, grading=1.0)
    y = u * u
    term = MeijerGSpec213(j, v1, v2, 1.0).term()
    scale = -float(term.log_phi(np.array([specfun.CONTOUR_REAL_PART + 0j]))[0].real)
    res = specfun.mellin_barnes_batch([MeijerGSpec213(j, v1, v2, 1.0).term(log_scale=scale)], y, atol=1e-13)
    return float(np.sum(w * 2 * u * y**power * res.values)) * math.exp(-scale)


def moment_321(j, k, n, m1, m2):
    # G vanishes like (1 - mu)^d with d >= 2 at the upper end, where the
    # contour integral converges slowly; stop just short of it
    u, w = graded_gauss_legendre(0.0, 0.999, 40, grading=1.0)
    mu = u * u
    spec = MeijerGSpec321.from_dimensions(n, m1, m2, j, k, 0.5)
    scale = -float(spec.term().log_phi(np.array([specfun.CONTOUR_REAL_PART + 0j]))[0].real)
    res = specfun.mellin_barnes_batch([spec.term(log_scale=scale)], mu, atol=1e-11)
    return float(np.sum(w * 2 * u * mu ** (k + 0.5) * res.values)) * math.exp(-scale)


def gamma_(x):
    return float(mpmath.gamma(x))


def moment_213_exact(j, k, v1, v2):
    return gamma_(k + v1 + 1.5) * gamma_(k + v2 + 1.5) * gamma_(j - k - 0.5) / gamma_(-k - 0.5)


def moment_321_exact(j, k, n, m1, m2):
    v1, v2 = m1 - n, m2 - n
    return moment_213_exact(j, k, v1, v2) / (gamma_(n * m1 + 0.5) * gamma_(n * m2 + 0.5))


def moment_identity_errors(v1: int, v2: int, j_max: int = 3) -> list[tuple[str, int, int, float]]:
    """Relative errors of both identities for all ``k <= j <= j_max``."""
    out = []
    for j in range(j_max + 1):
        n = j + 2
        for k in range(j + 1):
            exact = moment_213_exact(j, k, v1, v2)
            out.append(("213", j, k, abs(moment_213(j, k, v1, v2) / exact - 1)))
            exact = moment_321_exact(j, k, n, n + v1, n + v2)
            out.append(("321", j, k, abs(moment_321(j, k, n, n + v1, n + v2) / exact - 1)))
    return out
