"""Closed-form spectral densities and mean root fidelities.

Four scenarios are covered:

* ``fixed`` - a fixed full-rank state sigma with distinct eigenvalues against
  a Hilbert-Schmidt random state (determinant formulas in ``a_j = 1/eig_j``);
* ``pure`` - sigma a pure state, where the fidelity is Beta(m, nm - m);
* ``mixed`` - sigma maximally mixed;
* ``two`` - two independent random states with traced-out dimensions
  ``m1`` and ``m2`` (Meijer G assembly).

All gamma-function prefactors are combined in log space.
"""

from __future__ import annotations

import functools
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Sequence

import gmpy2
import mpmath
import numpy as np
from scipy import integrate, special

from . import specfun
from .errors import DegenerateSpectrumError, DomainError
from .specfun import MeijerGSpec321, log_pochhammer, signed_log_gamma
from .states import FixedStateSpectrum

SCENARIOS = ("fixed", "pure", "mixed", "two")

# above this many digits of expected cancellation the fixed-sigma mean
# switches from float determinants to mpmath
AUTO_PRECISION_DIGITS = 4.0
# above this many digits of cancellation the chi density leaves the contour
# for its exact residue expansion
CHI_EXACT_DIGITS = 6.0
# outside this window the chi density uses its exact residue sum: close to
# mu = 1 the contour integrand decays too slowly to truncate, and close to
# mu = 0 the factor mu^(-1/2) on the contour amplifies rounding
CHI_CONTOUR_WINDOW = (1e-6, 0.99)
# grid panels next to a divergent endpoint that grid_density integrates adaptively
SINGULAR_PANELS = 8


@dataclass(frozen=True)
class MeanFidelityResult:
    """Mean root fidelity and the matching mean square Bures distance."""

    mean_root_fidelity: float
    scenario: str
    mean_sq_bures: float = field(init=False)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise DomainError(f"unknown scenario {self.scenario!r}")
        object.__setattr__(self, "mean_sq_bures", 2.0 - 2.0 * self.mean_root_fidelity)


@dataclass(frozen=True)
class GridDensity:
    """A density tabulated on a grid clustered towards both support endpoints.

    ``normalization`` is the trapezoid rule in the angle variable
    ``x = lo + (hi - lo)(1 - cos theta)/2``, which absorbs integrable
    logarithmic endpoint singularities; the panels next to an endpoint where
    the density diverges are integrated adaptively instead.  Such endpoints
    are left out of ``abscissae`` and listed in ``divergent_endpoints``.
    """

    abscissae: np.ndarray
    values: np.ndarray
    support: tuple[float, float]
    normalization: float
    first_moment: float
    divergent_endpoints: tuple[float, ...] = ()
    warning: str | None = None


# ---------------------------------------------------------------------------
# helpers


def _check_dims(n: int, m: int) -> None:
    if n < 1 or m < n:
        raise DomainError(f"need 1 <= n <= m, got n={n}, m={m}")


def _log_vandermonde(a: Sequence[float]) -> tuple[float, float]:
    """``(sign, log|prod_{r>l} (a_r - a_l)|)``."""
    sign, log_val = 1.0, 0.0
    for r in range(len(a)):
        for l in range(r):
            d = a[r] - a[l]
            sign *= math.copysign(1.0, d)
            log_val += math.log(abs(d))
    return sign, log_val


def _row_scaled_slogdet(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """slogdet of a stack after dividing each row by its largest entry."""
    scale = np.max(np.abs(mats), axis=-1, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    sign, logdet = np.linalg.slogdet(mats / scale)
    return sign, logdet + np.log(scale[..., 0]).sum(axis=-1)


def _cancellation_digits(a: np.ndarray) -> float:
    """Decimal digits the determinant sum loses to nearly equal ``a_j``."""
    top = float(np.max(np.abs(a)))
    return sum(
        math.log10(top / abs(a[r] - a[l])) for r in range(len(a)) for l in range(r)
    )


def _fixed_spectrum_a(sigma: FixedStateSpectrum, n: int) -> np.ndarray:
    if sigma.n != n:
        raise DomainError(f"spectrum has {sigma.n} eigenvalues, expected n={n}")
    if not sigma.is_full_rank:
        raise DomainError("the determinant formulas need strictly positive eigenvalues of sigma")
    if sigma.degenerate:
        raise DegenerateSpectrumError(
            "sigma has repeated eigenvalues; use perturbed_limit() or the pure/mixed closed forms"
        )
    return np.array(sigma.a)


def tau_support(sigma: FixedStateSpectrum) -> tuple[float, float]:
    """Support of a generic eigenvalue of sqrt(sigma) rho sqrt(sigma): (0, max eig)."""
    return 0.0, max(sigma.eigs)


# ---------------------------------------------------------------------------
# fixed sigma


def density_tau(sigma: FixedStateSpectrum, n: int, m: int, lam):
    """Density of a generic eigenvalue of ``tau = sqrt(sigma) rho sqrt(sigma)``.

    Sum over ``i`` of determinants whose ``i``-th column holds
    ``a_j^m lam^(m-i) (1 - a_j lam)^(i+nm-m-2) / (Gamma(m-i+1) Gamma(i+nm-m-1))``
    (zero once ``a_j lam >= 1``) and whose other columns are ``a_j^(k-1)``,
    divided by the Vandermonde product of the ``a_j``.  Zero outside
    ``(0, max eig)``.  ``lam`` may be a scalar or an array.
    """
    _check_dims(n, m)
    if n == 1:
        raise DomainError("for n = 1 tau is the constant sigma; the density is a point mass")
    a = _fixed_spectrum_a(sigma, n)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.zeros(lam_arr.shape)
    inside = (lam_arr >= 0) & (lam_arr < 1.0 / a.min())
    x = lam_arr[inside]
    if x.size == 0:
        return out if np.ndim(lam) else float(out[0])

    v_sign, v_log = _log_vandermonde(a)
    powers = a[:, None] ** np.arange(n)[None, :]  # (n, n): a_j^(k-1)
    base = np.broadcast_to(powers, (x.size, n, n))
    total = np.zeros(x.size)
    one_minus = 1.0 - a[None, :] * x[:, None]  # (L, n)
    for i in range(1, n + 1):
        log_pref = (
            special.gammaln(n * m) - math.log(n)
            - special.gammaln(m - i + 1) - special.gammaln(i + n * m - m - 1)
        )
        with np.errstate(divide="ignore"):
            log_col = (
                log_pref
                + m * np.log(a)[None, :]
                + special.xlogy(m - i, x)[:, None]
                + special.xlogy(i + n * m - m - 2, np.clip(one_minus, 0.0, None))
            )
        col = np.where(one_minus > 0, np.exp(log_col), 0.0)
        mats = base.copy()
        mats[:, :, i - 1] = col
        sign, logdet = _row_scaled_slogdet(mats)
        total += sign * np.exp(logdet - v_log)
    out[inside] = v_sign * total
    return out if np.ndim(lam) else float(out[0])


def mean_root_fidelity_fixed(
    sigma: FixedStateSpectrum, n: int, m: int, precision: int | None = None
) -> MeanFidelityResult:
    """Mean root fidelity between a fixed state and a random state.

    ``<sqrt F> = sum_i det[xi^(i)] / ((nm)_{1/2} prod_{r>l}(a_r - a_l))`` where
    column ``i`` of ``xi^(i)`` is ``(m-i+1)_{1/2} a_j^(i-3/2)`` and the other
    columns are ``a_j^(k-1)``.  Rows are rescaled before each determinant and
    the Vandermonde product is divided out in log space.  Passing
    ``precision`` (decimal digits) evaluates everything in mpmath instead.
    This happens automatically when nearly equal eigenvalues would cost more
    than ``AUTO_PRECISION_DIGITS`` digits to cancellation.
    """
    _check_dims(n, m)
    a = _fixed_spectrum_a(sigma, n)
    if n == 1:
        return MeanFidelityResult(1.0, "fixed")
    lost = _cancellation_digits(a)
    if precision is None and lost > AUTO_PRECISION_DIGITS:
        precision = 25 + math.ceil(lost)
    if precision is not None:
        return MeanFidelityResult(float(_mrf_fixed_mp(sigma.eigs, m, precision)), "fixed")

    v_sign, v_log = _log_vandermonde(a)
    powers = a[:, None] ** np.arange(n)[None, :]
    mats = np.broadcast_to(powers, (n, n, n)).copy()
    for i in range(1, n + 1):
        mats[i - 1, :, i - 1] = math.exp(log_pochhammer(m - i + 1, 0.5)) * a ** (i - 1.5)
    sign, logdet = _row_scaled_slogdet(mats)
    total = np.sum(sign * np.exp(logdet - v_log - log_pochhammer(n * m, 0.5)))
    return MeanFidelityResult(float(v_sign * total), "fixed")


def _mrf_fixed_mp(eigs: Sequence[float], m: int, digits: int):
    with mpmath.workdps(digits):
        a = [1 / mpmath.mpf(e) for e in eigs]
        n = len(a)
        vander = mpmath.mpf(1)
        for r in range(n):
            for l in range(r):
                vander *= a[r] - a[l]
        total = mpmath.mpf(0)
        for i in range(1, n + 1):
            col = mpmath.gamma(m - i + mpmath.mpf(3) / 2) / mpmath.gamma(m - i + 1)
            mat = mpmath.matrix(n, n)
            for j in range(n):
                for k in range(1, n + 1):
                    mat[j, k - 1] = col * a[j] ** (i - mpmath.mpf(3) / 2) if k == i else a[j] ** (k - 1)
            total += mpmath.det(mat)
        poch = mpmath.gamma(n * m + mpmath.mpf(1) / 2) / mpmath.gamma(n * m)
        return total / (poch * vander)


def perturbed_limit(
    func: Callable[[FixedStateSpectrum], float],
    sigma: FixedStateSpectrum,
    rel_delta: float = 1e-5,
) -> float:
    """Evaluate ``func`` at a degenerate spectrum by perturb-and-extrapolate.

    Each group of ``r`` equal eigenvalues is spread to ``e + k delta`` with
    ``k`` running symmetrically over ``-(r-1)/2 .. (r-1)/2`` (trace is kept);
    zero eigenvalues are lifted to ``k delta`` instead, ``k = 1..r``, and the
    nonzero ones are rescaled to keep unit trace.  ``delta`` is ``rel_delta`` times
    the mean gap between distinct levels (or the level itself when there is
    only one).  ``func`` is evaluated at ``delta`` and ``2 delta`` and
    Richardson-extrapolated, second order for symmetric spreading and order
    one half when zeros had to be lifted.

    ``func`` must cope with nearly equal eigenvalues, e.g.
    ``lambda s: mean_root_fidelity_fixed(s, n, m, precision=60).mean_root_fidelity``.
    """
    eigs = np.asarray(sigma.eigs, dtype=float)
    levels = np.unique(np.round(eigs, 12))
    scale = float(np.mean(np.diff(levels))) if levels.size > 1 else float(levels[0])
    delta = rel_delta * scale

    def spread(d: float) -> tuple[FixedStateSpectrum, bool]:
        out = eigs.copy()
        lifted = False
        for level in levels:
            idx = np.flatnonzero(np.isclose(eigs, level, rtol=0.0, atol=1e-12))
            r = idx.size
            if level == 0:
                out[idx] = d * np.arange(1, r + 1)
                lifted = True
            elif r > 1:
                out[idx] = level + d * (np.arange(r) - (r - 1) / 2)
        if lifted:
            # rescaling the nonzero levels keeps them distinct and restores the trace
            nonzero = eigs > 0
            out[nonzero] *= (1.0 - out[~nonzero].sum()) / out[nonzero].sum()
        return FixedStateSpectrum(tuple(out)), lifted

    s1, lifted = spread(delta)
    s2, _ = spread(2 * delta)
    f1, f2 = func(s1), func(s2)
    if lifted:
        # lifted zeros enter through sqrt(eigenvalue): the error leads with delta^(1/2)
        r = math.sqrt(2.0)
        return (r * f1 - f2) / (r - 1)
    return (4 * f1 - f2) / 3


def mean_root_fidelity_limit(sigma: FixedStateSpectrum, m: int, precision: int = 60) -> MeanFidelityResult:
    """Mean root fidelity for any spectrum, degenerate or not, via :func:`perturbed_limit`."""
    n = sigma.n
    if sigma.is_full_rank and not sigma.degenerate:
        return mean_root_fidelity_fixed(sigma, n, m)

    def f(s):
        return mean_root_fidelity_fixed(s, n, m, precision=precision).mean_root_fidelity

    return MeanFidelityResult(float(perturbed_limit(f, sigma)), "fixed")


# ---------------------------------------------------------------------------
# pure sigma


def fidelity_pdf_pure(n: int, m: int, F):
    """Density of the fidelity with a pure state: Beta(m, nm - m) on (0, 1)."""
    _check_dims(n, m)
    if n < 2:
        raise DomainError("for n = 1 the fidelity is identically 1 (point mass)")
    f = np.asarray(F, dtype=float)
    log_norm = special.gammaln(n * m) - special.gammaln(m) - special.gammaln(n * m - m)
    inside = (f >= 0) & (f <= 1)
    fc = np.clip(f, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        logp = log_norm + special.xlogy(m - 1, fc) + special.xlogy(n * m - m - 1, 1.0 - fc)
    out = np.where(inside, np.exp(logp), 0.0)
    return out if out.ndim else float(out)


def mean_root_fidelity_pure(n: int, m: int) -> MeanFidelityResult:
    """``<sqrt F> = (m)_{1/2} / (nm)_{1/2}``."""
    _check_dims(n, m)
    return MeanFidelityResult(math.exp(log_pochhammer(m, 0.5) - log_pochhammer(n * m, 0.5)), "pure")


# ---------------------------------------------------------------------------
# maximally mixed sigma


def _mixed_terms(n: int, m: int) -> list[tuple[Fraction, int, int]]:
    """Expand the maximally-mixed density into exact terms ``C y^A (1-y)^B``, y = n lam.

    Every coefficient is a ratio of factorials, so the expansion is done in
    rational arithmetic; the float sum cancels badly once ``n`` reaches ~20.
    """
    fact = math.factorial
    gamma_par = m - n + 1
    terms = []
    for i in range(1, n + 1):
        c_i = Fraction(
            (-1) ** i * fact(m) * fact(n * m - 1),
            fact(i - 1) * fact(n - i) * fact(i + m - n) * fact(n * m - m + n - i - 1),
        )
        beta = i - n * m + m - n
        A0 = i + m - n - 1
        B0 = -i + n * m - m + n - 1
        for alpha, weight in ((-n, n - i), (1 - n, -n)):
            if weight == 0:
                continue
            rising = Fraction(1)  # (alpha)_k (beta)_k / k!
            for k in range(-alpha + 1):
                if gamma_par + k > 0 and rising:
                    d = rising / fact(gamma_par + k - 1)
                    # z^k (1-y)^B0 with z = -y/(1-y)  ->  (-1)^k y^k (1-y)^(B0-k)
                    terms.append((c_i * weight * d * (-1) ** k, A0 + k, B0 - k))
                rising *= Fraction((alpha + k) * (beta + k), k + 1)
    return terms


@functools.lru_cache(maxsize=64)
def _mixed_polynomial(n: int, m: int) -> tuple[list, int] | None:
    """Coefficients of density(y) = sum_l q_l y^l as MPFR numbers, highest
    degree first, and the working precision in bits; ``None`` if some ``B < 0``.

    ``q_l`` alternate in sign and reach ~1e350 at (25, 35), so the precision
    is the size of the largest coefficient plus 80 guard bits (``0 <= y <= 1``).
    """
    terms = _mixed_terms(n, m)
    if min(B for _, _, B in terms) < 0:
        return None
    merged: dict[tuple[int, int], Fraction] = {}
    for c, A, B in terms:
        merged[A, B] = merged.get((A, B), Fraction(0)) + c
    denom = math.lcm(*(c.denominator for c in merged.values()))
    degree = max(A + B for A, B in merged)
    q = [0] * (degree + 1)
    for (A, B), c in merged.items():
        numer = c.numerator * (denom // c.denominator)
        for r in range(B + 1):
            q[A + r] += numer * math.comb(B, r) * (-1) ** r
    bits = max(53, max(abs(x) for x in q).bit_length() - denom.bit_length()) + 80
    with gmpy2.context(precision=bits):
        coeffs = [gmpy2.mpfr(gmpy2.mpq(x, denom)) for x in reversed(q)]
    return coeffs, bits


def _mpfr_polyval(coeffs: list, bits: int, y: float) -> float:
    with gmpy2.context(precision=bits):
        yy = gmpy2.mpfr(y)
        acc = coeffs[0]
        for c in coeffs[1:]:
            acc = acc * yy + c
        return float(acc)


def _mixed_limit_at_one(terms) -> float:
    # one-sided limit y -> 1: coefficient of u^0 in sum C (1-u)^A u^B
    return float(sum((c * math.comb(A, -B) * (-1) ** (-B) for c, A, B in terms if B <= 0), Fraction(0)))


def density_tau_mixed(n: int, m: int, lam):
    """Density of a generic eigenvalue of ``tau`` when sigma = I/n.

    This is ``n`` times the eigenvalue density of a fixed-trace Wishart matrix
    at ``n lam``, a finite sum of terminating regularized 2F1's with argument
    ``n lam / (n lam - 1)``.  The sum collapses to a polynomial in ``n lam``
    whose rational coefficients alternate in sign and cancel badly in floats,
    so Horner's rule runs in MPFR at a precision set by the largest one.
    Support ``(0, 1/n)``.
    """
    _check_dims(n, m)
    if n == 1:
        raise DomainError("for n = 1 tau equals 1; the density is a point mass")
    y = n * np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.zeros(y.shape)
    inside = (y >= 0) & (y <= 1)
    poly = _mixed_polynomial(n, m)
    if poly is None:
        terms = _mixed_terms(n, m)
        for idx in np.flatnonzero(inside):
            yy = Fraction(float(y[idx]))
            if yy == 1:
                out[idx] = _mixed_limit_at_one(terms)
            else:
                out[idx] = float(sum((c * yy**A * (1 - yy) ** B for c, A, B in terms), Fraction(0)))
    else:
        coeffs, bits = poly
        for idx in np.flatnonzero(inside):
            out[idx] = _mpfr_polyval(coeffs, bits, float(y[idx]))
    return out if np.ndim(lam) else float(out[0])


def mean_root_fidelity_mixed(n: int, m: int) -> MeanFidelityResult:
    """``<sqrt F> = 2/(sqrt(n) (nm)_{1/2}) sum_i C(1/2,i) C(1/2,i-1) (m)_{3/2-i} / (n+1)_{-i}``."""
    _check_dims(n, m)
    total = math.fsum(
        specfun.binom_half(i) * specfun.binom_half(i - 1)
        * math.exp(log_pochhammer(m, 1.5 - i) - log_pochhammer(n + 1, -i))
        for i in range(1, n + 1)
    )
    value = 2.0 / math.sqrt(n) * math.exp(-log_pochhammer(n * m, 0.5)) * total
    return MeanFidelityResult(value, "mixed")


# ---------------------------------------------------------------------------
# two random states


def mean_root_fidelity_two_random(n: int, m1: int, m2: int) -> MeanFidelityResult:
    """Mean root fidelity between two independent random states.

    ``2/((nm1)_{1/2}(nm2)_{1/2}) sum_k (-1)^(n-k) (k)_{1/2}(k+v1)_{1/2}(k+v2)_{1/2}
    / (Gamma(n-k+1) Gamma(k-n+1/2))``; ``Gamma(k-n+1/2)`` is negative-half-integer
    for ``k < n`` and goes through the signed reflection formula.
    """
    _check_dims(n, m1)
    _check_dims(n, m2)
    v1, v2 = m1 - n, m2 - n
    parts = []
    for k in range(1, n + 1):
        g_sign, g_log = signed_log_gamma(k - n + 0.5)
        log_t = (
            log_pochhammer(k, 0.5) + log_pochhammer(k + v1, 0.5) + log_pochhammer(k + v2, 0.5)
            - special.gammaln(n - k + 1) - g_log
        )
        sign = (-1.0) ** (n - k) * g_sign
        parts.append(sign * math.exp(log_t - log_pochhammer(n * m1, 0.5) - log_pochhammer(n * m2, 0.5)))
    return MeanFidelityResult(2.0 * math.fsum(parts), "two")


def chi_terms(n: int, m1: int, m2: int) -> list[tuple[int, int, float, float]]:
    """``(j, k, sign, log|coefficient|)`` of the double sum in the chi density.

    The coefficient of the ``(j, k)`` term is
    ``Gamma(n m1) Gamma(n m2) / (n k! (k+v1)! (k+v2)! (j-k)!)`` times ``(-1)^k``.
    """
    v1, v2 = m1 - n, m2 - n
    base = special.gammaln(n * m1) + special.gammaln(n * m2) - math.log(n)
    out = []
    for j in range(n):
        for k in range(j + 1):
            logc = base - special.gammaln(k + 1) - special.gammaln(k + v1 + 1) - special.gammaln(k + v2 + 1) \
                - special.gammaln(j - k + 1)
            out.append((j, k, -1.0 if k % 2 else 1.0, float(logc)))
    return out


def chi_divergent_at_zero(n: int, m1: int, m2: int) -> bool:
    """The chi density has a logarithmic singularity at 0 iff ``m1 == m2 == n``."""
    return m1 == n and m2 == n


def _chi_contour_terms(n: int, m1: int, m2: int) -> list[specfun.MellinTerm]:
    return [
        MeijerGSpec321.from_dimensions(n, m1, m2, j, k, 0.5).term(log_scale=logc, sign=sign, shift=k)
        for j, k, sign, logc in chi_terms(n, m1, m2)
    ]


def chi_cancellation_digits(n: int, m1: int, m2: int) -> float:
    """Decimal digits lost when the chi summands are added on the contour.

    Measured as ``log10`` of the largest summand magnitude at ``s = -1/2``
    (the density itself is of order one).
    """
    s = np.array([specfun.CONTOUR_REAL_PART + 0j])
    return max(float(t.log_phi(s)[0].real) for t in _chi_contour_terms(n, m1, m2)) / math.log(10.0)


@functools.lru_cache(maxsize=32)
def _harmonic_numbers(size: int) -> tuple[Fraction, ...]:
    out = [Fraction(0)]
    for d in range(1, size + 1):
        out.append(out[-1] + Fraction(1, d))
    return tuple(out)


def _span_factor(v: int, p: int, i: int, H) -> tuple[int, Fraction, int]:
    """``prod_{r=v}^{p-1} (r - s)`` at ``s = i``: value with the vanishing factor
    dropped, its log-derivative there and the multiplicity of the zero."""
    fact = math.factorial
    if v <= i < p:
        return (-1) ** (i - v) * fact(i - v) * fact(p - 1 - i), H[i - v] - H[p - 1 - i], 1
    if i < v:
        return fact(p - 1 - i) // fact(v - 1 - i), H[v - 1 - i] - H[p - 1 - i], 0
    return (-1) ** (p - v) * fact(i - v) // fact(i - p), H[i - v] - H[i - p], 0


def chi_residue_coefficients(n: int, m1: int, m2: int) -> tuple[dict[int, Fraction], dict[int, Fraction]]:
    """Exact ``(a, b)`` with density ``= sum_e (a_e + b_e ln mu) mu^e`` on ``(0, 1)``.

    For integer parameters ``Gamma(v - s)/Gamma(p - s) = 1/prod_{r=v}^{p-1}(r - s)``
    and ``Gamma(1+j+s)/Gamma(1+s) = (1+s)_j``, so every Mellin-Barnes
    integrand is rational in ``s``.  Closing the contour to the right picks up
    finitely many poles: simple ones give ``mu^i``, double ones (where the
    two spans overlap) ``mu^i`` and ``mu^i ln mu``.  The ``j`` sum collapses to
    ``sum_{j=k}^{n-1} (1+s)_j/(j-k)! = prod_{l=1, l != k+1}^{n} (s+l) / (n-1-k)!``.
    """
    v1, v2 = m1 - n, m2 - n
    fact = math.factorial
    H = _harmonic_numbers(n * max(m1, m2) + n)
    pref = Fraction(fact(n * m1 - 1) * fact(n * m2 - 1), n)
    a: dict[int, Fraction] = {}
    b: dict[int, Fraction] = {}
    for k in range(n):
        p1, p2 = n * m1 - k - 1, n * m2 - k - 1
        scale = pref / (fact(k) * fact(k + v1) * fact(k + v2) * fact(n - 1 - k)) * (-1) ** k
        for i in sorted(set(range(v1, p1)) | set(range(v2, p2))):
            q = scale * Fraction(fact(i + n), fact(i) * (i + k + 1))
            f1, d1, e1 = _span_factor(v1, p1, i, H)
            f2, d2, e2 = _span_factor(v2, p2, i, H)
            ratio = q / (f1 * f2)
            e = i + k
            if e1 + e2 == 1:
                # (r - s) = -(s - i): residue -q/f, and the integral is minus the residue sum
                a[e] = a.get(e, Fraction(0)) + ratio
            else:
                dlog_q = H[i + n] - H[i] - Fraction(1, i + k + 1)
                a[e] = a.get(e, Fraction(0)) - ratio * (dlog_q - d1 - d2)
                b[e] = b.get(e, Fraction(0)) - ratio
    return a, b


@functools.lru_cache(maxsize=32)
def _chi_series(n: int, m1: int, m2: int) -> tuple[list, list, int]:
    """MPFR coefficient lists (highest power first) of the ``mu^e`` and
    ``mu^e ln mu`` parts, and the working precision in bits."""
    a, b = chi_residue_coefficients(n, m1, m2)
    degree = max(a) if a else 0
    biggest = max([abs(x) for x in a.values()] + [abs(x) for x in b.values()] + [Fraction(1)])
    bits = max(53, biggest.numerator.bit_length() - biggest.denominator.bit_length()) + 90
    with gmpy2.context(precision=bits):
        ca = [gmpy2.mpfr(gmpy2.mpq(a.get(e, Fraction(0)))) for e in range(degree, -1, -1)]
        cb = [gmpy2.mpfr(gmpy2.mpq(b.get(e, Fraction(0)))) for e in range(degree, -1, -1)]
    return ca, cb, bits


def _chi_series_value(series: tuple[list, list, int], mu: float) -> float:
    ca, cb, bits = series
    with gmpy2.context(precision=bits):
        x = gmpy2.mpfr(mu)
        pa, pb = ca[0], cb[0]
        for u, w in zip(ca[1:], cb[1:]):
            pa = pa * x + u
            pb = pb * x + w
        return float(pa + pb * gmpy2.log(x))


def density_chi(n: int, m1: int, m2: int, mu, *, atol: float = 1e-8, method: str = "auto"):
    """Density of a generic eigenvalue of ``chi = sqrt(rho1) rho2 sqrt(rho1)``.

    All ``(j, k)`` summands ``coef * (-mu)^k * G^{2,1}_{3,3}(...)`` share the
    contour ``Re s = -1/2``, so they are merged into one Mellin-Barnes
    integrand; ``atol`` applies to the density itself.  The summands grow
    with ``n`` and cancel, so ``method="auto"`` uses the contour while
    :func:`chi_cancellation_digits` stays below ``CHI_EXACT_DIGITS`` and the
    exact residue expansion (:func:`chi_residue_coefficients`, summed in MPFR)
    beyond.  Points outside ``CHI_CONTOUR_WINDOW`` also take the exact path.
    ``method`` may force ``"contour"`` or ``"residue"``.
    Support ``(0, 1)``; at ``mu = 0`` the density is ``inf`` when it diverges
    (``m1 == m2 == n``).
    """
    _check_dims(n, m1)
    _check_dims(n, m2)
    if n == 1:
        raise DomainError("for n = 1 chi equals 1; the density is a point mass")
    if method not in ("auto", "contour", "residue"):
        raise DomainError(f"unknown method {method!r}")
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    out = np.zeros(mu_arr.shape)
    inside = (mu_arr > 0) & (mu_arr < 1)
    exact = inside & (method == "residue")
    if method == "auto":
        if chi_cancellation_digits(n, m1, m2) > CHI_EXACT_DIGITS:
            exact = inside
        else:
            lo_mu, hi_mu = CHI_CONTOUR_WINDOW
            exact = inside & ((mu_arr < lo_mu) | (mu_arr > hi_mu))
    contour = inside & ~exact
    if exact.any():
        series = _chi_series(n, m1, m2)
        for idx in np.flatnonzero(exact):
            out[idx] = _chi_series_value(series, float(mu_arr[idx]))
    if contour.any():
        res = specfun.mellin_barnes_batch(_chi_contour_terms(n, m1, m2), mu_arr[contour], atol=atol)
        # deep in the upper tail the density is below the quadrature noise
        noise = (res.values < 0) & (res.values >= -res.errors)
        out[contour] = np.where(noise, 0.0, res.values)
    at_zero = mu_arr == 0
    if at_zero.any():
        out[at_zero] = math.inf if chi_divergent_at_zero(n, m1, m2) else _chi_at_zero(n, m1, m2)
    return out if np.ndim(mu) else float(out[0])


def _chi_at_zero(n: int, m1: int, m2: int) -> float:
    # only mu^0 survives; its coefficient is exact
    a, _ = chi_residue_coefficients(n, m1, m2)
    return float(a.get(0, Fraction(0)))


# ---------------------------------------------------------------------------
# grids and moments


def density_moment(
    evaluator: Callable[[float], float],
    support: tuple[float, float],
    weight: Callable[[float], float] = lambda x: 1.0,
    breakpoints: Sequence[float] = (),
    epsabs: float = 1e-11,
    epsrel: float = 1e-10,
) -> float:
    """``integral weight(x) p(x) dx`` over ``support`` by adaptive quadrature."""
    lo, hi = support
    pts = sorted({lo, hi, *[b for b in breakpoints if lo < b < hi]})
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        val, _ = integrate.quad(lambda x: weight(x) * evaluator(x), a, b, epsabs=epsabs, epsrel=epsrel, limit=200)
        total += val
    return total


def _gregory(y: np.ndarray, h: float) -> float:
    """Trapezoid rule with Gregory end corrections through third differences."""
    total = h * (y.sum() - 0.5 * (y[0] + y[-1]))
    d0 = [np.diff(y[:5], k)[0] for k in (1, 2, 3)]
    dn = [np.diff(y[-5:], k)[-1] for k in (1, 2, 3)]
    return float(total - h / 12 * (dn[0] - d0[0]) - h / 24 * (dn[1] + d0[1]) - 19 * h / 720 * (dn[2] - d0[2]))


def _graded_panel_moments(
    evaluator: Callable[[np.ndarray], np.ndarray], a: float, b: float, singular: float, levels: int = 40
) -> tuple[float, float]:
    """Zeroth and first moments over ``[a, b]`` with panels halving towards ``singular``."""
    nodes, weights = np.polynomial.legendre.leggauss(16)
    dist = abs(b - a) * 0.5 ** np.arange(levels + 1)
    inner, outer = np.append(dist[1:], 0.0), dist
    # panels in distance from the singular end, mapped back to x
    mid, half = 0.5 * (outer + inner), 0.5 * (outer - inner)
    d = mid[:, None] + half[:, None] * nodes[None, :]
    xs = singular + d if singular == a else singular - d
    vals = np.asarray(evaluator(xs.reshape(-1)), dtype=float).reshape(xs.shape)
    w = half[:, None] * weights[None, :]
    return float(np.sum(w * vals)), float(np.sum(w * vals * xs))


def grid_density(
    evaluator: Callable[[np.ndarray], np.ndarray],
    n_points: int,
    support: tuple[float, float],
    tol: float = 1e-5,
) -> GridDensity:
    """Tabulate ``evaluator`` on ``n_points`` Chebyshev-clustered points of ``support``."""
    if n_points < 3:
        raise DomainError("need at least 3 grid points")
    lo, hi = support
    theta = np.linspace(0.0, math.pi, n_points)
    x = lo + (hi - lo) * 0.5 * (1.0 - np.cos(theta))
    x[0], x[-1] = lo, hi
    values = np.asarray(evaluator(x), dtype=float)
    finite = np.isfinite(values)
    divergent = tuple(float(v) for v in x[~finite])
    jac = (hi - lo) * 0.5 * np.sin(theta)
    jac[0] = jac[-1] = 0.0
    integrand = np.where(finite, values, 0.0) * jac
    norm = float(integrate.trapezoid(integrand, theta))
    first = float(integrate.trapezoid(integrand * x, theta))
    if divergent:
        # next to a divergent endpoint the trapezoid error decays only like
        # h^2 log h; those panels get graded Gauss-Legendre and the rest the
        # trapezoid rule with Gregory end corrections
        k = SINGULAR_PANELS
        k_lo = k if lo in divergent else 0
        k_hi = k if hi in divergent else 0
        bulk = slice(k_lo, n_points - k_hi)
        h = theta[1] - theta[0]
        norm = _gregory(integrand[bulk], h)
        first = _gregory(integrand[bulk] * x[bulk], h)
        if k_lo:
            p0, p1 = _graded_panel_moments(evaluator, lo, x[k_lo], lo)
            norm, first = norm + p0, first + p1
        if k_hi:
            p0, p1 = _graded_panel_moments(evaluator, x[n_points - 1 - k_hi], hi, hi)
            norm, first = norm + p0, first + p1
    warning = None
    if abs(norm - 1.0) > tol:
        warning = f"grid normalization {norm:.8f} differs from 1 by more than {tol:g}"
    return GridDensity(x[finite], values[finite], (lo, hi), norm, first, divergent, warning)
