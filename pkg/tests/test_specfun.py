import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from randbures import specfun
from randbures.errors import ConvergenceError, DomainError
from randbures.specfun import MeijerGSpec213, MeijerGSpec321

from mellin_moments import gamma_, moment_213, moment_213_exact, moment_321, moment_321_exact, moment_identity_errors


# ---------------------------------------------------------------------------
# log-gamma and Pochhammer


def test_log_gamma_trivial_values():
    assert specfun.log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
    assert specfun.log_gamma(0.5) == pytest.approx(0.5723649429247001, rel=1e-13)


@pytest.mark.parametrize("x", [1e-3, 0.7, 171.0, 1234.5, 1e6])
def test_log_gamma_matches_mpmath(x):
    ref = float(mpmath.loggamma(mpmath.mpf(x)))
    assert specfun.log_gamma(x) == pytest.approx(ref, rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_log_gamma_rejects_non_positive(x):
    with pytest.raises(DomainError):
        specfun.log_gamma(x)


def test_pochhammer_examples():
    assert specfun.pochhammer(1, 0.5) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-13)
    assert specfun.pochhammer(7.3, 0) == 1.0
    ref = float(mpmath.gamma(4.5) / mpmath.gamma(4))
    assert specfun.pochhammer(4, 0.5) == pytest.approx(ref, rel=1e-13)


def test_pochhammer_domain():
    with pytest.raises(DomainError):
        specfun.pochhammer(-1.0, 0.5)
    with pytest.raises(DomainError):
        specfun.pochhammer(1.0, -2.0)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(1e-3, 100.0),
    st.floats(1e-3, 10.0),
    st.floats(1e-3, 10.0),
)
def test_pochhammer_composition(a, b, c):
    lhs = specfun.pochhammer(a, b) * specfun.pochhammer(a + b, c)
    assert lhs == pytest.approx(specfun.pochhammer(a, b + c), rel=1e-12)


def test_signed_log_gamma_negative_half_integers():
    for x in (-0.5, -1.5, -2.5, -3.5):
        sign, lg = specfun.signed_log_gamma(x)
        assert sign * math.exp(lg) == pytest.approx(float(mpmath.gamma(x)), rel=1e-13)


# ---------------------------------------------------------------------------
# generalized binomials


def test_binom_half_examples():
    assert specfun.binom_half(0) == 1.0
    assert specfun.binom_half(1) == 0.5
    assert specfun.binom_half(2) == -0.125


@pytest.mark.parametrize("i", range(12))
def test_binom_half_matches_mpmath(i):
    assert specfun.binom_half(i) == pytest.approx(float(mpmath.binomial(0.5, i)), rel=1e-14)
    assert specfun.binom_half_exact(i) == Fraction(specfun.binom_half(i))


# ---------------------------------------------------------------------------
# terminating 2F1


def _rational_2f1(a: int, b: Fraction, c: Fraction, z: Fraction) -> Fraction:
    total, term = Fraction(0), Fraction(1)
    for k in range(-a + 1):
        total += term
        term = term * (a + k) * (b + k) / ((c + k) * (k + 1)) * z
    return total


def test_2f1_examples():
    assert specfun.gauss_2f1_terminating(0, 2.5, 3.0, 0.7) == pytest.approx(1 / math.gamma(3.0))
    assert specfun.gauss_2f1_terminating(-1, 1, 2, 1.0) == pytest.approx(0.5)


def test_2f1_density_argument():
    n, lam = 2, 0.25
    z = n * lam / (n * lam - 1)
    ref = _rational_2f1(-2, Fraction(3), Fraction(4), Fraction(z)) / math.gamma(4)
    assert specfun.gauss_2f1_terminating(-2, 3, 4, z) == pytest.approx(float(ref), rel=1e-14)


@settings(max_examples=150, deadline=None)
@given(
    st.integers(0, 6),
    st.fractions(min_value=-5, max_value=5, max_denominator=7),
    st.fractions(min_value=Fraction(1, 3), max_value=8, max_denominator=5),
    st.fractions(min_value=-3, max_value=3, max_denominator=9),
)
def test_2f1_matches_rational_sum(absa, b, c, z):
    ref = float(_rational_2f1(-absa, b, c, z)) / math.gamma(float(c))
    got = specfun.gauss_2f1_terminating(-absa, float(b), float(c), float(z))
    assert got == pytest.approx(ref, rel=1e-11, abs=1e-12)


def test_2f1_rejects_non_terminating():
    with pytest.raises(DomainError):
        specfun.gauss_2f1_terminating(0.5, 1.0, 2.0, 0.3)
    with pytest.raises(DomainError):
        specfun.gauss_2f1_terminating(2, 1.0, 2.0, 0.3)


# ---------------------------------------------------------------------------
# Meijer G: direct values


def _mp_g213(j, v1, v2, y):
    eps = 1e-9  # mpmath needs non-coinciding poles
    return float(mpmath.meijerg([[-j], []], [[v1, v2 + eps], [0]], y))


@pytest.mark.parametrize("j,v1,v2,y", [(0, 0, 0, 0.3), (2, 1, 2, 1.7), (1, 3, 5, 4.0), (3, 0, 2, 0.05)])
def test_meijer_g_213_matches_mpmath(j, v1, v2, y):
    got = specfun.meijer_g_213(MeijerGSpec213(j, v1, v2, y))
    assert got == pytest.approx(_mp_g213(j, v1, v2, y), rel=1e-6, abs=1e-8)


def test_meijer_g_213_bessel_case():
    # j = 0 collapses to 2 y^((v1+v2)/2) K_(v1-v2)(2 sqrt y)
    for v1, v2, y in [(0, 0, 0.5), (1, 3, 2.0), (2, 2, 10.0)]:
        ref = 2 * y ** ((v1 + v2) / 2) * special.kv(v1 - v2, 2 * math.sqrt(y))
        assert specfun.meijer_g_213(MeijerGSpec213(0, v1, v2, y)) == pytest.approx(ref, rel=1e-8, abs=1e-12)


def _richardson_series_213(y: float) -> float:
    # residue series of G^{2,0}_{0,2}(0, v2 | y) with v2 -> delta, extrapolated
    def series(delta):
        with mpmath.workdps(40):
            return float(mpmath.meijerg([[], []], [[0, delta], []], y))

    d = 1e-6
    return (4 * series(d / 2) - series(d)) / 3


def test_meijer_g_213_log_case_vs_perturbed_series():
    y = 0.8
    got = specfun.meijer_g_213(MeijerGSpec213(0, 0, 0, y))
    assert got == pytest.approx(_richardson_series_213(y), abs=1e-6)


def _mp_g321(j, v1, v2, p1, p2, mu):
    eps = 1e-9
    return float(mpmath.meijerg([[-j], [p1, p2 + eps]], [[v1, v2 + 2 * eps], [0]], mu))


@pytest.mark.parametrize(
    "j,k,v1,v2,p1,p2,mu",
    [(0, 0, 0, 1, 5, 7, 0.2), (1, 1, 1, 2, 7, 10, 0.5), (2, 1, 3, 4, 16, 19, 0.05)],
)
def test_meijer_g_321_matches_mpmath(j, k, v1, v2, p1, p2, mu):
    got = specfun.meijer_g_321(MeijerGSpec321(j, k, v1, v2, p1, p2, mu))
    ref = _mp_g321(j, v1, v2, p1, p2, mu)
    assert got == pytest.approx(ref, abs=1e-7 * max(1.0, abs(ref)))


def test_meijer_g_result_is_real():
    res = specfun.meijer_g_321(MeijerGSpec321(1, 0, 1, 2, 9, 11, 0.3), full_output=True)
    assert abs(res.imag) < 1e-10 * max(abs(res.value), 1e-300) or abs(res.imag) < 1e-15
    res = specfun.meijer_g_213(MeijerGSpec213(2, 1, 2, 1.3), full_output=True)
    assert abs(res.imag) < 1e-10 * abs(res.value)


def test_meijer_specs_validate():
    with pytest.raises(DomainError):
        MeijerGSpec213(-1, 0, 0, 1.0)
    with pytest.raises(DomainError):
        MeijerGSpec213(0, 0, 0, 0.0)
    with pytest.raises(DomainError):
        MeijerGSpec321(1, 2, 0, 0, 5, 5, 0.5)
    with pytest.raises(DomainError):
        MeijerGSpec321(0, 0, 0, 0, 5, 5, 1.0)
    with pytest.raises(DomainError):
        MeijerGSpec321(0, 0, 3, 0, 3, 5, 0.5)


def test_convergence_error_carries_estimate():
    term = MeijerGSpec321(0, 0, 0, 0, 3, 3, 0.5).term()
    with pytest.raises(ConvergenceError) as info:
        specfun.mellin_barnes([term], 0.5, atol=1e-30, t_cap=8.0, max_panels=200)
    assert info.value.estimate > 1e-30


def test_batch_matches_adaptive():
    terms = [MeijerGSpec321(2, 1, 1, 2, 10, 13, 0.5).term(), MeijerGSpec321(1, 0, 1, 2, 11, 14, 0.5).term(sign=-1.0)]
    xs = np.array([1e-3, 0.05, 0.3, 0.7, 0.95])
    batch = specfun.mellin_barnes_batch(terms, xs, atol=1e-10)
    single = [specfun.mellin_barnes(terms, x, atol=1e-10).value for x in xs]
    np.testing.assert_allclose(batch.values, single, atol=3e-10)
    assert np.all(batch.errors <= 1e-10)


# ---------------------------------------------------------------------------
# Mellin moment identities of the two G-functions


def test_product_wishart_density_normalized():
    # eigenvalue density of sqrt(W1) W2 sqrt(W1) as a (j, k) sum of y^k G(y)
    n, m1, m2 = 2, 3, 4
    v1, v2 = m1 - n, m2 - n
    total = 0.0
    for j in range(n):
        for k in range(j + 1):
            coef = (-1) ** k / (math.factorial(k) * math.factorial(k + v1) * math.factorial(k + v2) * math.factorial(j - k))
            total += coef * moment_213(j, k, v1, v2, power=k)
    assert total == pytest.approx(n, rel=1e-7)


def test_moment_213_example():
    assert moment_213(2, 1, 1, 2) == pytest.approx(moment_213_exact(2, 1, 1, 2), rel=1e-6)


def test_moment_321_example():
    assert moment_321(2, 1, 2, 3, 4) == pytest.approx(moment_321_exact(2, 1, 2, 3, 4), rel=1e-6)


@pytest.mark.parametrize("v1,v2", [(0, 0), (1, 2), (3, 5)])
def test_moment_identities_grid(v1, v2):
    worst = max(moment_identity_errors(v1, v2), key=lambda e: e[3])
    assert worst[3] < 1e-6, worst


def test_printed_moment_denominator_fails_beyond_k0():
    # printed form has Gamma(k - 1/2) where the Mellin transform gives Gamma(-k - 1/2)
    for j, k in [(1, 1), (2, 1), (3, 2)]:
        printed = moment_213_exact(j, k, 1, 2) * gamma_(-k - 0.5) / gamma_(k - 0.5)
        got = moment_213(j, k, 1, 2)
        assert abs(got / printed - 1) > 0.1
    assert moment_213(1, 0, 1, 2) == pytest.approx(
        moment_213_exact(1, 0, 1, 2) * gamma_(-0.5) / gamma_(-0.5), rel=1e-6
    )
