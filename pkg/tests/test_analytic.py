import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from randbures import analytic
from randbures.errors import DegenerateSpectrumError, DomainError
from randbures.states import FixedStateSpectrum

SIGMA3 = FixedStateSpectrum((0.15, 0.33, 0.52))
SIGMA4 = FixedStateSpectrum((0.07, 0.17, 0.35, 0.41))
SIGMA5 = FixedStateSpectrum((0.09, 0.12, 0.21, 0.28, 0.30))


# ---------------------------------------------------------------------------
# independent n = 2 oracles: for a 2x2 PSD matrix tr sqrt(M) = sqrt(tr M + 2 sqrt(det M)),
# a 2x2 state from C^2 (x) C^m has eigenvalues (x, 1 - x) with weight
# (2x - 1)^2 (x (1 - x))^(m - 2), and the Haar overlap |U_11|^2 is uniform on [0, 1]


def _eig_weight(m):
    z = integrate.quad(lambda x: (2 * x - 1) ** 2 * (x * (1 - x)) ** (m - 2), 0, 1)[0]
    return lambda x: (2 * x - 1) ** 2 * (x * (1 - x)) ** (m - 2) / z


def _mean_sqrt_linear(a, b):
    # integral over c in [0, 1] of sqrt(a + b c)
    if abs(b) < 1e-12:
        return math.sqrt(max(a, 0.0))
    return 2.0 / (3.0 * b) * (max(a + b, 0.0) ** 1.5 - max(a, 0.0) ** 1.5)


def oracle_mixed_n2(m):
    w = _eig_weight(m)
    return integrate.quad(lambda x: w(x) * (math.sqrt(x) + math.sqrt(1 - x)) / math.sqrt(2), 0, 1, epsabs=1e-13)[0]


def oracle_fixed_n2(s1, m):
    s2, w = 1 - s1, _eig_weight(m)

    def f(x):
        # tr(sigma rho) = s2 + (s1 - s2) (x c + (1 - x)(1 - c)), linear in c
        a = s2 + (s1 - s2) * (1 - x) + 2 * math.sqrt(s1 * s2 * x * (1 - x))
        return w(x) * _mean_sqrt_linear(a, (s1 - s2) * (2 * x - 1))

    return integrate.quad(f, 0, 1, epsabs=1e-13, limit=200)[0]


def oracle_two_n2(m1, m2):
    w1, w2 = _eig_weight(m1), _eig_weight(m2)

    def f(y, x):
        a = x * (1 - y) + (1 - x) * y + 2 * math.sqrt(x * (1 - x) * y * (1 - y))
        return w1(x) * w2(y) * _mean_sqrt_linear(a, (2 * x - 1) * (2 * y - 1))

    return integrate.dblquad(f, 0, 1, 0, 1, epsabs=1e-12)[0]


# ---------------------------------------------------------------------------
# closed-form means


def test_pure_examples():
    assert analytic.mean_root_fidelity_pure(1, 7).mean_root_fidelity == pytest.approx(1.0, abs=1e-14)
    expected = math.gamma(2.5) * math.gamma(4) / (math.gamma(2) * math.gamma(4.5))
    assert analytic.mean_root_fidelity_pure(2, 2).mean_root_fidelity == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(0.685714, abs=1e-6)


@pytest.mark.parametrize("m", [2, 3, 5, 9])
def test_mixed_matches_quadrature_oracle(m):
    assert analytic.mean_root_fidelity_mixed(2, m).mean_root_fidelity == pytest.approx(oracle_mixed_n2(m), abs=1e-10)


def test_mixed_examples():
    assert analytic.mean_root_fidelity_mixed(1, 4).mean_root_fidelity == pytest.approx(1.0, abs=1e-14)
    assert analytic.mean_root_fidelity_mixed(2, 2).mean_root_fidelity == pytest.approx(0.88894, abs=1e-5)


@pytest.mark.parametrize("s1,m", [(0.3, 2), (0.1, 4), (0.45, 3)])
def test_fixed_matches_quadrature_oracle(s1, m):
    res = analytic.mean_root_fidelity_fixed(FixedStateSpectrum((s1, 1 - s1)), 2, m)
    assert res.mean_root_fidelity == pytest.approx(oracle_fixed_n2(s1, m), abs=1e-9)


@pytest.mark.parametrize("m1,m2", [(2, 2), (3, 4), (2, 5)])
def test_two_random_matches_quadrature_oracle(m1, m2):
    res = analytic.mean_root_fidelity_two_random(2, m1, m2)
    assert res.mean_root_fidelity == pytest.approx(oracle_two_n2(m1, m2), abs=1e-8)


def test_two_random_examples():
    for m1, m2 in [(1, 1), (3, 8), (40, 2)]:
        assert analytic.mean_root_fidelity_two_random(1, m1, m2).mean_root_fidelity == pytest.approx(1.0, abs=1e-14)
    res = analytic.mean_root_fidelity_two_random(2, 2, 2)
    assert res.mean_root_fidelity == pytest.approx(0.80980, abs=1e-5)
    assert res.mean_sq_bures == pytest.approx(0.38040, abs=1e-5)


def test_fixed_near_maximally_mixed_approaches_mixed():
    for n, m in [(3, 4), (5, 8)]:
        eigs = tuple(1 / n + 1e-4 * (k - (n - 1) / 2) for k in range(n))
        fixed = analytic.mean_root_fidelity_fixed(FixedStateSpectrum(eigs), n, m).mean_root_fidelity
        assert fixed == pytest.approx(analytic.mean_root_fidelity_mixed(n, m).mean_root_fidelity, abs=1e-3)


@pytest.mark.parametrize("n,m", [(3, 4), (5, 8)])
def test_fixed_near_pure_approaches_pure_monotonically(n, m):
    pure = analytic.mean_root_fidelity_pure(n, m).mean_root_fidelity
    gaps = []
    for eps in (1e-2, 1e-3, 1e-4):
        small = [eps * (k + 1) / n for k in range(n - 1)]
        sigma = FixedStateSpectrum(tuple([1 - sum(small)] + small))
        gaps.append(analytic.mean_root_fidelity_fixed(sigma, n, m).mean_root_fidelity - pure)
    assert gaps[0] > gaps[1] > gaps[2] > 0
    # the small eigenvalues enter through their square roots
    for a, b in zip(gaps, gaps[1:]):
        assert a / b == pytest.approx(math.sqrt(10), rel=0.1)


def test_perturbed_limit_recovers_closed_forms():
    for n, m in [(2, 2), (3, 4), (5, 8)]:
        pure = FixedStateSpectrum((1.0,) + (0.0,) * (n - 1))
        got = analytic.mean_root_fidelity_limit(pure, m).mean_root_fidelity
        assert got == pytest.approx(analytic.mean_root_fidelity_pure(n, m).mean_root_fidelity, abs=1e-4)
        mixed = FixedStateSpectrum((1 / n,) * n)
        got = analytic.mean_root_fidelity_limit(mixed, m).mean_root_fidelity
        assert got == pytest.approx(analytic.mean_root_fidelity_mixed(n, m).mean_root_fidelity, abs=1e-8)


def test_degenerate_spectrum_is_rejected():
    sigma = FixedStateSpectrum((0.25, 0.25, 0.5))
    with pytest.raises(DegenerateSpectrumError):
        analytic.mean_root_fidelity_fixed(sigma, 3, 4)
    with pytest.raises(DegenerateSpectrumError):
        analytic.density_tau(sigma, 3, 4, 0.1)
    with pytest.raises(DomainError):
        analytic.mean_root_fidelity_fixed(FixedStateSpectrum((1.0, 0.0)), 2, 2)


def test_dimension_checks():
    with pytest.raises(DomainError):
        analytic.mean_root_fidelity_pure(3, 2)
    with pytest.raises(DomainError):
        analytic.mean_root_fidelity_two_random(3, 4, 2)
    with pytest.raises(DomainError):
        analytic.density_chi(1, 2, 2, 0.5)
    with pytest.raises(DomainError):
        analytic.fidelity_pdf_pure(1, 3, 0.5)


def test_result_invariant():
    res = analytic.mean_root_fidelity_fixed(SIGMA3, 3, 8)
    assert res.mean_sq_bures == 2.0 - 2.0 * res.mean_root_fidelity
    with pytest.raises(DomainError):
        analytic.MeanFidelityResult(0.5, "unknown")


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(0, 20), st.integers(0, 20), st.sampled_from(["pure", "mixed", "two"]))
def test_bures_strictly_inside_interval(n, dm1, dm2, scenario):
    m1, m2 = n + dm1, n + dm2
    if scenario == "pure":
        res = analytic.mean_root_fidelity_pure(n, m1)
    elif scenario == "mixed":
        res = analytic.mean_root_fidelity_mixed(n, m1)
    else:
        res = analytic.mean_root_fidelity_two_random(n, m1, m2)
    assert 0.0 < res.mean_sq_bures < 2.0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=6, unique=True), st.integers(0, 6))
def test_fixed_bures_strictly_inside_interval(weights, dm):
    eigs = np.asarray(weights) / sum(weights)
    if np.min(np.diff(np.sort(eigs))) < 1e-3:
        return
    n = eigs.size
    res = analytic.mean_root_fidelity_fixed(FixedStateSpectrum(tuple(eigs)), n, n + dm)
    assert 0.0 < res.mean_sq_bures < 2.0


# ---------------------------------------------------------------------------
# densities


def _sqrt_moment(density, support, n, breakpoints=()):
    return n * analytic.density_moment(density, support, weight=math.sqrt, breakpoints=breakpoints)


def test_density_tau_support_and_positivity():
    assert analytic.density_tau(SIGMA3, 3, 8, 0.6) == 0.0
    assert analytic.density_tau(SIGMA3, 3, 8, -0.1) == 0.0
    x = np.linspace(1e-4, 0.52 - 1e-4, 400)
    assert np.all(analytic.density_tau(SIGMA3, 3, 8, x) >= 0)


@pytest.mark.parametrize("sigma,m", [(SIGMA3, 8), (SIGMA4, 9), (SIGMA5, 10), (FixedStateSpectrum((0.3, 0.7)), 2)])
def test_density_tau_moments(sigma, m):
    n = sigma.n
    dens = lambda x: analytic.density_tau(sigma, n, m, x)
    support = analytic.tau_support(sigma)
    bp = sorted(sigma.eigs)
    assert analytic.density_moment(dens, support, breakpoints=bp) == pytest.approx(1.0, abs=1e-6)
    first = n * analytic.density_moment(dens, support, weight=lambda x: x, breakpoints=bp)
    assert first == pytest.approx(1.0 / n, abs=1e-6)
    assert _sqrt_moment(dens, support, n, bp) == pytest.approx(
        analytic.mean_root_fidelity_fixed(sigma, n, m).mean_root_fidelity, abs=1e-5
    )


@pytest.mark.parametrize("m", [2, 3, 6])
def test_density_tau_mixed_matches_two_by_two_oracle(m):
    w = _eig_weight(m)
    lam = np.linspace(0.01, 0.49, 25)
    np.testing.assert_allclose(analytic.density_tau_mixed(2, m, lam), [2 * w(2 * x) for x in lam], rtol=1e-9)


@pytest.mark.parametrize("n,m", [(2, 2), (3, 5), (5, 6), (8, 11)])
def test_density_tau_mixed_moments(n, m):
    dens = lambda x: analytic.density_tau_mixed(n, m, x)
    support = (0.0, 1.0 / n)
    assert analytic.density_moment(dens, support) == pytest.approx(1.0, abs=1e-6)
    assert n * analytic.density_moment(dens, support, weight=lambda x: x) == pytest.approx(1.0 / n, abs=1e-6)
    assert _sqrt_moment(dens, support, n) == pytest.approx(analytic.mean_root_fidelity_mixed(n, m).mean_root_fidelity, abs=1e-5)
    assert analytic.density_tau_mixed(n, m, 1.0 / n + 0.01) == 0.0


@pytest.mark.parametrize("n,m", [(2, 2), (5, 6), (25, 45)])
def test_fidelity_pdf_pure(n, m):
    pdf = lambda f: analytic.fidelity_pdf_pure(n, m, f)
    assert integrate.quad(pdf, 0, 1, epsabs=1e-13)[0] == pytest.approx(1.0, abs=1e-10)
    assert integrate.quad(lambda f: f * pdf(f), 0, 1, epsabs=1e-13)[0] == pytest.approx(1.0 / n, abs=1e-10)
    assert integrate.quad(lambda f: math.sqrt(f) * pdf(f), 0, 1, epsabs=1e-13)[0] == pytest.approx(
        analytic.mean_root_fidelity_pure(n, m).mean_root_fidelity, abs=1e-10
    )
    assert pdf(1.5) == 0.0 and pdf(-0.2) == 0.0


@pytest.mark.parametrize("n,m1,m2", [(2, 2, 3), (2, 3, 2), (3, 6, 7), (4, 5, 8)])
def test_density_chi_moments(n, m1, m2):
    dens = lambda x: analytic.density_chi(n, m1, m2, x)
    support = (0.0, 1.0)
    assert analytic.density_moment(dens, support, epsabs=1e-9) == pytest.approx(1.0, abs=1e-5)
    assert n * analytic.density_moment(dens, support, weight=lambda x: x, epsabs=1e-9) == pytest.approx(1.0 / n, abs=1e-5)
    assert n * analytic.density_moment(dens, support, weight=math.sqrt, epsabs=1e-9) == pytest.approx(
        analytic.mean_root_fidelity_two_random(n, m1, m2).mean_root_fidelity, abs=1e-5
    )


@pytest.mark.parametrize("n,m1,m2", [(2, 2, 2), (2, 3, 2), (3, 6, 7), (4, 5, 8), (5, 8, 10)])
def test_density_chi_contour_agrees_with_residues(n, m1, m2):
    mu = np.linspace(0.02, 0.98, 17)
    contour = analytic.density_chi(n, m1, m2, mu, method="contour")
    exact = analytic.density_chi(n, m1, m2, mu, method="residue")
    assert np.abs(contour - exact).max() < 1e-7


def test_density_chi_endpoints():
    assert analytic.density_chi(2, 2, 2, 0.0) == math.inf
    assert analytic.chi_divergent_at_zero(2, 2, 2)
    assert not analytic.chi_divergent_at_zero(3, 6, 7)
    assert math.isfinite(analytic.density_chi(3, 6, 7, 0.0))
    assert analytic.density_chi(3, 6, 7, 1.0) == 0.0
    assert analytic.density_chi(3, 6, 7, 1.3) == 0.0


def test_density_chi_residue_sqrt_moment_large_n():
    n, m1, m2 = 15, 17, 21
    assert analytic.chi_cancellation_digits(n, m1, m2) > analytic.CHI_EXACT_DIGITS
    dens = lambda x: analytic.density_chi(n, m1, m2, x)
    got = n * analytic.density_moment(dens, (0.0, 1.0), weight=math.sqrt, breakpoints=(0.01, 0.05, 0.2), epsabs=1e-10)
    assert got == pytest.approx(analytic.mean_root_fidelity_two_random(n, m1, m2).mean_root_fidelity, abs=1e-6)


def test_density_chi_rejects_unknown_method():
    with pytest.raises(DomainError):
        analytic.density_chi(2, 2, 2, 0.5, method="series")


# ---------------------------------------------------------------------------
# grids


def test_grid_pure_beta():
    g = analytic.grid_density(lambda f: analytic.fidelity_pdf_pure(5, 6, f), 1000, (0.0, 1.0))
    assert g.normalization == pytest.approx(1.0, abs=1e-6)
    assert g.warning is None
    assert np.all(np.diff(g.abscissae) > 0) and np.all(g.values >= 0)


def test_grid_density_tau_four_by_nine():
    g = analytic.grid_density(lambda x: analytic.density_tau(SIGMA4, 4, 9, x), 1000, analytic.tau_support(SIGMA4))
    assert g.normalization == pytest.approx(1.0, abs=1e-5)


def test_grid_density_chi_five():
    g = analytic.grid_density(lambda x: analytic.density_chi(5, 8, 10, x), 1000, (0.0, 1.0))
    assert g.normalization == pytest.approx(1.0, abs=1e-4)
    assert g.first_moment * 5 == pytest.approx(0.2, abs=1e-4)


def test_grid_marks_divergent_endpoint():
    g = analytic.grid_density(lambda x: analytic.density_chi(2, 2, 2, x), 200, (0.0, 1.0))
    assert g.divergent_endpoints == (0.0,)
    assert np.all(np.isfinite(g.values))
    # logarithmic divergence at 0; the endpoint panels are integrated adaptively
    assert g.normalization == pytest.approx(1.0, abs=1e-6)
    assert 2 * g.first_moment == pytest.approx(0.5, abs=1e-6)


def test_grid_warns_on_bad_normalization():
    g = analytic.grid_density(lambda x: 2.0 * np.ones_like(x), 50, (0.0, 1.0))
    assert g.warning is not None
    with pytest.raises(DomainError):
        analytic.grid_density(lambda x: x, 2, (0.0, 1.0))
