"""Monte Carlo and kicked-top comparisons against the closed forms.

Scenario tags
-------------
``pure``   sigma = |0><0|; histograms are of the fidelity itself.
``mixed``  sigma = I/n; histograms are of eigenvalues of sqrt(sigma) rho sqrt(sigma).
``fixed``  sigma = diag(eigs); same histogram as ``mixed``.
``two``    two independent random states; histograms of eigenvalues of chi.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analytic, kickedtop, sampler, states
from .errors import DomainError
from .states import FixedStateSpectrum

SCENARIOS = analytic.SCENARIOS
KICKED_TOP_BATCHES = 50
GAUSS_NODES = 8


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ComparisonReport:
    """Ensemble mean root fidelity next to its closed-form prediction."""

    scenario: str
    n: int
    m1: int
    m2: int | None
    sigma_eigs: tuple[float, ...] | None
    samples: int
    seed: int | None
    mean_root_fidelity_mc: float
    mean_root_fidelity_mc_stderr: float
    mean_root_fidelity_analytic: float
    source: str = "wishart"
    parameters: tuple[tuple[str, object], ...] = ()

    @property
    def msbd_mc(self) -> float:
        return 2.0 - 2.0 * self.mean_root_fidelity_mc

    @property
    def msbd_mc_stderr(self) -> float:
        return 2.0 * self.mean_root_fidelity_mc_stderr

    @property
    def msbd_analytic(self) -> float:
        return 2.0 - 2.0 * self.mean_root_fidelity_analytic

    @property
    def percent_rel_diff(self) -> float:
        return 100.0 * abs(self.msbd_mc / self.msbd_analytic - 1.0)

    @property
    def z_score(self) -> float:
        """``|MC - analytic|`` in units of the MC standard error."""
        return abs(self.msbd_mc - self.msbd_analytic) / self.msbd_mc_stderr

    def to_json_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "n": self.n,
            "m1": self.m1,
            "m2": self.m2,
            "sigma_eigs": list(self.sigma_eigs) if self.sigma_eigs is not None else None,
            "samples": self.samples,
            "seed": self.seed,
            "mean_root_fidelity_mc": self.mean_root_fidelity_mc,
            "mean_root_fidelity_mc_stderr": self.mean_root_fidelity_mc_stderr,
            "mean_root_fidelity_analytic": self.mean_root_fidelity_analytic,
            "msbd_mc": self.msbd_mc,
            "msbd_analytic": self.msbd_analytic,
            "percent_rel_diff": self.percent_rel_diff,
        }
        if self.source != "wishart":
            out["source"] = self.source
        if self.parameters:
            out["parameters"] = dict(self.parameters)
        return out


@dataclass(frozen=True)
class HistogramData:
    """Uniform-bin histogram of pooled eigenvalues with the analytic curve.

    ``expected_counts`` are bin averages of the analytic density times the
    number of pooled values; the goodness-of-fit test compares ``counts``
    against them with Poisson standard deviations.
    """

    edges: np.ndarray
    counts: np.ndarray
    total: int
    analytic_centers: np.ndarray
    expected_counts: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * self.widths)

    @property
    def density_stderr(self) -> np.ndarray:
        return np.sqrt(self.counts) / (self.total * self.widths)

    def within_poisson(self, n_sigma: float = 4.0) -> np.ndarray:
        """Per-bin flag ``|count - expected| <= n_sigma sqrt(expected)``."""
        return np.abs(self.counts - self.expected_counts) <= n_sigma * np.sqrt(self.expected_counts)

    def pass_fraction(self, n_sigma: float = 4.0) -> float:
        return float(np.mean(self.within_poisson(n_sigma)))


def _stderr_iid(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan


def batch_means_stderr(x: np.ndarray, batches: int = KICKED_TOP_BATCHES) -> float:
    """Standard error of the mean of a correlated stream via batch means.

    The stream is cut into ``batches`` contiguous batches of equal length
    (trailing remainder dropped) and the spread of the batch means is used.
    """
    x = np.asarray(x, dtype=float)
    if batches < 2:
        raise DomainError("batch means need at least 2 batches")
    size = x.size // batches
    if size < 1:
        return _stderr_iid(x)
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(batches))


# ---------------------------------------------------------------------------
# scenario plumbing


def sigma_matrix(scenario: str, n: int, sigma: FixedStateSpectrum | None = None) -> np.ndarray:
    if scenario == "pure":
        out = np.zeros((n, n), dtype=complex)
        out[0, 0] = 1.0
        return out
    if scenario == "mixed":
        return np.eye(n, dtype=complex) / n
    if scenario == "fixed":
        if sigma is None:
            raise DomainError("scenario 'fixed' needs sigma eigenvalues")
        if sigma.n != n:
            raise DomainError(f"sigma has {sigma.n} eigenvalues, expected n={n}")
        return np.diag(np.asarray(sigma.eigs, dtype=complex))
    raise DomainError(f"no fixed sigma for scenario {scenario!r}")


def _check_scenario(scenario: str, sigma: FixedStateSpectrum | None, m2: int | None) -> None:
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if (scenario == "fixed") != (sigma is not None):
        raise DomainError("sigma eigenvalues are required for 'fixed' and only for it")
    if (scenario == "two") != (m2 is not None):
        raise DomainError("m2 is required for 'two' and only for it")


def analytic_mean(
    scenario: str, n: int, m: int, m2: int | None = None, sigma: FixedStateSpectrum | None = None
) -> analytic.MeanFidelityResult:
    _check_scenario(scenario, sigma, m2)
    if scenario == "pure":
        return analytic.mean_root_fidelity_pure(n, m)
    if scenario == "mixed":
        return analytic.mean_root_fidelity_mixed(n, m)
    if scenario == "two":
        return analytic.mean_root_fidelity_two_random(n, m, m2)
    if sigma.is_full_rank and not sigma.degenerate:
        return analytic.mean_root_fidelity_fixed(sigma, n, m)
    return analytic.mean_root_fidelity_limit(sigma, m)


@dataclass(frozen=True)
class AnalyticDensity:
    """Density callable with its support and interior kinks."""

    evaluate: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    breakpoints: tuple[float, ...] = ()
    variable: str = "lambda"


def analytic_density(
    scenario: str, n: int, m: int, m2: int | None = None, sigma: FixedStateSpectrum | None = None
) -> AnalyticDensity:
    """The density matching :func:`mc_values` for a scenario."""
    _check_scenario(scenario, sigma, m2)
    if scenario == "pure":
        return AnalyticDensity(functools.partial(analytic.fidelity_pdf_pure, n, m), (0.0, 1.0), (), "F")
    if scenario == "mixed":
        return AnalyticDensity(functools.partial(analytic.density_tau_mixed, n, m), (0.0, 1.0 / n))
    if scenario == "two":
        return AnalyticDensity(functools.partial(analytic.density_chi, n, m, m2), (0.0, 1.0), (), "mu")
    return AnalyticDensity(
        functools.partial(analytic.density_tau, sigma, n, m),
        analytic.tau_support(sigma),
        tuple(sorted(sigma.eigs)[:-1]),
    )


def _root_fidelities(sig: np.ndarray | None, block) -> np.ndarray:
    if sig is None:
        first, second = block
        return states.root_fidelity_stack(first, second)
    return states.root_fidelity_stack(sig, block)


def _spectral_values(scenario: str, sig: np.ndarray | None, block) -> np.ndarray:
    if scenario == "two":
        first, second = block
        return states.product_eigenvalues(first, second).reshape(-1)
    if scenario == "pure":
        # the only nonzero eigenvalue of sqrt(sigma) rho sqrt(sigma) is the fidelity
        return np.real(block[:, 0, 0]).copy()
    return states.product_eigenvalues(sig, block).reshape(-1)


def _ensemble_spec(spec: sampler.EnsembleSpec, scenario: str, sigma: FixedStateSpectrum | None) -> None:
    _check_scenario(scenario, sigma, spec.m2)


def mc_root_fidelities(
    spec: sampler.EnsembleSpec, scenario: str, sigma: FixedStateSpectrum | None = None, workers: int = 1
) -> np.ndarray:
    """Root fidelity of every sample, in sample order."""
    _ensemble_spec(spec, scenario, sigma)
    sig = None if scenario == "two" else sigma_matrix(scenario, spec.n, sigma)
    parts = sampler.map_chunks(functools.partial(_root_fidelities, sig), spec, workers)
    return np.concatenate(parts)


def mc_values(
    spec: sampler.EnsembleSpec, scenario: str, sigma: FixedStateSpectrum | None = None, workers: int = 1
) -> np.ndarray:
    """Pooled histogram values: all eigenvalues of tau or chi, or the fidelity for ``pure``."""
    _ensemble_spec(spec, scenario, sigma)
    sig = None if scenario == "two" else sigma_matrix(scenario, spec.n, sigma)
    parts = sampler.map_chunks(functools.partial(_spectral_values, scenario, sig), spec, workers)
    return np.concatenate(parts)


def mc_mean_bures(
    spec: sampler.EnsembleSpec, scenario: str, sigma: FixedStateSpectrum | None = None, workers: int = 1
) -> ComparisonReport:
    """Monte Carlo mean square Bures distance next to the closed form."""
    rf = mc_root_fidelities(spec, scenario, sigma, workers)
    exact = analytic_mean(scenario, spec.n, spec.m, spec.m2, sigma)
    return ComparisonReport(
        scenario=scenario,
        n=spec.n,
        m1=spec.m,
        m2=spec.m2,
        sigma_eigs=None if sigma is None else sigma.eigs,
        samples=spec.samples,
        seed=spec.seed,
        mean_root_fidelity_mc=float(rf.mean()),
        mean_root_fidelity_mc_stderr=_stderr_iid(rf),
        mean_root_fidelity_analytic=exact.mean_root_fidelity,
    )


def expected_bin_counts(density: AnalyticDensity, edges: np.ndarray, total: int) -> np.ndarray:
    """``total`` times the analytic probability of each bin (Gauss-Legendre per bin)."""
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_NODES)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray(density.evaluate(x.reshape(-1)), dtype=float).reshape(x.shape)
    return np.clip(total * (vals @ weights) * half, 0.0, None)


def histogram_from_values(values: np.ndarray, density: AnalyticDensity, bins: int) -> HistogramData:
    if bins < 10:
        raise DomainError(f"need at least 10 bins, got {bins}")
    edges = np.linspace(density.support[0], density.support[1], bins + 1)
    counts, _ = np.histogram(np.clip(values, edges[0], edges[-1]), bins=edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return HistogramData(
        edges=edges,
        counts=counts,
        total=int(values.size),
        analytic_centers=np.asarray(density.evaluate(centers), dtype=float),
        expected_counts=expected_bin_counts(density, edges, int(values.size)),
    )


def mc_histogram(
    spec: sampler.EnsembleSpec,
    scenario: str,
    bins: int,
    sigma: FixedStateSpectrum | None = None,
    workers: int = 1,
) -> HistogramData:
    """Histogram of pooled eigenvalues (or fidelities for ``pure``) on the analytic support."""
    density = analytic_density(scenario, spec.n, spec.m, spec.m2, sigma)
    return histogram_from_values(mc_values(spec, scenario, sigma, workers), density, bins)


# ---------------------------------------------------------------------------
# kicked tops


def _config_params(config: kickedtop.KickedTopConfig, prefix: str = "") -> list[tuple[str, object]]:
    keys = ("j1", "j2", "kappa1", "kappa2", "epsilon", "theta1", "phi1", "theta2", "phi2", "transient", "thinning")
    return [(prefix + k, getattr(config, k)) for k in keys]


def kicked_top_report(
    config: kickedtop.KickedTopConfig,
    scenario: str,
    sigma: FixedStateSpectrum | None = None,
    batches: int = KICKED_TOP_BATCHES,
    rhos: np.ndarray | None = None,
) -> ComparisonReport:
    """Kicked-top ensemble against a fixed sigma, with batch-means error bars."""
    if scenario == "two":
        raise DomainError("use kicked_top_pair_report for two-state comparisons")
    _check_scenario(scenario, sigma, None)
    if rhos is None:
        rhos = kickedtop.evolve_stack(config)
    rf = states.root_fidelity_stack(sigma_matrix(scenario, config.n, sigma), rhos)
    exact = analytic_mean(scenario, config.n, config.m, None, sigma)
    return ComparisonReport(
        scenario=scenario,
        n=config.n,
        m1=config.m,
        m2=None,
        sigma_eigs=None if sigma is None else sigma.eigs,
        samples=config.samples,
        seed=None,
        mean_root_fidelity_mc=float(rf.mean()),
        mean_root_fidelity_mc_stderr=batch_means_stderr(rf, batches),
        mean_root_fidelity_analytic=exact.mean_root_fidelity,
        source="kicked_top",
        parameters=tuple(_config_params(config)),
    )


def kicked_top_pair_report(
    config_a: kickedtop.KickedTopConfig,
    config_b: kickedtop.KickedTopConfig,
    batches: int = KICKED_TOP_BATCHES,
    pair: tuple[np.ndarray, np.ndarray] | None = None,
) -> ComparisonReport:
    """Two independent kicked-top systems against the two-random-state closed form."""
    first, second = pair if pair is not None else kickedtop.evolve_pair_stack(config_a, config_b)
    rf = states.root_fidelity_stack(first, second)
    exact = analytic.mean_root_fidelity_two_random(config_a.n, config_a.m, config_b.m)
    return ComparisonReport(
        scenario="two",
        n=config_a.n,
        m1=config_a.m,
        m2=config_b.m,
        sigma_eigs=None,
        samples=config_a.samples,
        seed=None,
        mean_root_fidelity_mc=float(rf.mean()),
        mean_root_fidelity_mc_stderr=batch_means_stderr(rf, batches),
        mean_root_fidelity_analytic=exact.mean_root_fidelity,
        source="kicked_top_pair",
        parameters=tuple(_config_params(config_a, "a_") + _config_params(config_b, "b_")),
    )


def kicked_top_values(
    scenario: str, rhos: np.ndarray | tuple[np.ndarray, np.ndarray], sigma: FixedStateSpectrum | None = None
) -> np.ndarray:
    """Histogram values from a kicked-top stack (or pair of stacks for ``two``)."""
    if scenario == "two":
        return _spectral_values("two", None, rhos)
    n = rhos.shape[-1]
    return _spectral_values(scenario, sigma_matrix(scenario, n, sigma), rhos)
