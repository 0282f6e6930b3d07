"""Reproduction of the ten figures as flat CSV and JSON files.

Density figures write ``<id>_curve.csv`` (analytic curve on a grid clustered
at the support endpoints), ``<id>_hist.csv`` (bin centres with analytic,
histogram and Poisson error columns) and ``<id>.json`` (checks and
provenance).  Mean-distance figures write ``<id>.json`` (one report per
point) and ``<id>.csv`` (the same numbers as a table).  Outputs are
byte-identical for identical arguments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, analytic, harness, kickedtop, sampler
from .errors import ConsistencyError, DomainError
from .states import FixedStateSpectrum

DENSITY_HEADER = ("x", "analytic_pdf")
HIST_HEADER = ("x", "analytic_pdf", "mc_density", "mc_stderr")
TABLE_HEADER = ("label", "n", "m1", "m2", "msbd_mc", "msbd_mc_stderr", "msbd_analytic", "percent_rel_diff")
NORMALIZATION_TOL = 1e-4

CKT_SETS = {"CKT1": (7.0, 8.0, 1.0), "CKT2": (6.0, 7.0, 0.75), "CKT3": (7.0, 9.0, 0.5)}
CKTP_SETS = {
    "CKTP1": ((8.0, 7.0, 0.5), (7.0, 8.0, 1.0)),
    "CKTP2": ((6.0, 7.0, 0.8), (6.0, 8.0, 0.75)),
    "CKTP3": ((7.0, 8.0, 0.75), (8.0, 7.0, 0.75)),
}
KICKED_J2 = (17, 19, 22, 24)  # m = 35, 39, 45, 49
KICKED_PAIRS = ((17, 22), (19, 24), (22, 24), (17, 24))


@dataclass(frozen=True)
class RunOptions:
    samples: int | None = None
    seed: int = 2024
    bins: int = 60
    grid: int = 1000
    transient: int = 500
    workers: int = 1


@dataclass(frozen=True)
class DensityFigure:
    scenario: str
    n: int
    m: int
    m2: int | None = None
    sigma: tuple[float, ...] | None = None
    default_samples: int = 20_000


@dataclass(frozen=True)
class MeanFigure:
    scenario: str
    points: tuple[tuple[int, int, int | None], ...]
    sigma: tuple[float, ...] | None = None
    default_samples: int = 20_000


@dataclass(frozen=True)
class KickedDensityFigure:
    scenario: str
    j1: int
    j2: int
    params: tuple[float, float, float]
    j2b: int | None = None
    params_b: tuple[float, float, float] | None = None
    default_samples: int = 60_000


@dataclass(frozen=True)
class KickedMeanFigure:
    scenario: str
    j1: int
    sets: dict = field(default_factory=dict)
    j2_values: tuple = ()
    default_samples: int = 60_000


def _grid_m(n: int, lo: int, hi: int) -> tuple[tuple[int, int, int], ...]:
    return tuple((n, a, b) for b in range(lo, hi + 1) for a in range(lo, b + 1))


FIG3_SIGMA = (0.09, 0.12, 0.21, 0.28, 0.30)

FIGURES: dict[str, object] = {
    "fig1a": DensityFigure("fixed", 3, 8, sigma=(0.15, 0.33, 0.52)),
    "fig1b": DensityFigure("fixed", 4, 9, sigma=(0.07, 0.17, 0.35, 0.41)),
    "fig1c": DensityFigure("fixed", 5, 10, sigma=FIG3_SIGMA),
    "fig2a": DensityFigure("pure", 5, 6, default_samples=100_000),
    "fig2b": DensityFigure("mixed", 5, 6),
    "fig3a": MeanFigure("pure", tuple((5, m, None) for m in range(5, 11))),
    "fig3b": MeanFigure("mixed", tuple((5, m, None) for m in range(5, 11))),
    "fig3c": MeanFigure("fixed", tuple((5, m, None) for m in range(5, 11)), sigma=FIG3_SIGMA),
    "fig4a": DensityFigure("two", 3, 6, 7),
    "fig4b": DensityFigure("two", 4, 5, 8),
    "fig4c": DensityFigure("two", 5, 8, 10),
    "fig5a": MeanFigure("two", _grid_m(2, 2, 5)),
    "fig5b": MeanFigure("two", _grid_m(5, 5, 8)),
    "fig6a": KickedDensityFigure("pure", 12, 22, CKT_SETS["CKT1"]),
    "fig6b": KickedDensityFigure("mixed", 12, 17, CKT_SETS["CKT1"]),
    "fig7": KickedMeanFigure("pure", 12, CKT_SETS, KICKED_J2),
    "fig8": KickedMeanFigure("mixed", 12, CKT_SETS, KICKED_J2),
    "fig9": KickedDensityFigure("two", 7, 8, CKTP_SETS["CKTP1"][0], 10, CKTP_SETS["CKTP1"][1]),
    "fig10": KickedMeanFigure("two", 12, CKTP_SETS, KICKED_PAIRS),
}


# ---------------------------------------------------------------------------
# writers


def _fmt(x) -> str:
    # adding 0.0 turns -0.0 into 0.0
    return f"{float(x) + 0.0:.15g}"


def write_csv(path: Path, header: tuple[str, ...], rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else ("" if v is None else _fmt(v)) for v in row])
    return path


def write_json(path: Path, payload) -> Path:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _provenance(fig_id: str, opts: RunOptions, samples: int) -> dict:
    return {
        "figure": fig_id,
        "version": f"randbures {__version__}",
        "samples": samples,
        "seed": opts.seed,
        "bins": opts.bins,
        "grid": opts.grid,
    }


# ---------------------------------------------------------------------------
# runners


def _density_outputs(
    fig_id: str,
    out_dir: Path,
    density: harness.AnalyticDensity,
    values: np.ndarray,
    opts: RunOptions,
    meta: dict,
    moment_scale: float,
    n: int,
) -> tuple[list[Path], list[str]]:
    grid = analytic.grid_density(density.evaluate, opts.grid, density.support)
    hist = harness.histogram_from_values(values, density, opts.bins)
    files = [
        write_csv(out_dir / f"{fig_id}_curve.csv", DENSITY_HEADER, zip(grid.abscissae, grid.values)),
        write_csv(
            out_dir / f"{fig_id}_hist.csv",
            HIST_HEADER,
            zip(hist.centers, hist.analytic_centers, hist.density, hist.density_stderr),
        ),
    ]
    failures = []
    if abs(grid.normalization - 1.0) > NORMALIZATION_TOL:
        failures.append(f"normalization {grid.normalization:.8f}")
    first = moment_scale * grid.first_moment
    if abs(first - 1.0 / n) > NORMALIZATION_TOL:
        failures.append(f"first moment {first:.8f} vs {1.0 / n:.8f}")
    payload = dict(meta)
    payload.update(
        normalization=grid.normalization,
        first_moment=first,
        divergent_endpoints=list(grid.divergent_endpoints),
        pooled_values=hist.total,
        bins_within_4_sigma=hist.pass_fraction(4.0),
        checks_failed=failures,
    )
    files.append(write_json(out_dir / f"{fig_id}.json", payload))
    return files, failures


def _run_density(fig_id: str, fig: DensityFigure, out_dir: Path, opts: RunOptions):
    samples = opts.samples or fig.default_samples
    sigma = FixedStateSpectrum(fig.sigma) if fig.sigma else None
    spec = sampler.EnsembleSpec(fig.n, fig.m, fig.m2, samples=samples, seed=opts.seed)
    density = harness.analytic_density(fig.scenario, fig.n, fig.m, fig.m2, sigma)
    values = harness.mc_values(spec, fig.scenario, sigma, opts.workers)
    meta = _provenance(fig_id, opts, samples)
    meta.update(scenario=fig.scenario, n=fig.n, m1=fig.m, m2=fig.m2, sigma_eigs=list(fig.sigma) if fig.sigma else None)
    scale = 1.0 if fig.scenario == "pure" else fig.n
    return _density_outputs(fig_id, out_dir, density, values, opts, meta, scale, fig.n)


def _report_rows(reports: list[tuple[str, harness.ComparisonReport]]):
    for label, r in reports:
        yield (label, r.n, r.m1, r.m2, r.msbd_mc, r.msbd_mc_stderr, r.msbd_analytic, r.percent_rel_diff)


def _check_reports(reports) -> list[str]:
    bad = []
    for label, r in reports:
        d = r.to_json_dict()
        if abs(d["msbd_mc"] - (2 - 2 * d["mean_root_fidelity_mc"])) > 1e-12 or abs(
            d["msbd_analytic"] - (2 - 2 * d["mean_root_fidelity_analytic"])
        ) > 1e-12:
            bad.append(f"{label}: msbd identity violated")
    return bad


def _write_reports(fig_id, out_dir, opts, samples, reports):
    payload = _provenance(fig_id, opts, samples)
    failures = _check_reports(reports)
    payload["reports"] = [dict(r.to_json_dict(), label=label) for label, r in reports]
    payload["checks_failed"] = failures
    files = [
        write_json(out_dir / f"{fig_id}.json", payload),
        write_csv(out_dir / f"{fig_id}.csv", TABLE_HEADER, _report_rows(reports)),
    ]
    return files, failures


def _run_mean(fig_id: str, fig: MeanFigure, out_dir: Path, opts: RunOptions):
    samples = opts.samples or fig.default_samples
    sigma = FixedStateSpectrum(fig.sigma) if fig.sigma else None
    reports = []
    for n, m1, m2 in fig.points:
        spec = sampler.EnsembleSpec(n, m1, m2, samples=samples, seed=opts.seed)
        label = f"({n},{m1},{m2})" if m2 is not None else f"({n},{m1})"
        reports.append((label, harness.mc_mean_bures(spec, fig.scenario, sigma, opts.workers)))
    return _write_reports(fig_id, out_dir, opts, samples, reports)


def _config(j1, j2, params, samples, opts) -> kickedtop.KickedTopConfig:
    k1, k2, eps = params
    return kickedtop.KickedTopConfig(j1, j2, k1, k2, eps, transient=opts.transient, samples=samples)


def _run_kicked_density(fig_id: str, fig: KickedDensityFigure, out_dir: Path, opts: RunOptions):
    samples = opts.samples or fig.default_samples
    cfg = _config(fig.j1, fig.j2, fig.params, samples, opts)
    meta = _provenance(fig_id, opts, samples)
    meta["parameters"] = dict(harness._config_params(cfg))
    if fig.scenario == "two":
        cfg_b = _config(fig.j1, fig.j2b, fig.params_b, samples, opts)
        meta["parameters"].update(dict(harness._config_params(cfg_b, "b_")))
        rhos = kickedtop.evolve_pair_stack(cfg, cfg_b)
        m2 = cfg_b.m
    else:
        rhos = kickedtop.evolve_stack(cfg)
        m2 = None
    values = harness.kicked_top_values(fig.scenario, rhos)
    density = harness.analytic_density(fig.scenario, cfg.n, cfg.m, m2)
    meta.update(scenario=fig.scenario, n=cfg.n, m1=cfg.m, m2=m2, sigma_eigs=None, source="kicked_top")
    scale = 1.0 if fig.scenario == "pure" else cfg.n
    return _density_outputs(fig_id, out_dir, density, values, opts, meta, scale, cfg.n)


def _run_kicked_mean(fig_id: str, fig: KickedMeanFigure, out_dir: Path, opts: RunOptions):
    samples = opts.samples or fig.default_samples
    reports = []
    for set_name, params in fig.sets.items():
        for j2 in fig.j2_values:
            if fig.scenario == "two":
                ja, jb = j2
                cfg_a = _config(fig.j1, ja, params[0], samples, opts)
                cfg_b = _config(fig.j1, jb, params[1], samples, opts)
                rep = harness.kicked_top_pair_report(cfg_a, cfg_b)
            else:
                rep = harness.kicked_top_report(_config(fig.j1, j2, params, samples, opts), fig.scenario)
            reports.append((f"{set_name} m={rep.m1}" + (f",{rep.m2}" if rep.m2 else ""), rep))
    return _write_reports(fig_id, out_dir, opts, samples, reports)


RUNNERS: dict[type, Callable] = {
    DensityFigure: _run_density,
    MeanFigure: _run_mean,
    KickedDensityFigure: _run_kicked_density,
    KickedMeanFigure: _run_kicked_mean,
}


def run_figure(fig_id: str, out_dir: str | Path = ".", options: RunOptions | None = None) -> list[Path]:
    """Write the files for one figure; raise ConsistencyError if a check fails."""
    if fig_id not in FIGURES:
        raise DomainError(f"unknown figure id {fig_id!r}; expected one of {', '.join(FIGURES)}")
    opts = options or RunOptions()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig = FIGURES[fig_id]
    files, failures = RUNNERS[type(fig)](fig_id, fig, out, opts)
    if failures:
        raise ConsistencyError(f"{fig_id}: " + "; ".join(failures))
    return files
