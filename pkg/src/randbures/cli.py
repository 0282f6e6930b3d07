"""Command-line interface.

Exit codes: 0 success, 2 parameter error, 3 numerical convergence failure,
4 consistency-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, analytic, figures, harness, kickedtop, sampler
from .errors import ConsistencyError, ConvergenceError, DomainError
from .states import FixedStateSpectrum

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_CONVERGENCE = 3
EXIT_CONSISTENCY = 4


def _eigs(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eigenvalue list {text!r}") from exc


def _sigma(args) -> FixedStateSpectrum | None:
    return FixedStateSpectrum(args.sigma_eigs) if args.sigma_eigs else None


def _print_json(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _write_curve(density: harness.AnalyticDensity, grid: int, out: Path) -> int:
    table = analytic.grid_density(density.evaluate, grid, density.support)
    figures.write_csv(out, figures.DENSITY_HEADER, zip(table.abscissae, table.values))
    _print_json(
        {
            "out": str(out),
            "normalization": table.normalization,
            "first_moment": table.first_moment,
            "divergent_endpoints": list(table.divergent_endpoints),
        }
    )
    if abs(table.normalization - 1.0) > figures.NORMALIZATION_TOL:
        raise ConsistencyError(table.warning or f"normalization {table.normalization}")
    return EXIT_OK


def cmd_density_fixed(args) -> int:
    sigma = FixedStateSpectrum(args.sigma_eigs)
    if sigma.n != args.n:
        raise DomainError(f"--sigma-eigs has {sigma.n} values but --n is {args.n}")
    density = harness.analytic_density("fixed", args.n, args.m, None, sigma)
    return _write_curve(density, args.grid, Path(args.out))


def cmd_density_two(args) -> int:
    density = harness.analytic_density("two", args.n, args.m1, args.m2)
    return _write_curve(density, args.grid, Path(args.out))


def cmd_mean(args) -> int:
    sigma = _sigma(args)
    res = harness.analytic_mean(args.scenario, args.n, args.m, args.m2, sigma)
    _print_json(
        {
            "scenario": args.scenario,
            "n": args.n,
            "m1": args.m,
            "m2": args.m2,
            "sigma_eigs": list(sigma.eigs) if sigma else None,
            "mean_root_fidelity": res.mean_root_fidelity,
            "msbd": res.mean_sq_bures,
        }
    )
    return EXIT_OK


def cmd_mc(args) -> int:
    sigma = _sigma(args)
    spec = sampler.EnsembleSpec(args.n, args.m, args.m2, samples=args.samples, seed=args.seed)
    report = harness.mc_mean_bures(spec, args.scenario, sigma, args.workers)
    payload = report.to_json_dict()
    payload["version"] = f"randbures {__version__}"
    if args.out:
        out = Path(args.out)
        hist = harness.mc_histogram(spec, args.scenario, args.bins, sigma, args.workers)
        figures.write_csv(
            out,
            figures.HIST_HEADER,
            zip(hist.centers, hist.analytic_centers, hist.density, hist.density_stderr),
        )
        payload["bins_within_4_sigma"] = hist.pass_fraction(4.0)
        figures.write_json(out.with_suffix(".json"), payload)
    _print_json(payload)
    return EXIT_OK


def cmd_kicked_top(args) -> int:
    common = dict(transient=args.transient, samples=args.samples, thinning=args.thinning)
    cfg = kickedtop.KickedTopConfig(
        args.j1, args.j2, args.kappa1, args.kappa2, args.eps,
        args.theta1, args.phi1, args.theta2, args.phi2, **common,
    )
    if args.j2b is not None:
        cfg_b = kickedtop.KickedTopConfig(
            args.j1,
            args.j2b,
            args.kappa1b if args.kappa1b is not None else args.kappa1,
            args.kappa2b if args.kappa2b is not None else args.kappa2,
            args.epsb if args.epsb is not None else args.eps,
            args.theta1, args.phi1, args.theta2, args.phi2, **common,
        )
        report = harness.kicked_top_pair_report(cfg, cfg_b)
    else:
        if args.scenario == "two":
            raise DomainError("scenario 'two' needs a second system (--j2b)")
        sigma = _sigma(args)
        report = harness.kicked_top_report(cfg, args.scenario, sigma)
    payload = report.to_json_dict()
    payload["version"] = f"randbures {__version__}"
    if args.out:
        figures.write_json(Path(args.out), payload)
    _print_json(payload)
    return EXIT_OK


def cmd_figure(args) -> int:
    opts = figures.RunOptions(
        samples=args.samples, seed=args.seed, bins=args.bins, grid=args.grid,
        transient=args.transient, workers=args.workers,
    )
    for path in figures.run_figure(args.id, args.out_dir, opts):
        print(path)
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randbures", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density-fixed", help="eigenvalue density of sqrt(sigma) rho sqrt(sigma)")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--sigma-eigs", type=_eigs, required=True)
    p.add_argument("--grid", type=_positive_int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_density_fixed)

    p = sub.add_parser("density-two", help="eigenvalue density of sqrt(rho1) rho2 sqrt(rho1)")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--m1", type=_positive_int, required=True)
    p.add_argument("--m2", type=_positive_int, required=True)
    p.add_argument("--grid", type=_positive_int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_density_two)

    def scenario_args(q):
        q.add_argument("--scenario", choices=harness.SCENARIOS, required=True)
        q.add_argument("--sigma-eigs", type=_eigs, default=None)
        q.add_argument("--n", type=_positive_int, required=True)
        q.add_argument("--m", type=_positive_int, required=True)
        q.add_argument("--m2", type=_positive_int, default=None)

    p = sub.add_parser("mean", help="closed-form mean root fidelity and mean square Bures distance")
    scenario_args(p)
    p.set_defaults(func=cmd_mean)

    p = sub.add_parser("mc", help="Monte Carlo comparison against the closed form")
    scenario_args(p)
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", default=None, help="histogram CSV; the report goes next to it as .json")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("kicked-top", help="coupled kicked tops against the closed form")
    p.add_argument("--scenario", choices=("pure", "mixed", "fixed", "two"), default="mixed")
    p.add_argument("--sigma-eigs", type=_eigs, default=None)
    p.add_argument("--j1", type=float, required=True)
    p.add_argument("--j2", type=float, required=True)
    p.add_argument("--kappa1", type=float, required=True)
    p.add_argument("--kappa2", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--theta1", type=float, default=kickedtop.DEFAULT_THETA)
    p.add_argument("--phi1", type=float, default=kickedtop.DEFAULT_PHI)
    p.add_argument("--theta2", type=float, default=kickedtop.DEFAULT_THETA)
    p.add_argument("--phi2", type=float, default=kickedtop.DEFAULT_PHI)
    p.add_argument("--transient", type=int, default=500)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--thinning", type=int, default=1)
    p.add_argument("--j2b", type=float, default=None, help="second system: spin of its traced-out top")
    p.add_argument("--kappa1b", type=float, default=None)
    p.add_argument("--kappa2b", type=float, default=None)
    p.add_argument("--epsb", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_kicked_top)

    p = sub.add_parser("figure", help="write the CSV and JSON files of one figure")
    p.add_argument("--id", required=True, choices=list(figures.FIGURES))
    p.add_argument("--samples", type=_positive_int, default=None)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--grid", type=_positive_int, default=1000)
    p.add_argument("--transient", type=int, default=500)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
