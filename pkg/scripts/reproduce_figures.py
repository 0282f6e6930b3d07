"""Write the CSV and JSON files of every figure (or a chosen subset).

    python3 scripts/reproduce_figures.py --out-dir results
    python3 scripts/reproduce_figures.py --only fig4a fig9 --samples 5000

Kicked-top figures default to 60000 post-transient samples per trajectory;
pass ``--samples`` to shrink them for a quick run.
"""

import argparse
import logging
import sys
import time

from randbures.errors import ConsistencyError
from randbures.figures import FIGURES, RunOptions, run_figure


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--only", nargs="+", choices=list(FIGURES), default=list(FIGURES))
    parser.add_argument("--samples", type=int, default=None, help="override every figure's sample count")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    opts = RunOptions(samples=args.samples, seed=args.seed, workers=args.workers)
    failed = []
    for fig_id in args.only:
        start = time.perf_counter()
        try:
            files = run_figure(fig_id, args.out_dir, opts)
        except ConsistencyError as exc:
            logging.error("%s failed its checks: %s", fig_id, exc)
            failed.append(fig_id)
            continue
        logging.info("%s: %d files in %.1f s", fig_id, len(files), time.perf_counter() - start)
    if failed:
        logging.error("failed: %s", ", ".join(failed))
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
