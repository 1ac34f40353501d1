"""Command line: ``topoqlab {spectrum,g2,state-tomo,process-tomo,all} [--config F] [--seed N] [--out DIR]``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from . import experiments
from .errors import ConstrainedFitError, ConstructionError, DomainError, FitError, InversionError, NumericalError

log = logging.getLogger("topoqlab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

RUNNERS = {
    "spectrum": experiments.run_spectrum,
    "g2": experiments.run_g2_scan,
    "state-tomo": experiments.run_state_tomo,
    "process-tomo": experiments.run_process_tomo,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="topoqlab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=[*RUNNERS, "all", "schema"])
    p.add_argument("--config", help="JSON config; unknown keys are rejected")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--out", help="output directory (overrides config output_dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "schema":
        print(json.dumps(experiments.CONFIG_SCHEMA, indent=2))
        return EXIT_OK

    try:
        if args.config:
            cfg = experiments.ExperimentConfig.from_file(args.config, seed=args.seed, output_dir=args.out)
        else:
            cfg = experiments.ExperimentConfig.from_dict({}, seed=args.seed, output_dir=args.out)
    except experiments.ConfigError as exc:
        print(f"topoqlab: {exc}", file=sys.stderr)
        return EXIT_USAGE

    t0 = time.perf_counter()
    try:
        if args.command == "all":
            files = experiments.run_all(cfg)
        else:
            files = RUNNERS[args.command](cfg).files
    except ConstrainedFitError as exc:
        print(f"topoqlab: {exc}", file=sys.stderr)
        print(json.dumps(exc.residuals, indent=2), file=sys.stderr)
        return EXIT_NUMERIC
    except (NumericalError, InversionError, FitError) as exc:
        print(f"topoqlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ConstructionError) as exc:
        print(f"topoqlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = experiments.write_manifest(cfg, files, time.perf_counter() - t0)
    log.info("wrote %d files and %s", len(files), manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
