"""``memlab`` command line entry point."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import EXPERIMENTS, PRESETS, ConfigError, load_config
from .experiments import EXIT_CHECK, EXIT_CONFIG, EXIT_IO, ExperimentError, run
from .io import emit


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memlab", description="One-layer associative-memory optimizer laboratory.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="JSON config file; flags override its keys")
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--k", type=int)
    ap.add_argument("--l", type=int)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--eps", type=float)
    ap.add_argument("--distribution", choices=("two_class", "power_law"))
    ap.add_argument("--m", type=int)
    ap.add_argument("--n-qa", dest="n_qa", type=int)
    ap.add_argument("--optimizer", help="comma-separated optimizer names")
    ap.add_argument("--embeddings", help="comma-separated embedding kinds")
    ap.add_argument("--seeds", help="comma-separated integer seeds")
    ap.add_argument("--steps", type=int)
    ap.add_argument("--eta", type=float)
    ap.add_argument("--schedule", help="comma-separated step sizes")
    ap.add_argument("--momentum", type=float)
    ap.add_argument("--ns-iterations", dest="ns_iterations", type=int)
    ap.add_argument("--grid-decades", dest="grid_decades", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--input", help="matrix dump for the spectra experiment")
    ap.add_argument("--out", help="output path (.csv or .json)")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = vars(_parser().parse_args(argv))
    config_path = args.pop("config")
    try:
        cfg = load_config(config_path, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config {config_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        result = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed input dump
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        emit(result.rows, cfg.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for line in result.summary:
        print(line)
    if cfg.out:
        print(f"wrote {len(result.rows)} rows to {cfg.out}")
    return result.status


if __name__ == "__main__":
    sys.exit(main())
