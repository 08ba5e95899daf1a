"""Command-line entry point: ``aalf <stage> --config experiment.yaml``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from . import __version__
from .config import load_config
from .errors import AalfError
from .ingest import write_tsf
from .pipeline import COMMANDS, STAGES, run_all
from .synthetic import nonlinear_dataset, perfect_predictions_csv, selection_suite


def _global_flags(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--config", type=Path, default=default, help="experiment YAML file")
    parser.add_argument("--seed", type=int, default=default, help="master seed (overrides the config)")
    parser.add_argument("--out", type=str, default=default, help="output root (overrides the config)")
    parser.add_argument("--threads", type=int, default=default, help="worker threads for per-series work")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aalf", description=__doc__)
    parser.add_argument("--version", action="version", version=f"aalf {__version__}")
    _global_flags(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)
    # flags may also follow the subcommand; SUPPRESS keeps them from resetting earlier values
    for name in (*STAGES, "run-all"):
        _global_flags(sub.add_parser(name, help=f"run the {name} stage" if name in STAGES else "run every stage"), argparse.SUPPRESS)
    demo = sub.add_parser("make-synthetic", help="write a synthetic dataset and a matching config")
    demo.add_argument("dest", type=Path)
    demo.add_argument("--kind", choices=("selection", "nonlinear"), default="selection")
    demo.add_argument("--series", type=int, default=8)
    demo.add_argument("--length", type=int, default=2000)
    demo.add_argument("--seed", type=int, default=0)
    return parser


def make_synthetic(dest: Path, kind: str, n_series: int, length: int, seed: int) -> Path:
    """Write ``data/series.tsf`` (and a perfect ``g`` file for the selection suite) plus ``config.yaml``."""
    data = dest / "data"
    data.mkdir(parents=True, exist_ok=True)
    lag = 14
    entry = {"name": kind, "path": "data/series.tsf", "format": "tsf", "lag": lag}
    if kind == "selection":
        ds = selection_suite(n_series, length, seed)
        (data / "g.csv").write_text(perfect_predictions_csv(ds, lag))
        entry["g_predictions"] = "data/g.csv"
    else:
        ds = nonlinear_dataset(n_series, length, seed)
    (data / "series.tsf").write_text(write_tsf(ds))
    config = {
        "datasets": [entry],
        "mlp": {"epochs": 30, "batch_size": 64, "learning_rate": 0.003, "hidden_sizes": [32, 32]},
        "seed": seed,
        "out": "runs",
    }
    path = dest / "config.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False))
    return path


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "make-synthetic":
            print(make_synthetic(args.dest, args.kind, args.series, args.length, args.seed))
            return 0
        if args.config is None:
            raise AalfError("--config is required")
        cfg = load_config(args.config).with_overrides(seed=args.seed, out=args.out, threads=args.threads)
        if args.command == "run-all":
            print(run_all(cfg))
        else:
            print(COMMANDS[args.command](cfg))
    except (AalfError, OSError, KeyError, ValueError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"aalf {args.command}: error: {message}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
