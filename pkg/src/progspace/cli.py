"""Command line entry point: `progspace simulate|fit|predict|plot|evaluate`.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure, 1 anything else raised by the package.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, pipeline
from .config import PLOT_KINDS, load_config
from .errors import ConfigError, ProgspaceError


def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (key = value lines in sections)")
    common.add_argument("--horizon", type=int, choices=(24, 48), help="prediction month")
    common.add_argument("--out", help="run directory")
    common.add_argument("--seed", type=_u64, help="run seed; per-module seeds default to it")

    p = argparse.ArgumentParser(prog="progspace", description="Disease progression space pipeline.")
    p.add_argument("--version", action="version", version=f"progspace {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write a synthetic cohort")
    f = sub.add_parser("fit", parents=[common], help="run every stage and write the report")
    f.add_argument("--jobs", type=int, default=1, help="worker processes for forest training")
    f.add_argument("--resume", action="store_true", help="keep stage directories that already exist")
    pr = sub.add_parser("predict", parents=[common], help="place new subjects and predict their class")
    pr.add_argument("--input", required=True, help="cohort CSV to score")
    pr.add_argument("--schema", help="schema sidecar of the input (must match training)")
    pr.add_argument("--output", help="predictions CSV (default <out>/predictions/predictions.csv)")
    pl = sub.add_parser("plot", parents=[common], help="render SVG figures from a fitted run")
    pl.add_argument("--kind", action="append", choices=PLOT_KINDS, help="figure to draw (repeatable)")
    ev = sub.add_parser("evaluate", parents=[common], help="recompute the report from saved artifacts")
    ev.add_argument("--jobs", type=int, default=1)
    return p


def _config(args):
    overrides = {"run.horizon": args.horizon, "run.out": args.out, "run.seed": args.seed}
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse usage errors are configuration errors
        return 0 if exc.code == 0 else ConfigError.exit_code
    try:
        cfg = _config(args)
        if args.command == "simulate":
            res = pipeline.simulate(cfg)
            print(f"cohort written to {res.root / 'cohort'}")
        elif args.command == "fit":
            if args.jobs < 1:
                raise ConfigError("--jobs must be at least 1")
            res = pipeline.fit(cfg, args.jobs, args.resume)
            print((res.root / "report" / "report.txt").read_text(encoding="utf-8"), end="")
            print(f"run hash {res.run_hash}")
        elif args.command == "predict":
            out = pipeline.predict(cfg, args.input, args.output, args.schema)
            print(f"predictions written to {out}")
        elif args.command == "plot":
            for path in pipeline.plot(cfg, args.kind):
                print(path)
        elif args.command == "evaluate":
            res = pipeline.evaluate(cfg, args.jobs)
            print((res.root / "report" / "report.txt").read_text(encoding="utf-8"), end="")
    except ProgspaceError as exc:
        stage = getattr(exc, "stage", None)
        where = f" [{stage} stage]" if stage else ""
        print(f"progspace{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
