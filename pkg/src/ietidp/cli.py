"""Command line driver for the checkerboard, adaptive and single experiments.

Examples::

    ietidp checkerboard --p 2,3 --refine 0,1,2 --pattern good --precond selection --out table.csv
    ietidp adaptive --p 2 --rounds 8 --consistency on --out adaptive.csv
    ietidp single --p 2 --refine 1 --pattern bad --history history.csv
"""

import argparse
import json
import sys
from dataclasses import fields

from .experiments import ExperimentConfig, emit_csv, emit_history, format_table, run


def _int_list(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def _on_off(text):
    t = str(text).lower()
    if t in ("on", "true", "1", "yes"):
        return True
    if t in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def _radii(text):
    vals = [float(x) for x in str(text).split(",")]
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("radii must be 'inner,outer'")
    return tuple(vals)


def build_parser():
    ap = argparse.ArgumentParser(prog="ietidp", description="IETI-DP experiments on the quarter annulus.")
    ap.add_argument("experiment", choices=["checkerboard", "adaptive", "single"])
    ap.add_argument("--config", help="JSON file with ExperimentConfig fields as keys")
    ap.add_argument("--p", type=_int_list, help="spline degree(s), comma separated")
    ap.add_argument("--refine", type=_int_list, help="uniform refinement level(s) r, comma separated")
    ap.add_argument("--disparity", type=_int_list, help="mesh level disparity d, comma separated")
    ap.add_argument("--pattern", choices=["uniform", "good", "bad", "good-checkerboard", "bad-checkerboard"])
    ap.add_argument("--nu-orange", dest="nu_orange", type=float)
    ap.add_argument("--precond", choices=["selection", "deluxe", "none"])
    ap.add_argument("--tol", type=float, help="relative PCG tolerance (default 1e-6; 1e-10 for adaptive)")
    ap.add_argument("--theta", type=float, help="Doerfler parameter")
    ap.add_argument("--rounds", type=int, help="adaptive rounds")
    ap.add_argument("--consistency", type=_on_off, help="consistency splitting on|off")
    ap.add_argument("--radii", type=_radii, help="annulus radii 'inner,outer'")
    ap.add_argument("--max-iter", dest="max_iter", type=int)
    ap.add_argument("--max-dofs", dest="max_dofs", type=int, help="cells above this size are skipped")
    ap.add_argument("--out", help="CSV output path")
    ap.add_argument("--history", help="CSV path for the residual history (single only)")
    ap.add_argument("--timing", action="store_true", help="include wall times in the CSV")
    return ap


def config_from_args(args):
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise SystemExit(f"unknown config keys: {', '.join(sorted(unknown))}")
    data["experiment"] = args.experiment
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "experiment":
            data[f.name] = v
    return ExperimentConfig(**data)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows, report = run(cfg)
    print(format_table(rows))
    if cfg.out:
        emit_csv(rows, cfg.out, timing=args.timing)
    if cfg.history and report is not None:
        emit_history(report, cfg.history)
    return 0


if __name__ == "__main__":
    sys.exit(main())
