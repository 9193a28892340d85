"""``mcd`` command: run one experiment, write results.csv, the SVG plot and the resolved config.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 threshold failure under ``--assert``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import experiments as E
from .moments import MomentMatrixError, dump_csv
from .mollifier import GegenbauerMismatchError, UnresolvedMollifierError
from .svgplot import write_loglog

log = logging.getLogger("mcd")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ASSERT = 0, 2, 3, 4


def _parse_degrees(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise E.ConfigError(f"--degrees expects comma-separated integers, got {text!r}") from exc


def build_parser():
    p = argparse.ArgumentParser(prog="mcd", description="Mollified Christoffel-Darboux kernel experiments.")
    p.add_argument("experiment", choices=E.EXPERIMENTS)
    p.add_argument("--config", help="JSON file with experiment settings")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--degrees", help="comma-separated degree list, overrides the config")
    p.add_argument("--seed", type=int, help="seed for random evaluation points")
    p.add_argument("--dump-moments", action="store_true", help="write moments_d<d>.csv per degree")
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit with status 4 when an acceptance threshold fails")
    p.add_argument("--timings", action="store_true",
                   help="fill the seconds column (off by default so output is deterministic)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args):
    user = {}
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise E.ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise E.ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise E.ConfigError("config must be a JSON object")
    if args.degrees:
        user["degrees"] = _parse_degrees(args.degrees)
    if args.seed is not None:
        user["seed"] = args.seed
    return E.resolve_config(args.experiment, user)


def write_outputs(out, cfg, result, dump_moments=False):
    with open(os.path.join(out, "results.csv"), "w", newline="") as fh:
        fh.write(result.table.to_csv())
    with open(os.path.join(out, "config_resolved.json"), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if result.plot:
        plot = dict(result.plot)
        shift = plot.pop("shift", 0)
        series = plot.pop("series")
        if shift:
            # log axes cannot show d = 0
            series = {k: ([x + shift for x in xs], ys) for k, (xs, ys) in series.items()}
        write_loglog(os.path.join(out, f"plot_{cfg['experiment']}.svg"), series, **plot)
    if dump_moments:
        for d, M in sorted(result.moments.items()):
            dump_csv(M, os.path.join(out, f"moments_d{d}.csv"))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args)
        os.makedirs(args.out, exist_ok=True)
        if not os.access(args.out, os.W_OK):
            raise E.ConfigError(f"output directory {args.out} is not writable")
        result = E.RUNNERS[args.experiment](cfg, timings=args.timings)
    except E.NumericalAbort as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.result is not None:
            write_outputs(args.out, cfg, exc.result)
        return EXIT_NUMERICAL
    except (MomentMatrixError, UnresolvedMollifierError, GegenbauerMismatchError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (E.ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_outputs(args.out, cfg, result, args.dump_moments)
    for msg in result.messages:
        log.info(msg)
    failed = [(n, d) for n, ok, d in result.checks if not ok]
    for name, ok, detail in result.checks:
        log.info("%s %s %s", "PASS" if ok else "FAIL", name, detail)
    print(f"{args.experiment}: {len(result.table.rows)} rows, "
          f"{len(result.checks) - len(failed)}/{len(result.checks)} checks passed -> {args.out}")
    if args.check and failed:
        for name, detail in failed:
            print(f"FAIL {name} {detail}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
