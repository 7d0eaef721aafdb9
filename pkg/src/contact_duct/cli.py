"""Command line entry point: ``contact-duct {solve,sweep,farfield,verify}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, FarFieldError, SubsonicityError
from .pipeline import (EXIT_CHECKS, EXIT_CONFIG, EXIT_OK, SWEEP_PARAMS, OUT_ENV, RunConfig,
                       farfield_of, run_pipeline, sweep, verify_run_dir)


def _load(path: str) -> RunConfig:
    return RunConfig.from_file(path)


def cmd_solve(args) -> int:
    cfg = _load(args.config)
    res = run_pipeline(cfg, args.out)
    if res.report is not None:
        print(res.report.to_text(), end="")
    print(f"{res.message}" + (f"  [{res.out_dir}]" if res.out_dir else ""),
          file=sys.stderr if res.status else sys.stdout)
    return res.status


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values needs at least one number")
    path = sweep(cfg, args.param, values, args.out)
    print(path.read_text(), end="")
    print(f"[{path}]", file=sys.stderr)
    return EXIT_OK


def cmd_farfield(args) -> int:
    cfg = _load(args.config)
    ff = farfield_of(cfg)
    print(json.dumps(ff.summary(), indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    status, report, msg = verify_run_dir(args.run_dir)
    if report is None:
        print(msg, file=sys.stderr)
        return status
    print(report.to_text(), end="")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="contact-duct",
        description=f"Two-layer subsonic flow with a contact discontinuity in a perturbed duct. "
                    f"Output root can be overridden with ${OUT_ENV}.")
    p.add_argument("-v", "--verbose", action="store_true", help="log every fixed-point step")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the full pipeline for one configuration")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: <root>/<name>)")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="one run per parameter value, aggregated to sweep.csv")
    s.add_argument("config")
    s.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    s.add_argument("--values", required=True, help="comma-separated list")
    s.add_argument("--out", help="sweep directory")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("farfield", help="downstream asymptotic state only")
    s.add_argument("config")
    s.set_defaults(func=cmd_farfield)

    s = sub.add_parser("verify", help="re-run the checks on a finished run directory")
    s.add_argument("run_dir")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FarFieldError, SubsonicityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
