"""Command-line frontend: ``weylkit check``, ``weylkit solve-toda``, ``weylkit list-scenarios``.

Exit codes: 0 pass, 1 check failure, 2 config error, 3 math error, 4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

from .scenarios import BUILTINS, CHECKS, ConfigError, MathError, load_scenario, run_checks, run_toda, validate
from .toda import write_grid

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_MATH, EXIT_NONCONVERGED = 0, 1, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weylkit", description="Weyl geometry checks on coordinate charts")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario JSON file or builtin scenario name")
        p.add_argument("--samples", type=int, default=None, help="number of sample points")
        p.add_argument("--seed", type=int, default=None, help="sampling seed")
        p.add_argument("--tol", type=float, default=None, help="override every check tolerance")
        p.add_argument("--csv", default=None, metavar="PATH", help="also write per-check rows as CSV")
        p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")

    common(sub.add_parser("check", help="run the checks of a scenario"))
    st = sub.add_parser("solve-toda", help="solve a toda_solve scenario and write the grid")
    common(st)
    st.add_argument("--output", default=None, help="grid output path (overrides the scenario)")
    sub.add_parser("list-scenarios", help="list builtin scenarios and available checks")
    return ap


def _emit(report, args, out) -> None:
    if not args.no_timestamp:
        report.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    out.write(report.to_json() + "\n")
    if args.csv:
        Path(args.csv).write_text(report.to_csv())


def _error(kind: str, message: str, err, extra=None) -> None:
    payload = {"error": kind, "message": message}
    if extra:
        payload.update(extra)
    err.write(json.dumps(payload, sort_keys=True) + "\n")


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = _parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in sorted(BUILTINS):
            out.write(f"{name}\t{BUILTINS[name]['kind']}\t{BUILTINS[name]['description']}\n")
        for kind in sorted(CHECKS):
            out.write(f"checks[{kind}]: {', '.join(sorted(CHECKS[kind]))}\n")
        return EXIT_OK
    try:
        cfg = load_scenario(args.config)
        if args.command == "solve-toda" and cfg.get("kind") != "toda_solve":
            raise ConfigError("solve-toda needs a scenario of kind 'toda_solve'")
        S = validate(cfg, args.samples, args.seed, args.tol)
    except ConfigError as e:
        _error("config", str(e), err)
        return EXIT_CONFIG
    except MathError as e:
        _error("math", str(e), err, {"check": e.check, "point": e.point})
        return EXIT_MATH
    try:
        if args.command == "solve-toda":
            report, res = run_toda(S)
            path = args.output or S.toda.get("output")
            if path:
                write_grid(res.field, path)
                report.extra["output"] = str(path)
            _emit(report, args, out)
            if not res.converged:
                return EXIT_NONCONVERGED
        else:
            report = run_checks(S)
            _emit(report, args, out)
    except MathError as e:
        _error("math", str(e), err, {"check": e.check, "point": e.point})
        return EXIT_MATH
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
