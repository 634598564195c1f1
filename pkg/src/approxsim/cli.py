"""Command-line entry point: ``approxsim {run,sweep,report,parse,footprint}``.

Exit codes: 0 success, 1 usage error, 2 simulator abort, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict

from . import harness
from .directives import DirectiveError, parse_directive, unparse
from .metrics import footprint_per_thread_tables

EXIT_OK, EXIT_USAGE, EXIT_ABORT, EXIT_IO = 0, 1, 2, 3

_UNITS = {"": 1, "b": 1, "kb": 10 ** 3, "mb": 10 ** 6, "gb": 10 ** 9, "tb": 10 ** 12,
          "kib": 2 ** 10, "mib": 2 ** 20, "gib": 2 ** 30, "tib": 2 ** 40}
_QTY = re.compile(r"^\s*(\d+)(?:\s*(?:\^|\*\*)\s*(\d+))?\s*([a-zA-Z]*)\s*$")


def parse_quantity(text: str) -> int:
    """Integer with optional power and size suffix: ``2^27``, ``2**20``, ``16GiB``, ``512MB``."""
    m = _QTY.match(text)
    if not m:
        raise ValueError(f"not a quantity: {text!r}")
    base, exp, unit = m.groups()
    unit = unit.lower()
    if unit not in _UNITS:
        raise ValueError(f"unknown unit {unit!r} in {text!r}")
    value = int(base) ** int(exp) if exp else int(base)
    return value * _UNITS[unit]


def format_percent(value: float) -> str:
    return f"{value:.6f}".rstrip("0").rstrip(".") + "%"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="approxsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one configuration against its baseline")
    r.add_argument("benchmark", nargs="?")
    r.add_argument("directive", nargs="?", default="")
    r.add_argument("--config", help="JSON file describing one point")
    r.add_argument("--ipt", type=int, dest="items_per_thread")
    r.add_argument("--teams", type=int, dest="num_teams")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="also write the record as CSV")

    s = sub.add_parser("sweep", help="run a Cartesian sweep from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, default=1)

    rep = sub.add_parser("report", help="summarize a records file")
    rep.add_argument("records")
    rep.add_argument("--max-error", type=float, default=0.10)
    rep.add_argument("--out")

    ps = sub.add_parser("parse", help="check a directive and print its canonical form")
    ps.add_argument("directive")

    fp = sub.add_parser("footprint", help="memory taken by per-thread memo tables")
    fp.add_argument("threads")
    fp.add_argument("entries")
    fp.add_argument("entry_bytes")
    fp.add_argument("device_bytes")
    return p


def _cmd_run(args) -> int:
    point = {}
    if args.config:
        with open(args.config) as fh:
            point = json.load(fh)
    bench = args.benchmark or point.get("benchmark")
    if not bench:
        raise harness.ConfigError("run needs a benchmark")
    directive = args.directive or point.get("directive", "")
    ipt = args.items_per_thread or point.get("items_per_thread")
    teams = args.num_teams or point.get("num_teams")
    seed = args.seed if args.seed is not None else point.get("seed", 0)
    if bench not in harness.BENCHMARKS:
        raise harness.ConfigError(f"unknown benchmark {bench!r}")
    rec = harness.run_trial(bench, directive, seed=seed, trial=point.get("trial", 0),
                            items_per_thread=ipt, num_teams=teams,
                            benchmark_params=point.get("benchmark_params"))
    print(json.dumps({k: harness._json_num(v) for k, v in asdict(rec).items()},
                     indent=2, sort_keys=True))
    if args.out:
        harness._atomic_write(args.out, harness.records_csv([rec]))
    return EXIT_OK if rec.ok else EXIT_ABORT


def _cmd_sweep(args) -> int:
    cfg = harness.SweepConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs < 1:
        raise harness.ConfigError("--jobs must be >= 1")
    recs = harness.run_sweep(cfg, args.out, jobs=args.jobs,
                             log=lambda m: print(m, file=sys.stderr))
    failed = sum(not r.ok for r in recs)
    print(f"{len(recs)} records, {failed} failed -> {args.out or cfg.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_report(args) -> int:
    recs = harness.load_records(args.records)
    text = harness.report_json(harness.build_report(recs, args.max_error))
    if args.out:
        harness._atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_parse(args) -> int:
    try:
        spec = parse_directive(args.directive)
    except DirectiveError as e:
        print(f"error[{e.kind.value}]: {e}", file=sys.stderr)
        print(f"  {args.directive}", file=sys.stderr)
        print("  " + " " * len(args.directive.encode()[:e.offset].decode(errors="ignore")) + "^",
              file=sys.stderr)
        return EXIT_USAGE
    print(unparse(spec))
    return EXIT_OK


def _cmd_footprint(args) -> int:
    vals = [parse_quantity(v) for v in (args.threads, args.entries, args.entry_bytes,
                                        args.device_bytes)]
    print(format_percent(footprint_per_thread_tables(*vals)))
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "report": _cmd_report,
             "parse": _cmd_parse, "footprint": _cmd_footprint}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except OSError as e:
        print(f"approxsim: {e}", file=sys.stderr)
        return EXIT_IO
    except (harness.KernelAborted, harness.SimtFault) as e:
        print(f"approxsim: simulator abort: {e}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, json.JSONDecodeError) as e:
        print(f"approxsim: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
