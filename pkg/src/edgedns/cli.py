"""Command line: ``edgedns run | calibrate | fixtures verify``.

Exit codes: 0 success, 1 configuration error, 2 a threshold or fixture check failed.
"""

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .bench import render_details, render_table, run_all
from .calibrate import calibrate, read_targets
from .config import BenchConfig, dumps, load
from .errors import ConfigError, Infeasible
from .fixtures import verify_corpus

OK, CONFIG_ERROR, THRESHOLD_FAILED = 0, 1, 2


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _counts(text):
    try:
        values = sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a comma-separated list of integers") from None
    if not values or values[0] < 1:
        raise argparse.ArgumentTypeError("counts must be positive")
    return tuple(values)


def check_expectations(stats, targets, tolerance):
    """Compare means with a target table; returns (lines, all_ok)."""
    by_key = {(st.scenario, st.query_count): st.mean_ms for st in stats}
    lines, ok = [], True
    for row in targets:
        for count, want in sorted(row.means.items()):
            got = by_key.get((row.scenario, count))
            if got is None:
                continue
            err = abs(got - want) / want
            passed = err <= Fraction(tolerance)
            ok &= passed
            lines.append(f"{'PASS' if passed else 'FAIL'} {row.scenario} n={count} "
                         f"mean={float(got):.4f} target={float(want):.2f} error={float(err) * 100:.2f}%")
    return lines, ok


def cmd_run(args):
    cfg = load(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    scenarios = cfg.scenarios
    if args.scenario:
        unknown = set(args.scenario) - {s.name for s in scenarios}
        if unknown:
            raise ConfigError([(None, "scenario", f"not in config: {', '.join(sorted(unknown))}")],
                              args.config)
        scenarios = [s for s in scenarios if s.name in args.scenario]
    counts = args.counts or cfg.counts
    stats, traces = run_all(scenarios, counts, jobs=args.jobs, trace=args.trace is not None)

    rendered = render_table(stats)
    if args.csv:
        _write(args.csv, rendered.csv)
    if args.table or not (args.csv or args.trace):
        sys.stdout.write(rendered.text)
    if args.details:
        sys.stdout.write(render_details(stats))
    if args.trace is not None:
        lines = []
        for name, i, trace in traces:
            lines.append(f"# scenario {name} run {i}")
            lines.extend(trace)
        _write(args.trace, "\n".join(lines) + "\n")

    if args.expect:
        report, ok = check_expectations(stats, read_targets(Path(args.expect).read_text()), args.tolerance)
        for line in report:
            print(line, file=sys.stderr)
        if not ok:
            return THRESHOLD_FAILED
    return OK


def cmd_calibrate(args):
    targets = read_targets(Path(args.targets).read_text())
    if args.rows:
        wanted = set(args.rows.split(","))
        targets = [t for t in targets if t.scenario in wanted]
    base = load(args.base) if args.base else BenchConfig()
    result = calibrate(targets, base)
    header = ["calibrated against " + Path(args.targets).name] + result.report()
    _write(args.out, dumps(result.config, header))
    for line in result.report():
        print(line, file=sys.stderr)
    return OK


def cmd_fixtures(args):
    results = verify_corpus(args.dir)
    failed = 0
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        failed += not r.ok
        print(f"{status} {r.kind}/{r.name}" + (f": {r.detail}" if r.detail else ""))
    print(f"{len(results) - failed}/{len(results)} fixtures passed")
    return OK if results and not failed else THRESHOLD_FAILED


def build_parser():
    p = argparse.ArgumentParser(prog="edgedns", description="Edge DNS interception simulator and bench.")
    p.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate the scenarios of a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, help="override every scenario's seed")
    run.add_argument("--counts", type=_counts, help="comma-separated query counts (default from config)")
    run.add_argument("--scenario", action="append", help="run only this scenario (repeatable)")
    run.add_argument("--trace", nargs="?", const="-", help="write the event trace to PATH (default stdout)")
    run.add_argument("--csv", help="write the table as CSV to PATH ('-' for stdout)")
    run.add_argument("--table", action="store_true", help="print the text table")
    run.add_argument("--details", action="store_true", help="print median/p95/cache counters per run")
    run.add_argument("--jobs", type=int, default=1, help="run scenarios in this many processes")
    run.add_argument("--expect", help="target CSV; exit 2 if any mean is off by more than --tolerance")
    run.add_argument("--tolerance", type=float, default=0.02, help="relative tolerance (default 0.02)")
    run.set_defaults(func=cmd_run)

    cal = sub.add_parser("calibrate", help="fit a config to a table of target means")
    cal.add_argument("--targets", required=True, help="CSV: scenario,resolver,<count>,...")
    cal.add_argument("--rows", help="comma-separated scenario names to fit (default all)")
    cal.add_argument("--base", help="config supplying topology and addressing")
    cal.add_argument("--out", help="write the config here (default stdout)")
    cal.set_defaults(func=cmd_calibrate)

    fx = sub.add_parser("fixtures", help="codec fixture corpus")
    fx_sub = fx.add_subparsers(dest="action", required=True)
    ver = fx_sub.add_parser("verify", help="decode and re-encode every fixture")
    ver.add_argument("--dir", help="corpus root (default: the packaged corpus)")
    ver.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return CONFIG_ERROR
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
