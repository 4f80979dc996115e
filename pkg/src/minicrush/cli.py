"""``minicrush`` command-line front end.

Exit codes: 0 success, 1 runtime error, 2 usage error, 3 I/O error,
4 a ``--check`` (or ``kat``) found failures or anomalies.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    Battery,
    aggregate,
    aggregate_csv,
    export_plot_data,
    headroom,
    headroom_verdict,
    profile_diff,
    summary_table,
)
from .battery import (
    BudgetExceededError,
    ConfigError,
    PRESETS,
    resolve_battery,
    run_battery,
)
from .families import ClassificationPolicy, DEFAULT_POLICY, Classification
from .generators import GeneratorKind, generate_words, stream_from_seed
from .harness import (
    BatteryReport,
    CampaignError,
    HarnessConfig,
    SchemaVersionError,
    dumps_reports,
    is_report_file,
    load_campaign_config,
    load_reports,
    run_campaign,
)
from .kat import KatFormatError, diff_streams, golden_vectors, load_kat_file, verify_kat

log = logging.getLogger("minicrush")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3, 4
DESK_BUDGET = 2 ** 30
_GEN_CHUNK = 1 << 20


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _kind(text: str) -> GeneratorKind:
    try:
        return GeneratorKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _policy(args) -> ClassificationPolicy:
    return ClassificationPolicy.strict() if getattr(args, "strict", False) else DEFAULT_POLICY


def _open_out(path, binary=False):
    if path is None or path == "-":
        return sys.stdout.buffer if binary else sys.stdout, False
    return open(path, "wb" if binary else "w"), True


def _write_text(path, text: str) -> None:
    fh, close = _open_out(path)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    if args.count > args.budget:
        raise BudgetExceededError(f"count {args.count} exceeds the budget ceiling {args.budget}")
    state = stream_from_seed(args.kind, args.seed)
    fh, close = _open_out(args.output, binary=True)
    try:
        left = args.count
        while left:
            n = min(left, _GEN_CHUNK)
            words = generate_words(state, n)
            if args.format == "raw-le":
                fh.write(words.astype("<u4").tobytes())
            elif args.format == "hex":
                fh.write(("".join(f"{w:08x}\n" for w in words.tolist())).encode())
            else:
                fh.write(("".join(f"{w / 4294967296.0!r}\n" for w in words.tolist())).encode())
            left -= n
        fh.flush()
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _result_lines(results) -> str:
    lines = [f"{'test':<28}{'statistic':>18}{'p-value':>24}  class"]
    for r in results:
        lines.append(f"{r.id.label:<28}{r.statistic:>18.6g}{r.p_value:>24.17g}  {r.classification.value}")
    return "\n".join(lines)


def cmd_battery(args) -> int:
    config = resolve_battery(args.battery).with_budget(args.budget)
    if args.strict:
        from dataclasses import replace
        config = replace(config, policy=ClassificationPolicy.strict())
    results = run_battery(stream_from_seed(args.kind, args.seed), config)
    report = BatteryReport(args.kind, args.seed, results, config.fingerprint())
    if args.output:
        _write_text(args.output, dumps_reports([report]))
    print(_result_lines(results))
    bad = sum(r.classification is not Classification.PASS for r in results)
    print(f"\n{bad} of {len(results)} statistics outside the pass band")
    return EXIT_CHECK if args.check and bad else EXIT_OK


def cmd_campaign(args) -> int:
    spec = load_campaign_config(args.config)
    h = spec.harness
    battery = h.battery.with_budget(args.budget)
    harness = HarnessConfig(h.kind, args.streams or h.stream_count,
                            h.master_seed if args.master_seed is None else args.master_seed,
                            battery, args.parallelism or h.parallelism)
    output = args.output or spec.output
    if output is None:
        raise UsageError("no output path: give -o or set output in [campaign]")
    log.info("campaign: %s, %d streams, battery %s", harness.kind.value, harness.stream_count,
             battery.fingerprint()[:12])
    try:
        reports = run_campaign(harness)
    except CampaignError as exc:
        partial = Path(str(output) + ".partial")
        partial.write_text(dumps_reports(exc.partial, args.timing))
        log.error("%s; %d completed streams saved to %s", exc, len(exc.partial), partial)
        return EXIT_ERROR
    Path(output).write_text(dumps_reports(reports, args.timing))
    agg = aggregate(reports)
    strict = aggregate(reports, ClassificationPolicy.strict())
    print(summary_table([agg], [strict]))
    print(f"\nreport written to {output}")
    return EXIT_OK


def _load_groups(args):
    groups = []
    for path in args.reports:
        reports = load_reports(path)
        if not reports:
            raise ValueError(f"{path}: report file holds no streams")
        groups.append(reports)
    if args.testu01:
        from .testu01_import import load_testu01_dir
        for d in args.testu01:
            groups.append(load_testu01_dir(d, args.generator))
    if not groups:
        raise UsageError("no input: give report files or --testu01 directories")
    return groups


def cmd_aggregate(args) -> int:
    groups = _load_groups(args)
    policy = _policy(args)
    aggs = [aggregate(g, policy) for g in groups]
    stricts = [aggregate(g, ClassificationPolicy.strict()) for g in groups]
    if args.csv:
        _write_text(args.csv, aggregate_csv(aggs))
    for i, agg in enumerate(aggs):
        suffix = f".{i}" if len(aggs) > 1 else ""
        if args.histogram:
            export_plot_data(agg, "histogram", args.histogram + suffix)
        if args.profile:
            export_plot_data(agg, "profile", args.profile + suffix, args.rate_cap)
    print(summary_table(aggs, stricts))
    if args.check and any(a.avg_failures_suspicious > 0 for a in aggs):
        return EXIT_CHECK
    return EXIT_OK


def cmd_diff(args) -> int:
    a_report, b_report = is_report_file(args.a), is_report_file(args.b)
    if a_report != b_report:
        raise UsageError("diff needs two report files or two raw word dumps")
    if not a_report:
        d = diff_streams(args.a, args.b)
        print(d)
        return EXIT_CHECK if args.check and not d.equal else EXIT_OK
    a = aggregate(load_reports(args.a))
    b = aggregate(load_reports(args.b))
    diff = profile_diff(a, b, args.threshold, args.min_streams)
    print(f"a: {a.generator} ({a.total_streams} streams)  b: {b.generator} ({b.total_streams} streams)")
    print(diff.summary() if not diff.is_empty else "profiles identical")
    if args.output:
        rows = ["test\trate_a\trate_b\tdelta\tanomaly"]
        for t, delta in diff.rate_deltas.items():
            rows.append(f"{t.label}\t{a.per_test_failure_rate.get(t, 0.0)!r}\t"
                        f"{b.per_test_failure_rate.get(t, 0.0)!r}\t{delta!r}\t{int(t in diff.anomalies)}")
        _write_text(args.output, "\n".join(rows) + "\n")
    flagged = diff.anomalies or diff.only_a or diff.only_b
    return EXIT_CHECK if args.check and flagged else EXIT_OK


def cmd_kat(args) -> int:
    vectors = []
    if args.all or not args.file:
        vectors += golden_vectors()
    for f in args.file or ():
        vectors += load_kat_file(f)
    failed = 0
    for v in vectors:
        r = verify_kat(v)
        failed += not r.passed
        if not r.passed or args.verbose:
            print(r)
    print(f"{len(vectors) - failed}/{len(vectors)} known-answer vectors passed")
    return EXIT_CHECK if failed else EXIT_OK


def _configure_logging(verbosity: int) -> None:
    # own handler, rebound per call so embedding callers see output on their stderr
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("minicrush: %(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING - 10 * min(verbosity, 2))
    log.propagate = False


def cmd_headroom(args) -> int:
    print(headroom_verdict(args.state_bits, args.battery))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minicrush", description="Desk-scale PRNG test battery.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def budget(sp):
        sp.add_argument("--budget", type=_positive_int, default=DESK_BUDGET,
                        help="per-stream word ceiling, checked before work starts (default 2**30)")

    g = sub.add_parser("gen", help="emit raw generator output")
    g.add_argument("kind", type=_kind)
    g.add_argument("--seed", type=_seed, required=True)
    g.add_argument("--count", type=_positive_int, required=True)
    g.add_argument("--format", choices=("raw-le", "hex", "unit-reals"), default="raw-le")
    g.add_argument("-o", "--output", help="file (default stdout)")
    budget(g)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("battery", help="run the battery on one stream")
    b.add_argument("kind", type=_kind)
    b.add_argument("--seed", type=_seed, required=True)
    b.add_argument("--battery", default="desk", help=f"preset ({', '.join(PRESETS)}) or TOML path")
    b.add_argument("--strict", action="store_true", help="only extreme p-values count as failures")
    b.add_argument("-o", "--output", help="write a one-stream report file")
    b.add_argument("--check", action="store_true", help="exit 4 if any statistic fails")
    budget(b)
    b.set_defaults(func=cmd_battery)

    c = sub.add_parser("campaign", help="run a multi-stream campaign from a TOML file")
    c.add_argument("config")
    c.add_argument("-o", "--output")
    c.add_argument("--streams", type=_positive_int)
    c.add_argument("--master-seed", type=_seed)
    c.add_argument("--parallelism", type=_positive_int)
    c.add_argument("--timing", action="store_true", help="record wall time in report metadata")
    budget(c)
    c.set_defaults(func=cmd_campaign)

    a = sub.add_parser("aggregate", help="summarise campaign reports")
    a.add_argument("reports", nargs="*")
    a.add_argument("--testu01", action="append", metavar="DIR",
                   help="directory of TestU01 outputs, one file per stream")
    a.add_argument("--generator", help="label for --testu01 input")
    a.add_argument("--strict", action="store_true")
    a.add_argument("--csv")
    a.add_argument("--histogram", help="TSV of failures-per-stream counts")
    a.add_argument("--profile", help="TSV of per-test failure rates")
    a.add_argument("--rate-cap", type=float)
    a.add_argument("--check", action="store_true", help="exit 4 if any stream fails a test")
    a.set_defaults(func=cmd_aggregate)

    d = sub.add_parser("diff", help="compare two report files or two raw word dumps")
    d.add_argument("a")
    d.add_argument("b")
    d.add_argument("--threshold", type=float, default=0.05)
    d.add_argument("--min-streams", type=int, default=30)
    d.add_argument("-o", "--output", help="TSV of per-test rate deltas")
    d.add_argument("--check", action="store_true", help="exit 4 on any difference")
    d.set_defaults(func=cmd_diff)

    k = sub.add_parser("kat", help="verify known-answer vectors")
    k.add_argument("--all", action="store_true", help="the shipped golden vectors (default)")
    k.add_argument("--file", action="append", help="extra vector file")
    k.set_defaults(func=cmd_kat)

    h = sub.add_parser("headroom", help="state bits beyond a battery's threshold")
    h.add_argument("state_bits", type=_positive_int)
    h.add_argument("battery", nargs="?", default="BigCrush", type=Battery.parse,
                   help="SmallCrush, Crush or BigCrush (default)")
    h.set_defaults(func=cmd_headroom)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"minicrush: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SchemaVersionError, KatFormatError) as exc:
        print(f"minicrush: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, BudgetExceededError, ValueError, RuntimeError) as exc:
        print(f"minicrush: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except BrokenPipeError:  # pragma: no cover
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
