"""Command-line orchestration: gen, run, load, analyze, plot, verify.

Exit codes: 0 ok, 1 usage, 2 environment/privilege, 3 measurement
integrity, 4 verification failure. Every run echoes its seed into the
outputs; --dry-run never mutates OS state.
"""

import argparse
import json
import os
import sys

from . import analysis, datagen, harness, isolate, load, report
from .clock import ClockKind, ClockUnavailableError, make_clock
from .datagen import Schema, StreamSpec
from .engine import EngineError, QueryId, evaluate_oracle, make_view
from .harness import (
    TraceFormatError,
    TrialIntegrityError,
    TrialSpec,
    export_trace,
    import_trace,
    run_trial,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENVIRONMENT = 2
EXIT_INTEGRITY = 3
EXIT_VERIFY = 4

_QUERIES = {q.value: q for q in QueryId}
_SCHEMAS = {s.value: s for s in Schema}
_SCENARIOS = {s.value: s for s in isolate.ScenarioLabel}
_CLOCKS = {"monotonic": ClockKind.MONOTONIC_NS, "tsc": ClockKind.CYCLE_COUNTER}
_SCHEMA_FOR_QUERY = {
    QueryId.C1: Schema.FINANCE,
    QueryId.AXF: Schema.FINANCE,
    QueryId.PSP: Schema.FINANCE,
    QueryId.Q1: Schema.LINEITEM,
    QueryId.Q6: Schema.LINEITEM,
    QueryId.Q11A: Schema.PARTSUPP_SUPPLIER,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="silt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="write a synthetic stream to CSV")
    p.add_argument("--schema", choices=sorted(_SCHEMAS), required=True)
    p.add_argument("--base", type=int, required=True, help="base tuple count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run one measurement trial under a scenario")
    p.add_argument("--query", choices=sorted(_QUERIES), required=True)
    p.add_argument("--scenario", choices=sorted(_SCENARIOS), default="no-load")
    p.add_argument("--clock", choices=sorted(_CLOCKS), default="monotonic")
    p.add_argument("--no-fence", action="store_true", help="unserialized cycle-counter reads")
    p.add_argument("--base", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--csv", help="read the stream from a CSV file instead of generating")
    p.add_argument("--batch", type=int, default=1, help="tuples per timed batch (N)")
    p.add_argument("--drop-first", type=int, default=0)
    p.add_argument("--cpu", type=int, default=None, help="target cpu (default: highest)")
    p.add_argument("--fifo-priority", type=int, default=80)
    p.add_argument("--tenant-kinds", default="bsearch,matmul,compress,memthrash,fileio,highfreq-timer")
    p.add_argument("--tenant-cpus", choices=["others", "all"], default="others")
    p.add_argument("--no-tenants", action="store_true")
    p.add_argument("--out", required=True, help="trace file path")
    p.add_argument("--report", help="scenario verification report (JSON)")
    p.add_argument("--tenant-report", help="tenant throughput report (JSON)")
    p.add_argument("--dry-run", action="store_true")

    p = sub.add_parser("load", help="run tenant workloads standalone")
    p.add_argument("--kinds", default="bsearch")
    p.add_argument("--cpus", required=True, help="comma-separated cpu list")
    p.add_argument("--seconds", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("analyze", help="summaries and scenario comparison from traces")
    p.add_argument("--trace", action="append", required=True, help="trace file (repeatable)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--export-deltas", action="store_true",
                   help="also write <trace>.deltas.csv, one delta per line")
    p.add_argument("--tenant-report", action="append", default=[],
                   help="label=path pairs for tenant impact")

    p = sub.add_parser("plot", help="render SVG charts")
    p.add_argument("--mode", choices=["timeseries", "spread"], default="timeseries")
    p.add_argument("--trace", help="trace file (timeseries mode)")
    p.add_argument("--summary", action="append", default=[],
                   help="label=summary.json pairs (spread mode)")
    p.add_argument("--out", required=True)
    p.add_argument("--downsample", type=int, default=50_000)
    p.add_argument("--window", type=int, default=1000)
    p.add_argument("--points-csv", help="also write index,delta,class rows")

    p = sub.add_parser("verify", help="per-prefix oracle equivalence check")
    p.add_argument("--query", choices=sorted(_QUERIES), required=True)
    p.add_argument("--events", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    return parser


def _cmd_gen(args) -> int:
    spec = StreamSpec(
        schema=_SCHEMAS[args.schema],
        base_count=args.base,
        seed=args.seed,
        iterations=args.iterations,
    )
    datagen.write_csv(datagen.generate(spec), args.out)
    print(f"wrote {spec.total_events} events to {args.out} (seed {args.seed})")
    return EXIT_OK


def _parse_kinds(text):
    kinds = []
    for name in text.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            kinds.append(load.WorkloadKind(name))
        except ValueError:
            raise SystemExit(EXIT_USAGE) from None
    return kinds


def _cmd_run(args) -> int:
    query = _QUERIES[args.query]
    schema = _SCHEMA_FOR_QUERY[query]
    if args.csv:
        trial = TrialSpec(
            query_id=query, csv_path=args.csv, csv_schema=schema,
            batch=args.batch, drop_first=args.drop_first,
        )
    else:
        trial = TrialSpec(
            query_id=query,
            stream=StreamSpec(schema=schema, base_count=args.base, seed=args.seed,
                              iterations=args.iterations),
            batch=args.batch,
            drop_first=args.drop_first,
        )
    cpus = sorted(os.sched_getaffinity(0))
    target = args.cpu if args.cpu is not None else cpus[-1]
    label = _SCENARIOS[args.scenario]
    spec = isolate.ScenarioSpec.for_label(label, target, args.fifo_priority)

    if args.dry_run:
        applied = isolate.apply_scenario(spec, dry_run=True)
        print(f"dry run: scenario {label.value} on cpu {target}; intended writes:")
        for line in applied.planned_writes:
            print(f"  {line}")
        if not applied.planned_writes:
            print("  (pinning only)")
        return EXIT_OK

    clock = make_clock(_CLOCKS[args.clock], fenced=not args.no_fence)
    tenant_handle = None
    applied = isolate.apply_scenario(spec)
    try:
        verification = isolate.verify_scenario(applied)
        if label.with_load and not args.no_tenants:
            tenant_cpus = set(cpus) if args.tenant_cpus == "all" else set(cpus) - {target}
            if tenant_cpus:
                tenant_handle = load.start_tenants(
                    _parse_kinds(args.tenant_kinds), tenant_cpus, seed=args.seed
                )
        result = run_trial(trial, clock, scenario_label=label.value)
    finally:
        tenant_report = load.stop_tenants(tenant_handle) if tenant_handle else None
        isolate.teardown(applied)

    export_trace(result.trace, args.out)
    print(f"trace: {len(result.trace)} deltas -> {args.out}")
    for name, outcome in applied.achieved.items():
        print(f"  {name}: {outcome.status} ({outcome.detail})")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(
                {"applied": applied.report(), "verification": verification.to_json(),
                 "seed": args.seed},
                fh, indent=2,
            )
        print(f"scenario report -> {args.report}")
    if args.tenant_report and tenant_report is not None:
        with open(args.tenant_report, "w", encoding="utf-8") as fh:
            json.dump(tenant_report.to_json(), fh, indent=2)
        print(f"tenant report -> {args.tenant_report}")
    return EXIT_OK


def _cmd_load(args) -> int:
    import time

    kinds = _parse_kinds(args.kinds)
    cpus = {int(c) for c in args.cpus.split(",") if c.strip()}
    handle = load.start_tenants(kinds, cpus, seed=args.seed)
    time.sleep(args.seconds)
    tenant_report = load.stop_tenants(handle)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(tenant_report.to_json(), fh, indent=2)
    print(f"tenant report -> {args.out}")
    return EXIT_OK


def _summary_path(out_dir, trace_path):
    base = os.path.basename(trace_path)
    return os.path.join(out_dir, base + ".summary.json")


def _cmd_analyze(args) -> int:
    summaries = {}
    os.makedirs(args.out_dir, exist_ok=True)
    for path in args.trace:
        trace = import_trace(path)
        summary = analysis.spreads(trace.deltas)
        label = trace.host.get("scenario") or os.path.basename(path)
        summaries[label] = summary
        out_path = _summary_path(args.out_dir, path)
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(
                {**summary.to_json(), "scenario": label, "trial": trace.trial},
                fh, indent=2,
            )
        if args.export_deltas:
            from .harness import export_deltas_csv

            export_deltas_csv(
                trace, os.path.join(args.out_dir, os.path.basename(path) + ".deltas.csv")
            )
        print(f"{label}: max_spread {float(summary.max_spread):.4g} "
              f"min_spread {float(summary.min_spread):.4g} -> {out_path}")
    if len(summaries) >= 2:
        table = analysis.compare_scenarios(summaries)
        out_path = os.path.join(args.out_dir, "comparison.json")
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(table.to_json(), fh, indent=2)
        print(f"comparison table -> {out_path}")
    if args.tenant_report:
        reports = {}
        for pair in args.tenant_report:
            label, _, path = pair.partition("=")
            if not path:
                raise SystemExit(EXIT_USAGE)
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
            reports[label] = _tenant_report_from_json(data)
        table = analysis.tenant_impact(reports)
        out_path = os.path.join(args.out_dir, "tenant_impact.json")
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(table.to_json(), fh, indent=2)
        print(f"tenant impact table -> {out_path}")
    return EXIT_OK


def _tenant_report_from_json(data) -> load.TenantReport:
    cells = {}
    for key, cell in data["cells"].items():
        kind, _, cpu = key.partition("@cpu")
        tc = load.TenantCell(
            ops=cell["ops"], wall_s=cell["wall_s"], failed=cell.get("failed", ""),
            extras=cell.get("extras", {}),
        )
        cells[(kind, int(cpu))] = tc
    return load.TenantReport(cells=cells, seed=data.get("seed", 0), config=load.LoadConfig())


def _cmd_plot(args) -> int:
    if args.mode == "timeseries":
        if not args.trace:
            raise SystemExit(EXIT_USAGE)
        trace = import_trace(args.trace)
        classification = analysis.classify_outliers(trace.deltas)
        window = min(args.window, len(trace.deltas))
        series = analysis.sliding_mean(trace.deltas, window)
        unit = "ticks" if trace.clock_kind is ClockKind.CYCLE_COUNTER else "ns"
        spec = report.PlotSpec(
            deltas=trace.deltas,
            classification=classification,
            mean_series=series,
            mean_window=window,
            downsample_threshold=args.downsample,
            unit_label=unit,
            title=f"{trace.trial.get('query', '?')} / {trace.host.get('scenario', '?')}",
        )
        report.render_timeseries(spec, args.out)
        if args.points_csv:
            report.write_points_csv(trace.deltas, classification, args.points_csv)
    else:
        if not args.summary:
            raise SystemExit(EXIT_USAGE)
        from fractions import Fraction

        summaries = {}
        for pair in args.summary:
            label, _, path = pair.partition("=")
            if not path:
                raise SystemExit(EXIT_USAGE)
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
            summaries[label] = analysis.SpreadSummary(
                n=data["n"], min=data["min"], max=data["max"],
                median=Fraction(data["median"]).limit_denominator(10**9),
                max_spread=Fraction(data["max_spread"]).limit_denominator(10**9),
                min_spread=Fraction(data["min_spread"]).limit_denominator(10**9),
                q_low=data["q_low"], q_high=data["q_high"],
            )
        report.render_spread_chart(summaries, args.out)
    print(f"chart -> {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    query = _QUERIES[args.query]
    schema = _SCHEMA_FOR_QUERY[query]
    events = datagen.generate(
        StreamSpec(schema=schema, base_count=args.events, seed=args.seed)
    )
    view = make_view(query, tree_seed=args.seed)
    fault_at = len(events) // 2 if args.inject_fault else None
    for i, event in enumerate(events, 1):
        view.apply(event)
        incremental = view.snapshot()
        if fault_at is not None and i > fault_at:
            incremental = _corrupt(incremental)
        expected = evaluate_oracle(query, events[:i])
        if incremental != expected:
            print(f"divergence at prefix {i}: incremental {incremental!r} "
                  f"!= oracle {expected!r}", file=sys.stderr)
            return EXIT_VERIFY
    print(f"{query.value}: incremental == oracle over all {len(events)} prefixes "
          f"(seed {args.seed})")
    return EXIT_OK


def _corrupt(snapshot):
    if isinstance(snapshot, int):
        return snapshot + 1
    snapshot = dict(snapshot)
    snapshot[object()] = 1
    return snapshot


_COMMANDS = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "load": _cmd_load,
    "analyze": _cmd_analyze,
    "plot": _cmd_plot,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (ValueError, harness.TrialSpecError, datagen.CsvFormatError) as exc:
        print(f"silt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ClockUnavailableError, PermissionError) as exc:
        print(f"silt: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except (TrialIntegrityError, TraceFormatError, EngineError) as exc:
        print(f"silt: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except FileNotFoundError as exc:
        print(f"silt: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
