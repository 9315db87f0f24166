"""Command-line front end: batch runs, variant comparisons, budget exploration.

Exit codes: 0 success, 1 constraint infeasible or functional divergence,
2 input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .budget import evaluate_feasibility
from .core import Event
from .dataflow import apply_cdc, build_trigger_pipeline, default_stage_specs, run_pipeline
from .eventio import (
    ConfigError,
    EventFileError,
    GEN_PROFILES,
    RunConfig,
    build_report,
    gen_events,
    load_config,
    parse_events,
    serialize_report,
    write_events,
)
from .reference import oracle_trigger
from .stages import run_stages

NOMINAL_FREQ_MHZ = 360


class InputError(Exception):
    """User-facing input problem; maps to exit code 2."""


def _load_run_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}")
    try:
        return load_config(text)
    except ConfigError as exc:
        raise InputError(f"config {path}: {exc}")


def _load_events(args: argparse.Namespace, run_cfg: RunConfig) -> tuple[list[Event], str]:
    if bool(args.events) == bool(args.gen):
        raise InputError("exactly one of --events FILE or --gen SEED:COUNT:PROFILE is required")
    if args.events:
        try:
            text = Path(args.events).read_text()
        except OSError as exc:
            raise InputError(f"cannot read events {args.events}: {exc}")
        try:
            events = parse_events(text, run_cfg.trigger)
        except EventFileError as exc:
            raise InputError(f"events {args.events}: {exc}")
        return events, f"file {args.events}"
    parts = args.gen.split(":")
    if len(parts) != 3:
        raise InputError("--gen expects SEED:COUNT:PROFILE")
    try:
        seed = int(parts[0])
        count = int(parts[1])
    except ValueError:
        raise InputError(f"--gen seed and count must be integers, got {args.gen!r}")
    profile = parts[2]
    if profile not in GEN_PROFILES:
        raise InputError(f"--gen profile must be one of {GEN_PROFILES}, got {profile!r}")
    if count < 0:
        raise InputError("--gen count must be non-negative")
    return gen_events(seed, count, profile, run_cfg.trigger), f"gen {args.gen}"


def _variants(args: argparse.Namespace, run_cfg: RunConfig) -> tuple[str, str]:
    merge = args.merge or run_cfg.merge_solution
    clean = args.clean or run_cfg.clean_solution
    return merge, clean


def _specs_for(run_cfg: RunConfig, merge: str, clean: str):
    # Config-provided stage overrides are kept; the merging/cleaning timing
    # rows follow the selected solution unless the config overrode them.
    specs = dict(run_cfg.stage_specs)
    baseline = default_stage_specs(run_cfg.merge_solution, run_cfg.clean_solution)
    wanted = default_stage_specs(merge, clean)
    for name in ("merging", "cleaning"):
        if specs[name] == baseline[name]:
            specs[name] = wanted[name]
    return specs


def _simulate(run_cfg: RunConfig, events: Sequence[Event], merge: str, clean: str):
    pipeline = build_trigger_pipeline(
        run_cfg.trigger,
        _specs_for(run_cfg, merge, clean),
        merge_solution=merge,
        clean_solution=clean,
        engine=run_cfg.engine,
    )
    return run_pipeline(pipeline, events, feed_period=run_cfg.engine.feed_period)


def cmd_run(args: argparse.Namespace) -> int:
    run_cfg = _load_run_config(args.config)
    events, source_desc = _load_events(args, run_cfg)
    merge, clean = _variants(args, run_cfg)
    result = _simulate(run_cfg, events, merge, clean)

    divergent = None
    if not args.no_oracle_check:
        for ev, got in zip(events, result.outputs):
            want = oracle_trigger(ev, run_cfg.trigger)
            if tuple(got) != want:
                divergent = ev.event_id
                break

    metrics = result.metrics
    if args.freq != NOMINAL_FREQ_MHZ:
        metrics = apply_cdc(metrics, run_cfg.cdc_overhead_cycles)
    budget = run_cfg.budget_for(args.freq)
    report = evaluate_feasibility(metrics, budget)

    if args.report:
        records = build_report(
            [ev.event_id for ev in events],
            [out for out in result.outputs],
            metrics,
            report,
        )
        Path(args.report).write_text(serialize_report(records))

    print(f"events: {len(events)} ({source_desc})")
    print(f"variants: merge {merge}, clean {clean}")
    print(
        f"latency: {metrics.latency_cycles} cycles  ii: {metrics.ii_cycles} cycles  "
        f"(cdc +{metrics.cdc_overhead_cycles})"
    )
    print(
        f"budget @{budget.frequency_mhz} MHz: latency {budget.latency_budget_cycles}, "
        f"ii {budget.ii_budget_cycles} -> "
        f"{'feasible' if report.feasible else 'INFEASIBLE'} "
        f"(slack {report.latency_slack_cycles}/{report.ii_slack_cycles})"
    )
    if args.no_oracle_check:
        print("oracle check: skipped")
    elif divergent is None:
        print(f"oracle check: ok ({len(events)} events)")
    else:
        print(f"oracle check: DIVERGENT at event {divergent}")
    if args.report:
        print(f"report: {args.report}")

    if divergent is not None or not report.feasible:
        return 1
    return 0


def _outputs_for_variant(
    run_cfg: RunConfig, events: Sequence[Event], merge: str, clean: str
):
    return _simulate(run_cfg, events, merge, clean)


def _minimize_divergent_event(event: Event, diverges) -> Event:
    """Greedy shrink: drop valid particles while the divergence persists."""
    from .core import PAD_PARTICLE

    current = event
    improved = True
    while improved:
        improved = False
        for slot, p in enumerate(current.particles):
            if not p.valid:
                continue
            particles = list(current.particles)
            particles[slot] = PAD_PARTICLE
            candidate = Event(current.event_id, tuple(particles))
            if diverges(candidate):
                current = candidate
                improved = True
    return current


def cmd_compare(args: argparse.Namespace) -> int:
    run_cfg = _load_run_config(args.config)
    events, source_desc = _load_events(args, run_cfg)
    if args.dimension == "merge":
        variants = [("A", run_cfg.clean_solution), ("B", run_cfg.clean_solution)]
        rows = default_stage_specs("A", "A")["merging"], default_stage_specs("B", "B")["merging"]
        title = "merging step"
    else:
        variants = [(run_cfg.merge_solution, "A"), (run_cfg.merge_solution, "B")]
        rows = default_stage_specs("A", "A")["cleaning"], default_stage_specs("B", "B")["cleaning"]
        title = "tau cleaning step"

    results = [_outputs_for_variant(run_cfg, events, m, c) for m, c in variants]

    for ev, out_a, out_b in zip(events, results[0].outputs, results[1].outputs):
        if tuple(out_a) != tuple(out_b):
            print(f"functional divergence at event {ev.event_id}; minimizing", file=sys.stderr)

            def diverges(candidate: Event) -> bool:
                a = run_stages(candidate, run_cfg.trigger, *variants[0])
                b = run_stages(candidate, run_cfg.trigger, *variants[1])
                return a != b

            minimized = _minimize_divergent_event(ev, diverges)
            sys.stderr.write("counterexample event:\n")
            sys.stderr.write(write_events([minimized]))
            return 1

    spec_a, spec_b = rows
    print(f"{title} ({source_desc}, {len(events)} events)")
    print(f"{'':28s}{'solution A':>12s}{'solution B':>12s}")
    print(f"{'stage latency, cycles':28s}{spec_a.latency_cycles:>12d}{spec_b.latency_cycles:>12d}")
    print(f"{'stage ii, cycles':28s}{spec_a.ii_cycles:>12d}{spec_b.ii_cycles:>12d}")
    print(
        f"{'measured latency, cycles':28s}"
        f"{results[0].metrics.latency_cycles:>12d}{results[1].metrics.latency_cycles:>12d}"
    )
    print(
        f"{'measured ii, cycles':28s}"
        f"{results[0].metrics.ii_cycles:>12d}{results[1].metrics.ii_cycles:>12d}"
    )
    print(f"functional outputs identical across {len(events)} events")
    return 0


def cmd_explore(args: argparse.Namespace) -> int:
    run_cfg = _load_run_config(args.config)
    freqs = [f.strip() for f in args.freqs.split(",") if f.strip()]
    if not freqs:
        raise InputError("--freqs needs a non-empty comma-separated list of MHz values")
    try:
        freq_values = [int(f) for f in freqs]
    except ValueError:
        raise InputError(f"--freqs values must be integers, got {args.freqs!r}")
    if any(f <= 0 for f in freq_values):
        raise InputError("--freqs values must be positive")

    if args.events or args.gen:
        events, source_desc = _load_events(args, run_cfg)
    else:
        events = gen_events(1, 50, "clustered", run_cfg.trigger)
        source_desc = "gen 1:50:clustered"
    merge, clean = run_cfg.merge_solution, run_cfg.clean_solution
    base = _simulate(run_cfg, events, merge, clean).metrics

    columns = []
    for freq in freq_values:
        metrics = base
        if freq != NOMINAL_FREQ_MHZ:
            metrics = apply_cdc(base, run_cfg.cdc_overhead_cycles)
        budget = run_cfg.budget_for(freq)
        columns.append((freq, metrics, evaluate_feasibility(metrics, budget)))

    print(f"operating point exploration ({source_desc}, merge {merge}, clean {clean})")
    header = f"{'':32s}" + "".join(f"{f'{freq} MHz':>12s}" for freq, _, _ in columns)
    print(header)

    def row(label: str, values) -> None:
        print(f"{label:32s}" + "".join(f"{v:>12}" for v in values))

    row("latency budget, cycles", [c[2].budget.latency_budget_cycles for c in columns])
    row("ii budget, cycles", [c[2].budget.ii_budget_cycles for c in columns])
    row("achieved latency, cycles", [c[1].latency_cycles for c in columns])
    row("achieved ii, cycles", [c[1].ii_cycles for c in columns])
    row("cdc overhead, cycles", [c[1].cdc_overhead_cycles for c in columns])
    row("feasible", ["yes" if c[2].feasible else "no" for c in columns])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taupipe",
        description="Tau trigger pipeline: functional model, dataflow timing, budgets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_source(p: argparse.ArgumentParser) -> None:
        p.add_argument("--events", metavar="FILE", help="event file to process")
        p.add_argument("--gen", metavar="SEED:COUNT:PROFILE", help="generate events")
        p.add_argument("--config", metavar="FILE", help="config file (key = value)")

    p_run = sub.add_parser("run", help="run the pipeline and report metrics")
    add_source(p_run)
    p_run.add_argument("--merge", choices=("A", "B"), help="merge solution override")
    p_run.add_argument("--clean", choices=("A", "B"), help="clean solution override")
    p_run.add_argument("--freq", type=int, choices=(360, 300), default=360,
                       help="operating frequency in MHz")
    p_run.add_argument("--report", metavar="FILE", help="write the machine-readable report")
    p_run.add_argument("--no-oracle-check", action="store_true",
                       help="skip the per-event reference cross-check")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare both solutions of one step")
    add_source(p_cmp)
    p_cmp.add_argument("--dimension", choices=("merge", "clean"), required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_exp = sub.add_parser("explore", help="per-frequency budgets and feasibility")
    add_source(p_exp)
    p_exp.add_argument("--freqs", required=True, metavar="LIST",
                       help="comma-separated MHz values, e.g. 360,300")
    p_exp.set_defaults(func=cmd_explore)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
