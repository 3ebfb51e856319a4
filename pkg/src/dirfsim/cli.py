"""Command-line interface.

Subcommands: run, compare, estimate, select, sweep (plus presets, which
writes the bundled scenario files). Exit codes: 0 success, 1 validation or
usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace

from . import engine, presets
from .errors import DirfsimError, ScenarioParseError, ScenarioValidationError
from .estimator import ApPositionEstimator
from .geometry import Vec3
from .metrics import emit_report, sig6
from .mobility import MobilityTrace
from .radio import DEFAULT_RATE_TABLE, snr_at, AntennaPattern
from .ranking import SampleSet
from .scenario import (GridLayoutConfig, RoomConfig, Scenario, build_layout,
                       effective_room, load_scenario, scenario_to_yaml)
from .selector import SelectionConfig, run_selection
from .ranking import EstimatorConfig


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="dirfsim",
                description="Directional-AP handoff control plane and simulator")
    p.add_argument("--rate-table", action="store_true",
                   help="print the built-in SNR-to-rate table and exit")
    sub = p.add_subparsers(dest="command")

    run_p = sub.add_parser("run", help="simulate one scenario file")
    run_p.add_argument("scenario")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out-dir", default="out")
    run_p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    run_p.add_argument("--packet-trace", action="store_true")

    cmp_p = sub.add_parser("compare", help="run a scenario in dirf and omrf modes")
    cmp_p.add_argument("scenario_dirf")
    cmp_p.add_argument("scenario_omrf")
    cmp_p.add_argument("--seeds", default=None, help="comma-separated seed list")
    cmp_p.add_argument("--out-dir", default="out")

    est_p = sub.add_parser("estimate", help="estimate the AP position from a sample CSV")
    est_p.add_argument("samples", help="CSV with columns t,x,y,z,snr_db")
    est_p.add_argument("--snr-scale", choices=("linear", "db"), default="linear")
    est_p.add_argument("--learning-rate", type=float, default=0.05)
    est_p.add_argument("--max-iters", type=int, default=5000)

    sel_p = sub.add_parser("select", help="replay a trace CSV against a scenario")
    sel_p.add_argument("trace", help="CSV with columns t,x,y,z")
    sel_p.add_argument("scenario")
    sel_p.add_argument("--seed", type=int, default=None)

    sw_p = sub.add_parser("sweep", help="run a scenario across a parameter sweep")
    sw_p.add_argument("scenario")
    sw_p.add_argument("--vary", required=True,
                      help="field=v1,v2,... (aps, clients, speed, bandwidth, seed, duration)")
    sw_p.add_argument("--seed", type=int, default=None)
    sw_p.add_argument("--out-dir", default="out")
    sw_p.add_argument("--format", choices=("csv", "json", "both"), default="both")

    pre_p = sub.add_parser("presets", help="write the bundled scenario files")
    pre_p.add_argument("--out-dir", default="scenarios")
    return p


def _formats(arg: str):
    return ("csv", "json") if arg == "both" else (arg,)


def _print_rate_table():
    for bw in DEFAULT_RATE_TABLE.bandwidths():
        print(f"# {bw} MHz")
        print("snr_threshold_db,rate_mbps")
        for thr, rate in DEFAULT_RATE_TABLE.steps[bw]:
            print(f"{sig6(thr):g},{sig6(rate):g}")


def _load(path: str, seed_override) -> Scenario:
    sc = load_scenario(path)
    if seed_override is not None:
        sc = replace(sc, seed=seed_override)
    return sc


def _cmd_run(args) -> int:
    sc = _load(args.scenario, args.seed)
    out = engine.run(sc, packet_log=args.packet_trace)
    report, packet_log = (out if args.packet_trace else (out, None))
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "effective_config.yaml"), "w") as fh:
        fh.write(scenario_to_yaml(sc))
    paths = emit_report(report, args.out_dir, formats=_formats(args.format),
                        packet_log=packet_log)
    print(f"mode={report.mode} seed={report.seed} "
          f"throughput_mbps={sig6(report.total_mean_throughput_mbps):g} "
          f"handoffs={report.total_handoffs} retransmitted={report.total_retransmitted}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_compare(args) -> int:
    a = _load(args.scenario_dirf, None)
    b = _load(args.scenario_omrf, None)
    seeds = None
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",") if s]
    result = engine.compare(a, b, seeds=seeds)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "compare.csv")
    with open(path, "w") as fh:
        fh.write("seed,throughput_a_mbps,throughput_b_mbps,ratio\n")
        for row in result.rows:
            fh.write(f"{row.seed},{sig6(row.throughput_a_mbps):g},"
                     f"{sig6(row.throughput_b_mbps):g},{sig6(row.ratio):g}\n")
    print(f"mean_ratio={sig6(result.mean_ratio):g} "
          f"handoffs=({sig6(result.handoffs[0]):g},{sig6(result.handoffs[1]):g}) "
          f"retransmitted=({sig6(result.retransmitted[0]):g},{sig6(result.retransmitted[1]):g})")
    print(f"wrote {path}")
    return 0


def _read_csv(path: str, n_cols: int):
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.reader(fh):
            if not raw or raw[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in raw[:n_cols]])
            except ValueError:
                continue  # header row
    if not rows:
        raise ScenarioParseError(f"{path}: no numeric rows found")
    return rows


def _cmd_estimate(args) -> int:
    rows = _read_csv(args.samples, 5)
    X = [[r[1], r[2], r[3]] for r in rows]
    y = [r[4] for r in rows]
    est = ApPositionEstimator(learning_rate=args.learning_rate,
                              max_iters=args.max_iters, snr_scale=args.snr_scale)
    est.fit(X, y)
    x, yy, z = est.position_
    print(f"estimate: {sig6(x):g} {sig6(yy):g} {sig6(z):g}")
    print(f"final_loss: {sig6(est.loss_):g}  iters: {est.n_iter_}  "
          f"converged: {str(est.converged_).lower()}")
    return 0


def _cmd_select(args) -> int:
    sc = _load(args.scenario, args.seed)
    layout = build_layout(sc)
    rows = _read_csv(args.trace, 4)
    trace = MobilityTrace([r[0] for r in rows],
                          [Vec3(r[1], r[2], r[3]) for r in rows])
    initial = layout.nearest_ap(trace.points[0])
    samples = _synthesize_samples(sc, layout, trace, initial)
    cfg = SelectionConfig(
        mode=sc.selector.mode,
        direction_window_s=sc.selector.direction_window_s,
        estimator=EstimatorConfig(
            learning_rate=sc.estimator.learning_rate,
            max_iters=sc.estimator.max_iters, grad_tol=sc.estimator.grad_tol,
            pair_strategy=sc.estimator.pair_strategy, pair_seed=sc.seed,
            snr_scale=sc.estimator.snr_scale),
        exact_estimation=sc.selector.estimation == "exact")
    result = run_selection(trace, layout, samples, cfg, initial_ap=initial)
    print("t,from,to")
    for d in result.decisions:
        print(f"{sig6(d.time):g},{d.from_ap},{d.to_ap}")
    return 0


def _synthesize_samples(sc: Scenario, layout, trace: MobilityTrace, initial: int):
    """SNR samples along the trace while it stays in the initial AP's cell,
    drawn from the scenario's channel model (the controller's view)."""
    ap = layout.by_id(initial)
    pattern = AntennaPattern.for_ap(ap, back_lobe_db=sc.antenna.back_lobe_db)
    pos_rows, snr_rows = [], []
    for t, p in zip(trace.times, trace.points):
        if layout.nearest_ap(p) != initial:
            break
        pos_rows.append(p.as_tuple())
        snr_rows.append(snr_at(ap, pattern, sc.channel, p))
    if len(pos_rows) < 2:
        return None   # run_selection falls back to the exact anchor
    return SampleSet.from_db(pos_rows, snr_rows, scale=sc.estimator.snr_scale)


_SWEEPABLE = ("aps", "clients", "speed", "bandwidth", "seed", "duration")


def _apply_sweep(sc: Scenario, fieldname: str, value: str) -> Scenario:
    if fieldname == "seed":
        return replace(sc, seed=int(value))
    if fieldname == "bandwidth":
        return replace(sc, bandwidth_mhz=int(value))
    if fieldname == "duration":
        return replace(sc, duration_s=float(value))
    if fieldname == "speed":
        clients = tuple(replace(c, trace=replace(c.trace, speed_mps=float(value)))
                        for c in sc.clients)
        return replace(sc, clients=clients)
    if fieldname == "clients":
        n = int(value)
        if n < 1:
            raise ScenarioValidationError("clients", "sweep count must be >= 1")
        return replace(sc, clients=tuple(sc.clients[0] for _ in range(n)))
    if fieldname == "aps":
        n = int(value)
        rows = 1 if n <= 3 else 2
        cols = math.ceil(n / rows)
        room = effective_room(sc)
        return replace(sc, room=RoomConfig(x=room.x, y=room.y),
                       layout=GridLayoutConfig(rows=rows, cols=cols, spacing_m=None))
    raise ScenarioValidationError("vary", f"unknown sweep field {fieldname!r}; "
                                          f"expected one of {_SWEEPABLE}")


def _cmd_sweep(args) -> int:
    base = _load(args.scenario, args.seed)
    if "=" not in args.vary:
        raise _UsageError("--vary expects field=v1,v2,...")
    fieldname, _, values = args.vary.partition("=")
    fieldname = fieldname.strip()
    value_list = [v.strip() for v in values.split(",") if v.strip()]
    if not value_list:
        raise _UsageError("--vary needs at least one value")
    os.makedirs(args.out_dir, exist_ok=True)
    summary_path = os.path.join(args.out_dir, "sweep.csv")
    lines = ["field,value,total_mean_throughput_mbps,total_handoffs,total_retransmitted"]
    for value in value_list:
        sc = _apply_sweep(base, fieldname, value)
        report = engine.run(sc)
        sub = os.path.join(args.out_dir, f"{fieldname}_{value}")
        emit_report(report, sub, formats=_formats(args.format))
        with open(os.path.join(sub, "effective_config.yaml"), "w") as fh:
            fh.write(scenario_to_yaml(sc))
        thr = sig6(report.total_mean_throughput_mbps)
        lines.append(f"{fieldname},{value},{thr:g},{report.total_handoffs},"
                     f"{report.total_retransmitted}")
        print(f"{fieldname}={value}: throughput_mbps={thr:g} "
              f"handoffs={report.total_handoffs}")
    with open(summary_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {summary_path}")
    return 0


def _cmd_presets(args) -> int:
    for path in presets.write_all(args.out_dir):
        print(f"wrote {path}")
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if args.rate_table:
        _print_rate_table()
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    handlers = {
        "run": _cmd_run, "compare": _cmd_compare, "estimate": _cmd_estimate,
        "select": _cmd_select, "sweep": _cmd_sweep, "presets": _cmd_presets,
    }
    try:
        return handlers[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (ScenarioParseError, ScenarioValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DirfsimError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
