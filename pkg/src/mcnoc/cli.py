"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 invariant failure,
3 deadlock (watchdog trip).
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import engine, metrics, workload
from .partition import (CostModel, basic_partition_cost, dpm_partition,
                        exact_optimal_partition)
from .routing import ApproachMode, PlannerKind, make_plan, planned_cost
from .topology import (Mesh, TopologyError, channel_dependency_graph,
                       xy_approach_relation)
from .workload import TrafficConfig, WorkloadError

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_DEADLOCK = 0, 1, 2, 3


def _parse_mesh(s: str) -> Mesh:
    try:
        w, h = s.lower().split("x")
        return Mesh(int(w), int(h))
    except (ValueError, TopologyError) as e:
        raise argparse.ArgumentTypeError(f"bad mesh {s!r}: {e}")


def _parse_coord(s: str) -> tuple[int, int]:
    try:
        x, y = s.split(",")
        return (int(x), int(y))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad coordinate {s!r}, expected x,y")


def _parse_range(s: str) -> tuple[int, int]:
    try:
        lo, hi = s.split("-")
        return (int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {s!r}, expected lo-hi")


def _parse_algos(s: str) -> list[PlannerKind]:
    try:
        return [PlannerKind(a.strip()) for a in s.split(",") if a.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _apply_config_file(args: argparse.Namespace, argv: list[str],
                       parser: argparse.ArgumentParser) -> None:
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as f:
            overrides = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        parser.error(f"cannot read config file: {e}")
    for key, val in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            parser.error(f"unknown config key {key!r}")
        # an explicitly given command-line flag wins over the config file
        if f"--{attr.replace('_', '-')}" in argv:
            continue
        if attr == "mesh":
            val = _parse_mesh(val)
        elif attr == "dest_range":
            val = _parse_range(val)
        elif attr == "algo":
            val = PlannerKind(val)
        elif attr == "algos":
            val = _parse_algos(val)
        setattr(args, attr, val)


def _sim_config(args: argparse.Namespace, algo: PlannerKind,
                rate: float) -> engine.SimConfig:
    return engine.SimConfig(
        mesh=args.mesh,
        planner=algo,
        approach=ApproachMode.XY if args.approach == "xy" else ApproachMode.HAMILTONIAN,
        packet_size=args.packet_size,
        buffer_depth=args.buffer_depth,
        watchdog_threshold=args.watchdog_threshold,
        warmup_cycles=args.warmup,
        measure_cycles=args.measure,
        drain_cycles=args.drain,
        seed=args.seed,
        source_queue_limit=args.source_queue_limit,
        record_deliveries=False,
        injection_rate=rate,
        dest_range=args.dest_range,
    )


def _events_for(args: argparse.Namespace, rate: float):
    if getattr(args, "trace", None):
        return workload.load_trace(args.trace, args.mesh)
    cfg = TrafficConfig(injection_rate=rate,
                        multicast_fraction=args.multicast_fraction,
                        dest_range=args.dest_range)
    cfg.validate(args.mesh)
    horizon = args.warmup + args.measure
    return workload.generate_synthetic(cfg, args.mesh, args.seed, horizon)


def cmd_plan(args: argparse.Namespace) -> int:
    mesh = args.mesh
    dests = set(args.dests)
    for d in dests | {args.src}:
        mesh.check_bounds(d)
    plan = make_plan(args.algo, dests, args.src, mesh)
    out = {
        "algo": plan.planner.value,
        "source": list(plan.source),
        "planned_hops": planned_cost(plan, mesh),
        "entries": [
            {
                "representative": list(e.representative),
                "mode": e.mode.value,
                "approach": [list(c) for c in e.approach],
                "high_chain": [list(c) for c in e.high_chain],
                "low_chain": [list(c) for c in e.low_chain],
                "greedy_chain": [list(c) for c in e.greedy_chain],
                "unicast_fanout": [list(c) for c in e.unicast_fanout],
            }
            for e in plan.entries
        ],
    }
    if args.algo is PlannerKind.DPM:
        final = dpm_partition(dests, args.src, mesh)
        out["partition_cost"] = final.total_cost
        out["merge_iterations"] = final.merge_iterations
        out["partition"] = [
            {"representative": list(c.representative), "mode": c.mode.value,
             "cost": c.cost, "members": sorted(list(m) for m in c.members)}
            for c in final.sets
        ]
        if args.oracle:
            opt_cost, _ = exact_optimal_partition(dests, args.src, mesh)
            out["oracle_cost"] = opt_cost
            out["gap"] = final.total_cost - opt_cost
    json.dump(out, sys.stdout, indent=2)
    print()
    if args.oracle and "gap" in out:
        print(f"gap: {out['gap']}")
    return EXIT_OK


def cmd_sim(args: argparse.Namespace) -> int:
    cfg = _sim_config(args, args.algo, args.rate)
    try:
        report = engine.run(cfg, _events_for(args, args.rate))
    except engine.DeadlockError as e:
        json.dump(e.report, sys.stderr, indent=2)
        print(file=sys.stderr)
        return EXIT_DEADLOCK
    except AssertionError as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    if args.json_out:
        metrics.write_json(args.json_out, report.to_json_dict())
    if args.csv_out:
        metrics.write_csv(args.csv_out, [report])
    json.dump(report.to_row(), sys.stdout, indent=2)
    print()
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.rates:
        print("error: empty rate ladder", file=sys.stderr)
        return EXIT_USAGE
    algos = args.algos
    all_reports: list[metrics.StatsReport] = []
    by_algo: dict[str, list[metrics.StatsReport]] = {}
    try:
        for algo in algos:
            def run_at(rate: float, algo=algo) -> metrics.StatsReport:
                cfg = _sim_config(args, algo, rate)
                return engine.run(cfg, _events_for(args, rate))

            result = metrics.sweep(args.rates, run_at, algo.value)
            by_algo[algo.value] = result.reports
            all_reports.extend(result.reports)
            sat = result.saturation_rate
            print(f"{algo.value}: zero_load_latency={result.zero_load_latency:.4f} "
                  f"saturation_rate={sat if sat is not None else 'none'}")
    except engine.DeadlockError as e:
        json.dump(e.report, sys.stderr, indent=2)
        print(file=sys.stderr)
        return EXIT_DEADLOCK
    if args.csv_out:
        metrics.write_csv(args.csv_out, all_reports)
    baseline = "mu" if "mu" in by_algo else algos[0].value
    comparisons = {}
    for i, rate in enumerate(args.rates):
        per_rate = {name: reps[i] for name, reps in by_algo.items()}
        comparisons[f"{rate}"] = metrics.compare(per_rate, baseline)
    if args.json_out:
        metrics.write_json(args.json_out, {
            "baseline": baseline,
            "rates": list(args.rates),
            "comparisons": comparisons,
            "rows": [r.to_row() for r in all_reports],
        })
    json.dump({"baseline": baseline, "comparisons": comparisons}, sys.stdout, indent=2)
    print()
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    mesh = args.mesh
    failures = 0

    def verdict(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        mark = "pass" if ok else "FAIL"
        print(f"{mark}  {name}{(': ' + detail) if detail else ''}")
        failures += 0 if ok else 1

    labels = sorted(mesh.label_of(mesh.coord_of(l)) for l in range(mesh.node_count))
    verdict("labeling bijection", labels == list(range(mesh.node_count)))

    cdg = channel_dependency_graph(mesh)
    verdict("subnet routing dependency graph acyclic", cdg.acyclic,
            f"{cdg.edge_count} dependency edges")
    if args.approach == "xy":
        cdg_xy = channel_dependency_graph(mesh, xy_approach_relation(mesh))
        verdict("subnet+xy-approach dependency graph", cdg_xy.acyclic,
                "acyclic" if cdg_xy.acyclic else f"cycle {cdg_xy.witness}")

    rng = random.Random(args.seed)
    nodes = [mesh.coord_of(l) for l in range(mesh.node_count)]
    lo, hi = args.dest_range
    hi = min(hi, mesh.node_count - 1)
    lo = min(lo, hi)
    ok_sandwich = ok_iters = True
    for _ in range(args.instances):
        src = rng.choice(nodes)
        pool = [n for n in nodes if n != src]
        dests = set(rng.sample(pool, rng.randint(lo, hi)))
        final = dpm_partition(dests, src, mesh)
        opt, _ = exact_optimal_partition(dests, src, mesh)
        basic = basic_partition_cost(dests, src, mesh)
        if not opt <= final.total_cost <= basic:
            ok_sandwich = False
        if final.merge_iterations > 4:
            ok_iters = False
    verdict(f"partition cost sandwich on {args.instances} random instances", ok_sandwich)
    verdict("merge loop terminates within 4 iterations", ok_iters)

    return EXIT_OK if failures == 0 else EXIT_INVARIANT


def cmd_validate_trace(args: argparse.Namespace) -> int:
    try:
        events = workload.load_trace(args.trace, args.mesh)
    except WorkloadError as e:
        print(f"invalid trace: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(f"ok: {len(events)} events")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcnoc",
                                     description="multicast route planning and "
                                                 "wormhole simulation on 2D meshes")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_mesh(p: argparse.ArgumentParser) -> None:
        p.add_argument("--mesh", type=_parse_mesh, default=Mesh(8, 8),
                       help="mesh size as WxH (default 8x8)")

    p = sub.add_parser("plan", help="plan one multicast and print the route tree")
    add_mesh(p)
    p.add_argument("--src", type=_parse_coord, required=True)
    p.add_argument("--dests", type=_parse_coord, nargs="+", required=True)
    p.add_argument("--algo", type=PlannerKind, default=PlannerKind.DPM,
                   metavar="{dpm,mp,nmp,dp,mu}")
    p.add_argument("--oracle", action="store_true",
                   help="also run the exact partition search and print the gap")
    p.set_defaults(func=cmd_plan)

    def add_sim_args(p: argparse.ArgumentParser) -> None:
        add_mesh(p)
        p.add_argument("--config", help="JSON file with defaults for these flags")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--multicast-fraction", type=float, default=0.10)
        p.add_argument("--dest-range", type=_parse_range, default=(10, 16),
                       metavar="LO-HI")
        p.add_argument("--trace", help="JSON-lines trace file instead of synthetic traffic")
        p.add_argument("--packet-size", type=int, default=4)
        p.add_argument("--buffer-depth", type=int, default=4)
        p.add_argument("--watchdog-threshold", type=int, default=10_000)
        p.add_argument("--warmup", type=int, default=2_000)
        p.add_argument("--measure", type=int, default=20_000)
        p.add_argument("--drain", type=int, default=50_000)
        p.add_argument("--source-queue-limit", type=int, default=None)
        p.add_argument("--approach", choices=["hamiltonian", "xy"],
                       default="hamiltonian",
                       help="routing of approach legs to representatives")
        p.add_argument("--csv-out")
        p.add_argument("--json-out")

    p = sub.add_parser("sim", help="simulate one operating point")
    add_sim_args(p)
    p.add_argument("--algo", type=PlannerKind, default=PlannerKind.DPM,
                   metavar="{dpm,mp,nmp,dp,mu}")
    p.add_argument("--rate", type=float, required=True,
                   help="packet generation probability per node per cycle")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("sweep", help="simulate a rate ladder for one or more planners")
    add_sim_args(p)
    p.add_argument("--algos", type=_parse_algos, default=[PlannerKind.DPM],
                   metavar="dpm,mp,nmp,dp,mu")
    p.add_argument("--rates", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="run structural and partition invariants")
    add_mesh(p)
    p.add_argument("--approach", choices=["hamiltonian", "xy"], default="hamiltonian")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--dest-range", type=_parse_range, default=(10, 16), metavar="LO-HI")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("validate-trace", help="validate a JSON-lines trace file")
    add_mesh(p)
    p.add_argument("trace")
    p.set_defaults(func=cmd_validate_trace)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    if hasattr(args, "config"):
        _apply_config_file(args, argv, parser)
    try:
        return args.func(args)
    except (WorkloadError, TopologyError, engine.ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
