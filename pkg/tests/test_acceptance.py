"""End-to-end acceptance suite.

One test per acceptance criterion, ordered cheap-to-expensive; each prints a
single PASS/FAIL line with the measured numbers behind the verdict.  The
long-running deadlock soak is last so everything else reports first.
"""
import random
import subprocess
import time

import pytest

from mcnoc.engine import (
    KIND_APPROACH,
    KIND_CHAIN,
    KIND_UNICAST,
    DeadlockError,
    SimConfig,
    adversarial_ring_fixture,
    plan_templates,
    run,
)
from mcnoc.partition import (
    basic_partition_cost,
    dpm_partition,
    exact_optimal_partition,
)
from mcnoc.routing import PlannerKind, make_plan, plan_mp, planned_cost
from mcnoc.topology import Mesh, channel_dependency_graph
from mcnoc.workload import TraceEvent, TrafficConfig, generate_synthetic
from mcnoc import metrics

MESH8 = Mesh(8, 8)
RANGES = [(2, 5), (4, 8), (7, 10), (10, 16)]
PACKET_SIZE = 4


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"criterion {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def _random_instance(rng: random.Random, mesh: Mesh, lo: int, hi: int):
    src = rng.randrange(mesh.node_count)
    k = rng.randint(lo, hi)
    pool = [n for n in range(mesh.node_count) if n != src]
    dests = {mesh.coord_of(d) for d in rng.sample(pool, k)}
    return mesh.coord_of(src), dests


@pytest.fixture(scope="module")
def dpm_suite():
    """10,000 partitioned instances on 8x8, 2,500 per destination range."""
    rng = random.Random(20260826)
    out = []
    t0 = time.perf_counter()
    for lo, hi in RANGES:
        for _ in range(2500):
            src, dests = _random_instance(rng, MESH8, lo, hi)
            out.append((src, dests, dpm_partition(dests, src, MESH8)))
    return out, time.perf_counter() - t0


def test_criterion_01_cover_and_disjointness(dpm_suite):
    suite, elapsed = dpm_suite
    bad = 0
    for _, dests, final in suite:
        seen: set = set()
        for cs in final.sets:
            if cs.members & seen:
                bad += 1
                break
            seen |= cs.members
        else:
            if seen != dests:
                bad += 1
    ok = bad == 0 and elapsed < 60.0
    _verdict("1", ok, f"{len(suite) - bad}/{len(suite)} instances cover "
                      f"destinations disjointly, partitioned in {elapsed:.1f}s")
    assert bad == 0
    assert elapsed < 60.0


def test_criterion_02_oracle_sandwich():
    rng = random.Random(7)
    t0 = time.perf_counter()
    violations, gaps = 0, []
    for lo, hi in RANGES:
        for _ in range(1000):
            src, dests = _random_instance(rng, MESH8, lo, hi)
            greedy = dpm_partition(dests, src, MESH8)
            opt_cost, _ = exact_optimal_partition(dests, src, MESH8)
            base = basic_partition_cost(dests, src, MESH8)
            if not opt_cost <= greedy.total_cost <= base:
                violations += 1
            gaps.append(greedy.total_cost - opt_cost)
    elapsed = time.perf_counter() - t0
    mean_gap = sum(gaps) / len(gaps)
    ok = violations == 0 and elapsed < 300.0
    _verdict("2", ok, f"0 sandwich violations in {len(gaps)} instances, "
                      f"mean optimality gap {mean_gap:.4f} hops, {elapsed:.1f}s")
    assert violations == 0
    assert elapsed < 300.0


def test_criterion_03_merge_iteration_bound(dpm_suite):
    suite, _ = dpm_suite
    worst = max(final.merge_iterations for _, _, final in suite)
    _verdict("3", worst <= 4, f"max merge iterations {worst} over {len(suite)} instances")
    assert worst <= 4


def test_criterion_04_mean_hop_ordering():
    rng = random.Random(5)
    t0 = time.perf_counter()
    totals = {p: 0 for p in (PlannerKind.DPM, PlannerKind.MP, PlannerKind.NMP)}
    n = 1000
    for _ in range(n):
        src, dests = _random_instance(rng, MESH8, 10, 16)
        for p in totals:
            totals[p] += planned_cost(make_plan(p, dests, src, MESH8), MESH8)
    elapsed = time.perf_counter() - t0
    dpm = totals[PlannerKind.DPM] / n
    mp = totals[PlannerKind.MP] / n
    nmp = totals[PlannerKind.NMP] / n
    bar = 0.98 * min(mp, nmp)
    ok = dpm <= bar and elapsed < 300.0
    _verdict("4", ok, f"mean planned hops dpm {dpm:.2f}, mp {mp:.2f}, nmp {nmp:.2f}; "
                      f"required dpm <= {bar:.2f}, {elapsed:.1f}s")
    # Greedy nearest-first chaining (nmp) edges out representative-based
    # dual-path at the densest range; see the hop-ordering analysis in the
    # repository notes.  Kept red rather than weakening the baseline.
    assert dpm <= bar, (
        f"dpm mean {dpm:.2f} misses the 2% margin against min(mp, nmp) = "
        f"{min(mp, nmp):.2f}; dpm does lead at ranges 2-5, 4-8 and 7-10 "
        f"and beats mp everywhere"
    )
    assert elapsed < 300.0


def _manhattan(mesh: Mesh, a: int, b: int) -> int:
    ca, cb = mesh.coord_of(a), mesh.coord_of(b)
    return abs(ca[0] - cb[0]) + abs(ca[1] - cb[1])


def _predict_deliveries(ev: TraceEvent, cfg: SimConfig, mesh: Mesh):
    """Expected (destination, tail-arrival) pairs on an idle network."""
    size = cfg.packet_size
    out: list[tuple[int, int]] = []

    def chain_walk(t0: int, start: int, labels: list[int]) -> None:
        hops, prev = 0, start
        for i, c in enumerate(labels):
            cls = 0 if c > prev else 1
            hops += _manhattan(mesh, prev, c)
            t_del = t0 + 2 * hops + size
            out.append((c, t_del))
            rest = labels[i + 1:]
            if rest:
                nxt_cls = 0 if rest[0] > c else 1
                if nxt_cls != cls:
                    # subnet switch: worm is absorbed and re-injected
                    chain_walk(t_del + 1, c, rest)
                    return
            prev = c

    for j, (kind, steer, chain, children) in enumerate(
            plan_templates(ev.src, ev.dsts, cfg, mesh)):
        t0 = ev.cycle + j * size
        if kind == KIND_UNICAST:
            out.append((steer, t0 + 2 * _manhattan(mesh, ev.src, steer) + size))
        elif kind == KIND_CHAIN:
            chain_walk(t0, ev.src, list(chain))
        else:
            t_rep = t0 + 2 * _manhattan(mesh, ev.src, steer) + size
            out.append((steer, t_rep))
            for ci, (ck, labels) in enumerate(children):
                t_child = t_rep + 1 + ci * size
                if ck == KIND_UNICAST:
                    out.append((labels[0],
                                t_child + 2 * _manhattan(mesh, steer, labels[0]) + size))
                else:
                    chain_walk(t_child, steer, list(labels))
    return sorted(out)


def test_criterion_05_zero_load_latency_exact():
    rng = random.Random(42)
    t0 = time.perf_counter()
    mismatches, checked = 0, 0
    for planner in PlannerKind:
        events, cycle = [], 0
        for _ in range(25):
            src = rng.randrange(64)
            k = rng.randint(2, 6)
            dsts = tuple(sorted(rng.sample([x for x in range(64) if x != src], k)))
            events.append(TraceEvent(cycle, src, dsts))
            cycle += 300
        cfg = SimConfig(mesh=MESH8, planner=planner, measure_cycles=cycle + 300, seed=0)
        report = run(cfg, events)
        got: dict[int, list[tuple[int, int]]] = {}
        for rec in report.records:
            got.setdefault(rec.generated // 300, []).append(
                (rec.destination, rec.tail_arrival))
        for i, ev in enumerate(events):
            checked += len(ev.dsts)
            if sorted(got.get(i, [])) != _predict_deliveries(ev, cfg, MESH8):
                mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 120.0
    _verdict("5", ok, f"{checked} deliveries across all 5 planners match the "
                      f"hop+serialization model exactly, {elapsed:.1f}s")
    assert mismatches == 0
    assert elapsed < 120.0


def _loaded_report(planner: PlannerKind, rate: float, dest_range: tuple[int, int],
                   mesh: Mesh = MESH8, warmup: int = 1000, measure: int = 6000,
                   seed: int = 3):
    cfg = SimConfig(mesh=mesh, planner=planner, warmup_cycles=warmup,
                    measure_cycles=measure, seed=seed, record_deliveries=False,
                    source_queue_limit=4, injection_rate=rate, dest_range=dest_range)
    traffic = TrafficConfig(injection_rate=rate, multicast_fraction=0.10,
                            dest_range=dest_range)
    events = generate_synthetic(traffic, mesh, seed, warmup + measure)
    return run(cfg, events)


def test_criterion_06_saturation_ordering():
    ladder = [0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08]
    t0 = time.perf_counter()
    idx = {}
    for planner in (PlannerKind.MU, PlannerKind.MP, PlannerKind.NMP, PlannerKind.DPM):
        sw = metrics.sweep(ladder, lambda r: _loaded_report(planner, r, (10, 16)),
                           planner.value)
        idx[planner] = sw.saturation_index if sw.saturation_index is not None else len(ladder)
    elapsed = time.perf_counter() - t0
    # ordering with one ladder step of tolerance
    ok = (idx[PlannerKind.DPM] >= idx[PlannerKind.NMP] - 1
          and idx[PlannerKind.NMP] >= idx[PlannerKind.MP] - 1
          and idx[PlannerKind.MP] >= idx[PlannerKind.MU] - 1)
    sat = {p.value: (ladder[i] if i < len(ladder) else f">{ladder[-1]}")
           for p, i in idx.items()}
    _verdict("6", ok, f"saturation rates {sat}, {elapsed:.0f}s")
    assert ok, f"saturation ordering violated: {sat}"


def test_criterion_07_energy_improvement_monotone():
    ladder = [0.005, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12]
    t0 = time.perf_counter()
    improvements = []
    for dest_range in RANGES:
        sw = metrics.sweep(ladder, lambda r: _loaded_report(PlannerKind.MU, r, dest_range),
                           "mu")
        sat = sw.saturation_rate if sw.saturation_rate is not None else ladder[-1]
        mu = _loaded_report(PlannerKind.MU, sat, dest_range)
        dpm = _loaded_report(PlannerKind.DPM, sat, dest_range)
        per_mu = mu.energy / mu.delivered
        per_dpm = dpm.energy / dpm.delivered
        improvements.append(1.0 - per_dpm / per_mu)
    elapsed = time.perf_counter() - t0
    monotone = all(b > a for a, b in zip(improvements, improvements[1:]))
    spread = improvements[-1] - improvements[0]
    ok = monotone and spread >= 0.02
    pretty = ", ".join(f"{r[0]}-{r[1]}: {i:.1%}" for r, i in zip(RANGES, improvements))
    _verdict("7", ok, f"energy improvement vs mu at mu saturation {pretty}, "
                      f"spread {spread:.1%}, {elapsed:.0f}s")
    assert monotone, improvements
    assert spread >= 0.02


def test_criterion_08a_dependency_graph_acyclic():
    sizes = [(2, 2), (3, 3), (4, 4), (5, 3), (6, 6), (8, 8)]
    cyclic = [s for s in sizes if channel_dependency_graph(Mesh(*s)).witness]
    _verdict("8a", not cyclic, f"channel dependency graph acyclic on {len(sizes)} "
                               f"meshes up to 8x8")
    assert not cyclic, cyclic


def test_criterion_08c_watchdog_sensitivity():
    mesh = Mesh(4, 4)
    cfg = SimConfig(mesh=mesh, measure_cycles=2000, watchdog_threshold=200,
                    watchdog_interval=50, seed=0)
    with pytest.raises(DeadlockError):
        run(cfg, [], fixed=adversarial_ring_fixture(mesh))
    _verdict("8c", True, "adversarial four-worm ring trips the watchdog")


def test_criterion_09_byte_identical_outputs(tmp_path):
    outs = []
    for tag in ("a", "b"):
        csv_path = tmp_path / f"{tag}.csv"
        json_path = tmp_path / f"{tag}.json"
        cmd = ["mcnoc", "sim", "--mesh", "4x4", "--algo", "dpm", "--rate", "0.05",
               "--dest-range", "2-5", "--seed", "11", "--warmup", "200",
               "--measure", "2000", "--csv-out", str(csv_path),
               "--json-out", str(json_path)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append((csv_path.read_bytes(), json_path.read_bytes(), proc.stdout))
    ok = outs[0] == outs[1]
    _verdict("9", ok, "repeated (config, seed) run is byte-identical in csv, "
                      "json and stdout")
    assert ok


def test_criterion_10_four_group_split_fidelity():
    mesh = Mesh(6, 6)
    source = (3, 2)  # label 15
    dest_labels = [25, 33, 35, 29, 30, 32, 11, 9, 7, 2]
    dests = {mesh.coord_of(d) for d in dest_labels}
    plan = plan_mp(dests, source, mesh)
    groups = []
    for entry in plan.entries:
        chain = entry.high_chain or entry.low_chain
        groups.append([mesh.label_of(c) for c in chain])
    assert len(groups) == 4
    h1, h2, l1, l2 = groups
    ok = (h1 == [25, 33, 35] and h2 == [29, 30, 32]
          and sorted(l1 + l2, reverse=True) == [11, 9, 7, 2]
          and l1 == sorted(l1, reverse=True) and l2 == sorted(l2, reverse=True))
    _verdict("10", ok, f"h1 {h1}, h2 {h2}, l1 {l1}, l2 {l2}: high groups and "
                       f"orderings match the published example; low groups "
                       f"checked as membership plus descending order")
    assert h1 == [25, 33, 35]
    assert h2 == [29, 30, 32]
    assert sorted(l1 + l2, reverse=True) == [11, 9, 7, 2]
    assert l1 == sorted(l1, reverse=True)
    assert l2 == sorted(l2, reverse=True)


def test_criterion_08b_deadlock_free_soak():
    # 2x the measured saturation rate (3x zero-load latency crossing at 0.2)
    # for this mesh and workload; ten million cycles, watchdog armed throughout
    mesh = Mesh(3, 3)
    rate, dest_range = 0.4, (2, 4)
    horizon = 10_000_000
    cfg = SimConfig(mesh=mesh, planner=PlannerKind.DPM, warmup_cycles=horizon,
                    measure_cycles=1000, seed=17, record_deliveries=False,
                    source_queue_limit=4, injection_rate=rate, dest_range=dest_range)
    traffic = TrafficConfig(injection_rate=rate, multicast_fraction=0.10,
                            dest_range=dest_range)
    t0 = time.perf_counter()
    report = run(cfg, generate_synthetic(traffic, mesh, 17, horizon + 1000))
    elapsed = time.perf_counter() - t0
    _verdict("8b", True, f"{horizon + 1000} jammed cycles at rate {rate} with zero "
                         f"watchdog trips, {report.dropped_at_source} source drops, "
                         f"{elapsed:.0f}s")
