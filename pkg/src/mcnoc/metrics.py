"""Latency/hop/throughput accounting, the activity-based energy proxy, and
saturation-sweep analysis.

The energy proxy is a weighted sum of flit-event counters (link traversals,
buffer writes/reads, crossbar passes).  Weights are unitless and
configurable; only relative comparisons between planners are meaningful.

Saturation is detected operationally: the smallest injection rate whose
average per-delivery latency exceeds `saturation_factor` (default 3x) times
the zero-load latency, where zero-load latency is measured at the lowest
ladder rate.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class DeliveryRecord:
    packet_id: int
    source: int
    destination: int
    generated: int
    head_arrival: int
    tail_arrival: int
    hops: int


@dataclass(frozen=True)
class EnergyWeights:
    link: float = 1.0
    buffer_write: float = 1.0
    buffer_read: float = 0.5
    crossbar: float = 0.7


@dataclass
class EnergyCounters:
    link_traversals: int = 0
    buffer_writes: int = 0
    buffer_reads: int = 0
    crossbar_traversals: int = 0

    def total(self, w: EnergyWeights) -> float:
        return (self.link_traversals * w.link
                + self.buffer_writes * w.buffer_write
                + self.buffer_reads * w.buffer_read
                + self.crossbar_traversals * w.crossbar)


@dataclass
class StatsReport:
    config_hash: str
    seed: int
    planner: str
    injection_rate: float
    dest_range: tuple[int, int] | None
    measure_cycles: int
    delivered: int                      # per-destination deliveries, measured phase
    packets_completed: int              # logical packets fully delivered
    avg_delivery_latency: float | None  # None marks "no deliveries", never NaN
    avg_packet_latency: float | None    # last-delivery latency per logical packet
    accepted_throughput: float          # delivered flits / node / cycle
    total_hops: int
    energy: float
    counters: EnergyCounters
    incomplete_packets: int = 0
    dropped_at_source: int = 0
    records: list[DeliveryRecord] = field(default_factory=list)

    def to_row(self) -> dict:
        rng = f"{self.dest_range[0]}-{self.dest_range[1]}" if self.dest_range else ""
        return {
            "planner": self.planner,
            "rate": self.injection_rate,
            "dest_range": rng,
            "delivered": self.delivered,
            "packets_completed": self.packets_completed,
            "avg_delivery_latency": _fmt(self.avg_delivery_latency),
            "avg_packet_latency": _fmt(self.avg_packet_latency),
            "accepted_throughput": f"{self.accepted_throughput:.8f}",
            "total_hops": self.total_hops,
            "energy": f"{self.energy:.4f}",
            "incomplete_packets": self.incomplete_packets,
            "dropped_at_source": self.dropped_at_source,
            "seed": self.seed,
            "config_hash": self.config_hash,
        }

    def to_json_dict(self) -> dict:
        d = self.to_row()
        d["counters"] = asdict(self.counters)
        return d


def _fmt(v: float | None) -> str:
    return "" if v is None else f"{v:.6f}"


def config_digest(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()[:16]


def finalize(
    *,
    config_hash: str,
    seed: int,
    planner: str,
    injection_rate: float,
    dest_range: tuple[int, int] | None,
    measure_cycles: int,
    node_count: int,
    packet_size: int,
    delivery_count: int,
    latency_sum: int,
    hops_sum: int,
    packet_count: int,
    packet_latency_sum: int,
    counters: EnergyCounters,
    weights: EnergyWeights,
    incomplete_packets: int = 0,
    dropped_at_source: int = 0,
    records: list[DeliveryRecord] | None = None,
) -> StatsReport:
    """Fold measurement-phase accumulators into a report; empty runs are
    marked with None latencies rather than NaN."""
    avg_d = latency_sum / delivery_count if delivery_count else None
    avg_p = packet_latency_sum / packet_count if packet_count else None
    thr = (delivery_count * packet_size / (node_count * measure_cycles)
           if measure_cycles else 0.0)
    return StatsReport(
        config_hash=config_hash, seed=seed, planner=planner,
        injection_rate=injection_rate, dest_range=dest_range,
        measure_cycles=measure_cycles,
        delivered=delivery_count, packets_completed=packet_count,
        avg_delivery_latency=avg_d, avg_packet_latency=avg_p,
        accepted_throughput=thr, total_hops=hops_sum,
        energy=counters.total(weights), counters=counters,
        incomplete_packets=incomplete_packets, dropped_at_source=dropped_at_source,
        records=records or [],
    )


@dataclass
class SweepResult:
    planner: str
    rates: list[float]
    reports: list[StatsReport]
    zero_load_latency: float | None
    saturation_rate: float | None       # None when never saturated on the ladder
    saturation_index: int | None


def sweep(rates: Sequence[float], run_at_rate: Callable[[float], StatsReport],
          planner: str, saturation_factor: float = 3.0) -> SweepResult:
    """Run one report per ladder rate and locate the saturation crossing."""
    if not rates:
        raise MetricsError("empty rate ladder")
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise MetricsError(f"rate ladder must be strictly increasing: {list(rates)}")
    reports = [run_at_rate(r) for r in rates]
    zero_load = reports[0].avg_delivery_latency
    sat_rate = sat_idx = None
    if zero_load is not None:
        for i, rep in enumerate(reports):
            lat = rep.avg_delivery_latency
            if lat is not None and lat > saturation_factor * zero_load:
                sat_rate, sat_idx = rates[i], i
                break
    return SweepResult(planner=planner, rates=list(rates), reports=reports,
                       zero_load_latency=zero_load, saturation_rate=sat_rate,
                       saturation_index=sat_idx)


def compare(reports: dict[str, StatsReport], baseline: str) -> dict[str, dict[str, float]]:
    """(baseline - candidate) / baseline per metric; refuses mismatched workloads."""
    if baseline not in reports:
        raise MetricsError(f"baseline {baseline!r} missing from reports")
    base = reports[baseline]
    for name, rep in reports.items():
        if rep.config_hash != base.config_hash:
            raise MetricsError(
                f"workload mismatch: {name} hash {rep.config_hash} != "
                f"{baseline} hash {base.config_hash}")
    out: dict[str, dict[str, float]] = {}
    for name, rep in reports.items():
        out[name] = {
            "latency_improvement": _improvement(base.avg_delivery_latency,
                                                rep.avg_delivery_latency),
            "energy_improvement": _improvement(base.energy, rep.energy),
            "hops_improvement": _improvement(float(base.total_hops),
                                             float(rep.total_hops)),
        }
    return out


def _improvement(base: float | None, cand: float | None) -> float:
    if base in (None, 0) or cand is None:
        return 0.0
    return (base - cand) / base


CSV_COLUMNS = ["planner", "rate", "dest_range", "delivered", "packets_completed",
               "avg_delivery_latency", "avg_packet_latency", "accepted_throughput",
               "total_hops", "energy", "incomplete_packets", "dropped_at_source",
               "seed", "config_hash"]


def write_csv(path: str, reports: Sequence[StatsReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for rep in reports:
            w.writerow(rep.to_row())


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
