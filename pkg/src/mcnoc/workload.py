"""Synthetic traffic generation and trace-file ingestion.

Synthetic traffic is a per-node Bernoulli injection process: every node
independently generates a packet each cycle with probability
`injection_rate`; a `multicast_fraction` of packets carry a destination
set whose size is uniform over `dest_range`.  Generation uses geometric
inter-arrival sampling (equivalent to per-cycle Bernoulli draws) so long
horizons cost time proportional to the number of events, not cycles.

Trace files are UTF-8 JSON lines: {"cycle": int, "src": int, "dsts": [int, ...]}
with node labels in the snake labeling of the configured mesh.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .topology import Mesh


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class TrafficConfig:
    injection_rate: float
    multicast_fraction: float = 0.10
    dest_range: tuple[int, int] = (10, 16)

    def validate(self, mesh: Mesh) -> None:
        if not 0.0 <= self.injection_rate <= 1.0:
            raise WorkloadError(f"injection_rate {self.injection_rate} outside [0, 1]")
        if not 0.0 <= self.multicast_fraction <= 1.0:
            raise WorkloadError(f"multicast_fraction {self.multicast_fraction} outside [0, 1]")
        lo, hi = self.dest_range
        if lo < 1 or hi < lo:
            raise WorkloadError(f"bad dest_range {self.dest_range}")
        if hi >= mesh.node_count:
            raise WorkloadError(
                f"dest_range max {hi} must be below node count {mesh.node_count}")


@dataclass(frozen=True)
class TraceEvent:
    cycle: int
    src: int
    dsts: tuple[int, ...]

    def validate(self, mesh: Mesh, where: str = "event") -> None:
        n = mesh.node_count
        if self.cycle < 0:
            raise WorkloadError(f"{where}: negative cycle {self.cycle}")
        if not 0 <= self.src < n:
            raise WorkloadError(f"{where}: source label {self.src} out of range")
        if not self.dsts:
            raise WorkloadError(f"{where}: empty destination list")
        if len(set(self.dsts)) != len(self.dsts):
            raise WorkloadError(f"{where}: duplicate destination in {self.dsts}")
        for d in self.dsts:
            if not 0 <= d < n:
                raise WorkloadError(f"{where}: destination label {d} out of range")
            if d == self.src:
                raise WorkloadError(f"{where}: destination equals source {d}")


def _geometric_gap(rng: random.Random, p: float) -> int:
    # Support {1, 2, ...}: number of Bernoulli(p) trials up to the first success.
    u = rng.random()
    if p >= 1.0:
        return 1
    return int(math.ceil(math.log(1.0 - u) / math.log(1.0 - p)))


def generate_synthetic(cfg: TrafficConfig, mesh: Mesh, seed: int,
                       horizon: int) -> Iterator[TraceEvent]:
    """Events sorted by (cycle, source), reproducible per seed."""
    cfg.validate(mesh)
    if cfg.injection_rate <= 0.0 or horizon <= 0:
        return
    n = mesh.node_count
    rngs = [random.Random((seed << 20) ^ (node * 0x9E3779B1 + 1)) for node in range(n)]
    heap: list[tuple[int, int]] = []
    for node in range(n):
        first = _geometric_gap(rngs[node], cfg.injection_rate) - 1
        if first < horizon:
            heapq.heappush(heap, (first, node))
    while heap:
        cycle, node = heapq.heappop(heap)
        rng = rngs[node]
        if rng.random() < cfg.multicast_fraction:
            lo, hi = cfg.dest_range
            k = rng.randint(lo, hi)
        else:
            k = 1
        pool = list(range(n))
        pool.remove(node)
        dsts = tuple(rng.sample(pool, k))
        yield TraceEvent(cycle=cycle, src=node, dsts=dsts)
        nxt = cycle + _geometric_gap(rng, cfg.injection_rate)
        if nxt < horizon:
            heapq.heappush(heap, (nxt, node))


def load_trace(path: str, mesh: Mesh) -> list[TraceEvent]:
    """Parse and validate a JSON-lines trace; events returned sorted by cycle."""
    events: list[TraceEvent] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise WorkloadError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            try:
                ev = TraceEvent(cycle=int(rec["cycle"]), src=int(rec["src"]),
                                dsts=tuple(int(d) for d in rec["dsts"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise WorkloadError(f"{path}:{lineno}: bad record fields") from exc
            ev.validate(mesh, where=f"{path}:{lineno}")
            events.append(ev)
    events.sort(key=lambda e: (e.cycle, e.src))
    return events


def write_trace(path: str, events: Iterable[TraceEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps({"cycle": ev.cycle, "src": ev.src,
                                 "dsts": list(ev.dsts)}) + "\n")
