"""Cycle-accurate wormhole simulator with virtual-channel subnetworks.

Model (per design notes in README):
  - Single-cycle router traversal + single-cycle link: a flit visible at an
    input buffer in cycle t that wins allocation leaves during t and becomes
    visible at the next buffer at t + router_latency + link_latency.
  - Credit-based flow control per (channel, VC); credits return one cycle
    after a flit is dequeued downstream.
  - VCs are split into a High and a Low class; a channel only ever carries
    flits on VCs of its own subnet class (adversarial fixtures may opt out).
  - Path-based multicast: chains copy-and-forward at listed destinations
    (the copy duplicates flits into a bounded per-node ejection queue while
    the worm keeps moving); representative nodes absorb the approach packet
    and re-inject children through the local port, serialized.
  - A watchdog flags any in-network head flit that has not advanced for
    `watchdog_threshold` cycles and reports the wait-for chain.

Determinism: all per-cycle iteration follows fixed integer orders and
round-robin pointers; identical (config, workload) runs are bit-identical.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from . import metrics
from .partition import CostModel
from .routing import ApproachMode, PlannerKind, RouteMode, make_plan
from .topology import Mesh, RouteTables
from .workload import TraceEvent

FLIT_HEAD, FLIT_BODY, FLIT_TAIL = 0, 1, 2
KIND_UNICAST, KIND_CHAIN, KIND_APPROACH, KIND_FIXED = range(4)


class ConfigError(ValueError):
    pass


class DeadlockError(RuntimeError):
    def __init__(self, report: dict):
        super().__init__(f"watchdog tripped at cycle {report['cycle']}: "
                         f"packet {report['stalled_packet']} stalled at node "
                         f"{report['node']}")
        self.report = report


@dataclass(frozen=True)
class SimConfig:
    mesh: Mesh
    planner: PlannerKind = PlannerKind.DPM
    cost_model: CostModel = CostModel.INCLUDE_APPROACH_LEG
    approach: ApproachMode = ApproachMode.HAMILTONIAN
    vcs_per_port: int = 4
    vcs_high: int = 2
    buffer_depth: int = 4
    packet_size: int = 4
    router_latency: int = 1
    link_latency: int = 1
    watchdog_threshold: int = 10_000
    watchdog_interval: int = 500
    warmup_cycles: int = 0
    measure_cycles: int = 10_000
    drain_cycles: int = 50_000
    seed: int = 1
    source_queue_limit: int | None = None
    record_deliveries: bool = True
    check_invariants: bool = False
    energy_weights: metrics.EnergyWeights = field(default_factory=metrics.EnergyWeights)
    injection_rate: float = 0.0          # metadata for reports
    dest_range: tuple[int, int] | None = None

    def validate(self) -> None:
        if self.vcs_per_port < 2 or not 0 < self.vcs_high < self.vcs_per_port:
            raise ConfigError("need at least one High VC and one Low VC per port")
        if self.buffer_depth < 1:
            raise ConfigError("buffer_depth must be >= 1")
        if self.packet_size < 2:
            raise ConfigError("packet_size must be >= 2 (head plus tail)")
        if self.router_latency < 1 or self.link_latency < 1:
            raise ConfigError("router and link latency must be >= 1")
        if self.measure_cycles < 0 or self.warmup_cycles < 0 or self.drain_cycles < 0:
            raise ConfigError("cycle counts must be nonnegative")

    def digest_payload(self) -> dict:
        return {
            "mesh": [self.mesh.width, self.mesh.height],
            "seed": self.seed,
            "injection_rate": self.injection_rate,
            "dest_range": list(self.dest_range) if self.dest_range else None,
            "warmup": self.warmup_cycles,
            "measure": self.measure_cycles,
            "packet_size": self.packet_size,
        }


class Packet:
    """One worm: either a unicast, a copy-and-forward chain, an approach leg
    to a representative (carrying child templates), or a fixed-path fixture."""

    __slots__ = ("pid", "kind", "src", "gen", "size", "steer", "chain", "chain_set",
                 "children", "use_xy", "any_vc", "path", "path_idx", "hops",
                 "last_advance", "measured", "injected", "head_unit")

    def __init__(self, pid: int, kind: int, src: int, gen: int, size: int,
                 steer: int = -1, chain: list[int] | None = None,
                 children: list[tuple] | None = None, use_xy: bool = False,
                 any_vc: bool = False, path: list[int] | None = None,
                 measured: bool = False, hops: int = 0):
        self.pid = pid
        self.kind = kind
        self.src = src
        self.gen = gen
        self.size = size
        self.steer = steer
        self.chain = chain or []
        self.chain_set = set(self.chain)
        self.children = children or []
        self.use_xy = use_xy
        self.any_vc = any_vc
        self.path = path or []
        self.path_idx = 0
        self.hops = hops
        self.last_advance = gen
        self.measured = measured
        self.injected = False
        self.head_unit: int | None = None


@dataclass(frozen=True)
class FixedPathPacket:
    """Test fixture: inject at `cycle`, follow `path` hop by hop, eject at the end."""

    cycle: int
    path: tuple[int, ...]   # node labels, first is the source
    size: int


def plan_templates(src: int, dsts: tuple[int, ...], cfg: SimConfig,
                   mesh: Mesh) -> list[tuple]:
    """Expand one (source, destination-set) pair into reusable packet specs.

    Each spec is (kind, steer, chain, children); specs are immutable so
    callers may cache them per destination set and instantiate packets
    per event.
    """
    if len(dsts) == 1:
        return [(KIND_UNICAST, dsts[0], None, None)]
    dest_coords = {mesh.coord_of(d) for d in dsts}
    plan = make_plan(cfg.planner, dest_coords, mesh.coord_of(src), mesh,
                     cost_model=cfg.cost_model, approach=cfg.approach)
    specs: list[tuple] = []
    for entry in plan.entries:
        if entry.rep_is_destination:
            rep = mesh.label_of(entry.representative)
            children: list[tuple] = []
            if entry.mode is RouteMode.DUAL_PATH:
                for ch in (entry.high_chain, entry.low_chain):
                    if ch:
                        children.append((KIND_CHAIN, [mesh.label_of(c) for c in ch]))
            else:
                for d in entry.unicast_fanout:
                    children.append((KIND_UNICAST, [mesh.label_of(d)]))
            specs.append((KIND_APPROACH, rep, None, children))
        else:
            order = entry.high_chain or entry.low_chain or entry.greedy_chain \
                or entry.unicast_fanout
            labels = [mesh.label_of(c) for c in order]
            if len(labels) == 1 and entry.unicast_fanout:
                specs.append((KIND_UNICAST, labels[0], None, None))
            else:
                specs.append((KIND_CHAIN, None, labels, None))
    return specs


def packets_for_event(ev: TraceEvent, cfg: SimConfig, mesh: Mesh,
                      measured: bool, specs: list[tuple] | None = None) -> list[Packet]:
    """Expand one workload event into injectable packets via the configured planner."""
    if specs is None:
        specs = plan_templates(ev.src, ev.dsts, cfg, mesh)
    size = cfg.packet_size
    use_xy = cfg.approach is ApproachMode.XY
    packets: list[Packet] = []
    for kind, steer, chain, children in specs:
        if kind == KIND_APPROACH:
            packets.append(Packet(0, KIND_APPROACH, ev.src, ev.cycle, size,
                                  steer=steer, children=children, use_xy=use_xy,
                                  measured=measured))
        elif kind == KIND_CHAIN:
            packets.append(Packet(0, KIND_CHAIN, ev.src, ev.cycle, size,
                                  chain=list(chain), measured=measured))
        else:
            packets.append(Packet(0, KIND_UNICAST, ev.src, ev.cycle, size,
                                  steer=steer, measured=measured))
    return packets


class Simulator:
    def __init__(self, cfg: SimConfig):
        cfg.validate()
        self.cfg = cfg
        mesh = cfg.mesh
        self.mesh = mesh
        self.tables = RouteTables.for_mesh(mesh)
        self.n = mesh.node_count
        self.V = cfg.vcs_per_port
        self.channels = mesh.channels()
        self.nl = len(self.channels)
        self.chan_id = {uv: i for i, uv in enumerate(self.channels)}
        self.chan_dst = [v for (_, v) in self.channels]
        self.chan_cls = [0 if v > u else 1 for (u, v) in self.channels]
        self.class_vcs = (tuple(range(cfg.vcs_high)),
                          tuple(range(cfg.vcs_high, self.V)))
        self.lbase = self.nl * self.V
        nunits = self.lbase + self.n * self.V

        self.bufs: list[deque] = [deque() for _ in range(nunits)]
        self.routed: list = [None] * nunits
        self.pend_copy: list = [None] * nunits
        self.local_owner: list = [None] * (self.n * self.V)
        self.out_owner = [-1] * self.lbase
        self.out_pkt: list = [None] * self.lbase
        self.credits = [cfg.buffer_depth] * self.lbase
        self.rr_chan = [0] * self.nl
        self.rr_eject = [0] * self.n
        self.alloc_rr: dict[tuple[int, int], int] = {}

        self.ejq: list[deque] = [deque() for _ in range(self.n)]
        self.ejq_active: set[int] = set()
        self.ni_queue: list[deque] = [deque() for _ in range(self.n)]
        self.ni_sent = [0] * self.n            # flits of the current head packet
        self.ni_unit = [-1] * self.n
        self.ni_active: set[int] = set()

        self.arrivals: dict[int, list] = {}
        self.credit_sched: dict[int, list[int]] = {}
        self.pending_children: dict[int, list[tuple[int, Packet]]] = {}
        self._plan_cache: dict[tuple, list[tuple]] = {}
        self.inflight = 0

        self.route_pending: deque[int] = deque()
        self.alloc_waiting: dict[int, tuple[int, tuple[int, ...]]] = {}
        self.active_channels: dict[int, int] = {}   # channel -> bound vc count
        self.eject_units: list[list[int]] = [[] for _ in range(self.n)]
        self.eject_nodes: set[int] = set()

        self.active_packets: dict[Packet, bool] = {}
        self.counters = metrics.EnergyCounters()
        self.injected_flits = 0
        self.terminal_flits = 0
        self.copy_flits = 0
        self.dropped_at_source = 0

        # measurement accumulators
        self.delivery_count = 0
        self.latency_sum = 0
        self.hops_sum = 0
        self.packet_count = 0
        self.packet_latency_sum = 0
        self.logical: dict[int, list[int]] = {}   # pid -> [remaining, gen]
        self.records: list[metrics.DeliveryRecord] = []

        self.t = 0
        self.measuring = False
        self._pid = 0

    # -- helpers -------------------------------------------------------------

    def unit_node(self, iu: int) -> int:
        if iu < self.lbase:
            return self.chan_dst[iu // self.V]
        return (iu - self.lbase) // self.V

    def _next_hop(self, p: Packet, here: int, target: int) -> int:
        if p.use_xy:
            return self.tables.next_xy[here][target]
        if target > here:
            return self.tables.next_high[here][target]
        return self.tables.next_low[here][target]

    def _schedule_arrival(self, cycle: int, unit: int, kind: int, p: Packet) -> None:
        self.arrivals.setdefault(cycle, []).append((unit, kind, p))
        self.inflight += 1

    def _return_credit(self, iu: int) -> None:
        if iu < self.lbase:
            self.credit_sched.setdefault(self.t + 1, []).append(iu)

    def _front_is_head(self, iu: int) -> None:
        buf = self.bufs[iu]
        if buf and buf[0][0] == FLIT_HEAD and self.routed[iu] is None:
            self.route_pending.append(iu)

    # -- per-cycle phases ----------------------------------------------------

    def _intake(self, events: Iterator[TraceEvent], lookahead: list) -> None:
        t = self.t
        for node, pkt in self.pending_children.pop(t, ()):
            self.ni_queue[node].append(pkt)
            self.ni_active.add(node)
        while True:
            if not lookahead:
                try:
                    lookahead.append(next(events))
                except StopIteration:
                    return
            ev = lookahead[0]
            if ev.cycle > t:
                return
            lookahead.pop(0)
            self._admit_event(ev)

    def _admit_event(self, ev: TraceEvent) -> None:
        limit = self.cfg.source_queue_limit
        if limit is not None and len(self.ni_queue[ev.src]) >= limit:
            self.dropped_at_source += 1
            return
        cfg = self.cfg
        measured = cfg.warmup_cycles <= ev.cycle < cfg.warmup_cycles + cfg.measure_cycles
        pid = self._next_pid()
        key = (ev.src, ev.dsts)
        specs = self._plan_cache.get(key)
        if specs is None:
            specs = plan_templates(ev.src, ev.dsts, cfg, self.mesh)
            self._plan_cache[key] = specs
        pkts = packets_for_event(ev, cfg, self.mesh, measured, specs)
        for p in pkts:
            p.pid = pid
            self.ni_queue[ev.src].append(p)
            self.active_packets[p] = True
        self.ni_active.add(ev.src)
        if measured:
            self.logical[pid] = [len(ev.dsts), ev.cycle]

    def _next_pid(self) -> int:
        self._pid += 1
        return self._pid - 1

    def _land_arrivals(self) -> None:
        for unit, kind, p in self.arrivals.pop(self.t, ()):
            self.inflight -= 1
            buf = self.bufs[unit]
            buf.append((kind, p))
            if self.cfg.check_invariants:
                assert len(buf) <= self.cfg.buffer_depth, "buffer overflow"
            if self.measuring:
                self.counters.buffer_writes += 1
            if kind == FLIT_HEAD:
                p.head_unit = unit
                self._front_is_head(unit)

    def _land_credits(self) -> None:
        for o in self.credit_sched.pop(self.t, ()):
            self.credits[o] += 1
            if self.cfg.check_invariants:
                assert self.credits[o] <= self.cfg.buffer_depth, "credit overflow"

    def _pop_ejq(self) -> None:
        done = []
        for node in sorted(self.ejq_active):
            q = self.ejq[node]
            if q and q[0][0] <= self.t:
                _, kind, ctx = q.popleft()
                p: Packet = ctx["pkt"]
                p.last_advance = self.t
                if kind == FLIT_HEAD:
                    ctx["head"] = self.t
                elif kind == FLIT_TAIL:
                    self._complete_delivery(ctx)
            if not q:
                done.append(node)
        for node in done:
            self.ejq_active.discard(node)

    def _complete_delivery(self, ctx: dict) -> None:
        p: Packet = ctx["pkt"]
        t = self.t
        if ctx["copy"]:
            self.copy_flits += p.size
        else:
            self.terminal_flits += p.size
            p.head_unit = None
            self.active_packets.pop(p, None)
            if ctx["absorb"]:
                node = ctx["dest"]
                kids = []
                for kind, labels in p.children:
                    if kind == KIND_CHAIN:
                        kids.append(Packet(p.pid, KIND_CHAIN, p.src, p.gen, p.size,
                                           chain=list(labels), measured=p.measured,
                                           hops=p.hops))
                    else:
                        kids.append(Packet(p.pid, KIND_UNICAST, p.src, p.gen, p.size,
                                           steer=labels[0], measured=p.measured,
                                           hops=p.hops))
                for k in kids:
                    self.active_packets[k] = True
                if kids:
                    self.pending_children.setdefault(t + 1, []).extend(
                        (node, k) for k in kids)
        if not p.measured:
            return
        latency = t - p.gen
        self.delivery_count += 1
        self.latency_sum += latency
        self.hops_sum += ctx["hops"]
        if self.cfg.record_deliveries:
            self.records.append(metrics.DeliveryRecord(
                packet_id=p.pid, source=p.src, destination=ctx["dest"],
                generated=p.gen, head_arrival=ctx.get("head", t),
                tail_arrival=t, hops=ctx["hops"]))
        lp = self.logical.get(p.pid)
        if lp is not None:
            lp[0] -= 1
            if lp[0] == 0:
                self.packet_count += 1
                self.packet_latency_sum += t - lp[1]
                del self.logical[p.pid]

    def _inject(self) -> None:
        depth = self.cfg.buffer_depth
        done = []
        for node in sorted(self.ni_active):
            q = self.ni_queue[node]
            if not q:
                done.append(node)
                continue
            p = q[0]
            if self.ni_sent[node] == 0:
                unit = self._pick_local_vc(node, p)
                if unit < 0:
                    continue
                self.ni_unit[node] = unit
            unit = self.ni_unit[node]
            buf = self.bufs[unit]
            if len(buf) >= depth:
                continue
            k = self.ni_sent[node]
            kind = FLIT_HEAD if k == 0 else (FLIT_TAIL if k == p.size - 1 else FLIT_BODY)
            buf.append((kind, p))
            self.injected_flits += 1
            if self.measuring:
                self.counters.buffer_writes += 1
            if kind == FLIT_HEAD:
                p.injected = True
                p.head_unit = unit
                p.last_advance = self.t
                self._front_is_head(unit)
            self.ni_sent[node] = k + 1
            if kind == FLIT_TAIL:
                q.popleft()
                self.ni_sent[node] = 0
                self.ni_unit[node] = -1
        for node in done:
            self.ni_active.discard(node)

    def _pick_local_vc(self, node: int, p: Packet) -> int:
        if p.kind == KIND_FIXED:
            target = p.path[p.path_idx] if p.path_idx < len(p.path) else node
        elif p.kind == KIND_CHAIN:
            target = p.chain[0]
        else:
            target = p.steer
        if p.kind == KIND_FIXED:
            # fixtures pin VC 0 so cyclic routes actually contend
            vcs: tuple[int, ...] = (0,)
        elif target == node:
            vcs = tuple(range(self.V))
        else:
            w = self._next_hop(p, node, target)
            cls = 0 if w > node else 1
            vcs = tuple(range(self.V)) if p.any_vc else self.class_vcs[cls]
        base = node * self.V
        for vc in vcs:
            if self.local_owner[base + vc] is None:
                self.local_owner[base + vc] = p
                return self.lbase + base + vc
        return -1

    def _route(self) -> None:
        pend = self.route_pending
        self.route_pending = deque()
        for iu in pend:
            if self.routed[iu] is not None:
                continue
            buf = self.bufs[iu]
            if not buf or buf[0][0] != FLIT_HEAD:
                continue
            kind, p = buf[0]
            node = self.unit_node(iu)
            decision = self._route_compute(iu, p, node)
            self.routed[iu] = decision
            if decision[0] == "L":
                cid, vcs = decision[1], decision[2]
                self.alloc_waiting[iu] = (cid, vcs)
            else:
                if iu not in self.eject_units[node]:
                    self.eject_units[node].append(iu)
                self.eject_nodes.add(node)

    def _route_compute(self, iu: int, p: Packet, node: int):
        if p.kind == KIND_FIXED:
            if p.path_idx >= len(p.path):
                return ("E", self._mk_ctx(p, node, absorb=False))
            w = p.path[p.path_idx]
            p.path_idx += 1
            return self._link_decision(node, w, p)
        if p.kind == KIND_CHAIN:
            if node in p.chain_set:
                p.chain_set.discard(node)
                p.chain.remove(node)
                if not p.chain:
                    return ("E", self._mk_ctx(p, node, absorb=False))
                # a leg toward a lower label needs descending channels and vice
                # versa; cutting through while holding the other class's
                # channels would link the two acyclic subnets, so the worm is
                # absorbed here and the remainder re-injected
                if iu < self.lbase:
                    inc_cls = self.chan_cls[iu // self.V]
                    nxt_cls = 0 if p.chain[0] > node else 1
                    if nxt_cls != inc_cls:
                        if len(p.chain) == 1:
                            p.children = [(KIND_UNICAST, [p.chain[0]])]
                        else:
                            p.children = [(KIND_CHAIN, list(p.chain))]
                        return ("A", self._mk_ctx(p, node, absorb=True))
                self.pend_copy[iu] = self._mk_ctx(p, node, absorb=False, copy=True)
            target = p.chain[0]
            w = self._next_hop(p, node, target)
            return self._link_decision(node, w, p)
        # unicast / approach
        if p.steer == node:
            absorb = p.kind == KIND_APPROACH
            return ("A" if absorb else "E", self._mk_ctx(p, node, absorb=absorb))
        w = self._next_hop(p, node, p.steer)
        return self._link_decision(node, w, p)

    def _link_decision(self, node: int, w: int, p: Packet):
        cid = self.chan_id[(node, w)]
        if p.kind == KIND_FIXED:
            vcs: tuple[int, ...] = (0,)
        elif p.any_vc:
            vcs = tuple(range(self.V))
        else:
            vcs = self.class_vcs[self.chan_cls[cid]]
        return ("L", cid, vcs)

    def _mk_ctx(self, p: Packet, node: int, absorb: bool, copy: bool = False) -> dict:
        return {"pkt": p, "dest": node, "hops": p.hops, "absorb": absorb,
                "copy": copy, "head": None}

    def _allocate_vcs(self) -> None:
        if not self.alloc_waiting:
            return
        groups: dict[tuple[int, tuple[int, ...]], list[int]] = {}
        for iu in sorted(self.alloc_waiting):
            cid, vcs = self.alloc_waiting[iu]
            groups.setdefault((cid, vcs), []).append(iu)
        for (cid, vcs), units in groups.items():
            free = [vc for vc in vcs if self.out_owner[cid * self.V + vc] == -1]
            if not free:
                continue
            ptr = self.alloc_rr.get((cid, vcs), -1)
            units.sort(key=lambda u: (u <= ptr, u))
            for vc, iu in zip(free, units):
                o = cid * self.V + vc
                self.out_owner[o] = iu
                _, p = self.bufs[iu][0]
                self.out_pkt[o] = p
                self.routed[iu] = ("L", cid, vc)
                del self.alloc_waiting[iu]
                if self.active_channels.get(cid, 0) == 0:
                    self.active_channels[cid] = 0
                self.active_channels[cid] += 1
                self.alloc_rr[(cid, vcs)] = iu

    def _switch(self) -> None:
        cfg = self.cfg
        hop = cfg.router_latency + cfg.link_latency
        cap = cfg.buffer_depth
        t = self.t
        V = self.V
        bufs = self.bufs
        out_owner = self.out_owner
        credits = self.credits
        pend_copy = self.pend_copy
        rr_chan = self.rr_chan
        counters = self.counters
        measuring = self.measuring
        lbase = self.lbase
        arrive = t + hop
        for cid in sorted(self.active_channels):
            start = rr_chan[cid]
            base = cid * V
            for k in range(V):
                vc = (start + k) % V
                o = base + vc
                iu = out_owner[o]
                if iu < 0:
                    continue
                buf = bufs[iu]
                if not buf or credits[o] <= 0:
                    continue
                ctx = pend_copy[iu]
                if ctx is not None:
                    node = self.unit_node(iu)
                    if len(self.ejq[node]) >= cap:
                        continue
                kind, p = buf.popleft()
                rr_chan[cid] = (vc + 1) % V
                credits[o] -= 1
                if measuring:
                    counters.buffer_reads += 1
                    counters.crossbar_traversals += 1
                    counters.link_traversals += 1
                if iu < lbase:
                    self.credit_sched.setdefault(t + 1, []).append(iu)
                self.arrivals.setdefault(arrive, []).append((o, kind, p))
                self.inflight += 1
                if ctx is not None:
                    self.ejq[node].append((t + cfg.router_latency, kind, ctx))
                    self.ejq_active.add(node)
                    if measuring:
                        counters.buffer_writes += 1
                if kind == FLIT_HEAD:
                    p.hops += 1
                    p.last_advance = t
                elif kind == FLIT_TAIL:
                    self.routed[iu] = None
                    pend_copy[iu] = None
                    out_owner[o] = -1
                    self.out_pkt[o] = None
                    self.active_channels[cid] -= 1
                    if self.active_channels[cid] == 0:
                        del self.active_channels[cid]
                    if iu >= lbase:
                        self.local_owner[iu - lbase] = None
                    self._front_is_head(iu)
                break

    def _eject(self) -> None:
        cfg = self.cfg
        done = []
        for node in sorted(self.eject_nodes):
            units = self.eject_units[node]
            units[:] = [iu for iu in units
                        if self.routed[iu] is not None and self.routed[iu][0] in ("E", "A")]
            if not units:
                done.append(node)
                continue
            if len(self.ejq[node]) >= cfg.buffer_depth:
                continue
            nu = len(units)
            start = self.rr_eject[node] % nu
            for k in range(nu):
                iu = units[(start + k) % nu]
                buf = self.bufs[iu]
                if not buf:
                    continue
                kind, p = buf.popleft()
                self.rr_eject[node] = (start + k + 1) % nu
                if self.measuring:
                    self.counters.buffer_reads += 1
                    self.counters.crossbar_traversals += 1
                    self.counters.buffer_writes += 1
                self._return_credit(iu)
                ctx = self.routed[iu][1]
                self.ejq[node].append((self.t + cfg.router_latency, kind, ctx))
                self.ejq_active.add(node)
                p.last_advance = self.t
                if kind == FLIT_TAIL:
                    self.routed[iu] = None
                    if iu >= self.lbase:
                        self.local_owner[iu - self.lbase] = None
                    self._front_is_head(iu)
                break
        for node in done:
            self.eject_nodes.discard(node)

    # -- watchdog --------------------------------------------------------------

    def _watchdog(self) -> None:
        thr = self.cfg.watchdog_threshold
        for p in self.active_packets:
            if p.injected and self.t - p.last_advance >= thr:
                raise DeadlockError(self._deadlock_report(p))

    def _deadlock_report(self, stalled: Packet) -> dict:
        chain = []
        p: Packet | None = stalled
        seen: set[int] = set()
        while p is not None and id(p) not in seen and len(chain) < 32:
            seen.add(id(p))
            iu = p.head_unit
            if iu is None:
                chain.append({"packet": p.pid, "node": None, "waiting_for": "ejq"})
                break
            node = self.unit_node(iu)
            r = self.routed[iu]
            entry = {"packet": p.pid, "node": node}
            blocker = None
            if r is None or r[0] != "L":
                entry["waiting_for"] = "ejection" if r else "routing"
            elif iu in self.alloc_waiting:
                cid, vcs = self.alloc_waiting[iu]
                entry["waiting_for"] = f"vc_alloc channel {self.channels[cid]}"
                for vc in vcs:
                    if self.out_pkt[cid * self.V + vc] is not None:
                        blocker = self.out_pkt[cid * self.V + vc]
                        break
            else:
                cid, vc = r[1], r[2]
                entry["waiting_for"] = f"credit channel {self.channels[cid]} vc {vc}"
                down = self.bufs[cid * self.V + vc]
                if down:
                    blocker = down[0][1]
            chain.append(entry)
            p = blocker
        return {"cycle": self.t, "stalled_packet": stalled.pid,
                "node": self.unit_node(stalled.head_unit)
                if stalled.head_unit is not None else None,
                "wait_chain": chain}

    # -- main loop ---------------------------------------------------------------

    def _network_idle(self) -> bool:
        return (not self.active_packets and self.inflight == 0
                and not self.credit_sched and not self.pending_children
                and not self.ejq_active and not self.ni_active
                and not self.route_pending and not self.alloc_waiting
                and not self.active_channels and not self.eject_nodes)

    def run(self, events: Iterable[TraceEvent],
            fixed: Iterable[FixedPathPacket] = ()) -> metrics.StatsReport:
        cfg = self.cfg
        horizon = cfg.warmup_cycles + cfg.measure_cycles
        deadline = horizon + cfg.drain_cycles
        ev_iter = iter(events)
        lookahead: list[TraceEvent] = []
        fixed_by_cycle: dict[int, list[FixedPathPacket]] = {}
        for f in fixed:
            fixed_by_cycle.setdefault(f.cycle, []).append(f)
        wd_interval = max(1, cfg.watchdog_interval)

        while True:
            t = self.t
            self.measuring = cfg.warmup_cycles <= t < horizon
            for f in fixed_by_cycle.pop(t, ()):
                p = Packet(self._next_pid(), KIND_FIXED, f.path[0], t, f.size,
                           path=list(f.path[1:]), any_vc=True)
                self.ni_queue[f.path[0]].append(p)
                self.ni_active.add(f.path[0])
                self.active_packets[p] = True
            self._intake(ev_iter, lookahead)
            self._land_arrivals()
            self._land_credits()
            self._pop_ejq()
            self._inject()
            self._route()
            self._allocate_vcs()
            self._switch()
            self._eject()
            if t % wd_interval == 0 and t:
                self._watchdog()

            self.t = t + 1
            if self._network_idle() and not fixed_by_cycle:
                nxt = None
                if lookahead:
                    nxt = lookahead[0].cycle
                else:
                    try:
                        lookahead.append(next(ev_iter))
                        nxt = lookahead[0].cycle
                    except StopIteration:
                        nxt = None
                if nxt is None:
                    break
                self.t = max(self.t, nxt)
            if self.t > deadline:
                break

        if cfg.check_invariants and self._network_idle():
            assert self.terminal_flits == self.injected_flits, (
                f"flit conservation: injected {self.injected_flits}, "
                f"terminal {self.terminal_flits}")
        return self._report()

    def _report(self) -> metrics.StatsReport:
        cfg = self.cfg
        return metrics.finalize(
            config_hash=metrics.config_digest(cfg.digest_payload()),
            seed=cfg.seed, planner=cfg.planner.value,
            injection_rate=cfg.injection_rate, dest_range=cfg.dest_range,
            measure_cycles=cfg.measure_cycles, node_count=self.n,
            packet_size=cfg.packet_size,
            delivery_count=self.delivery_count, latency_sum=self.latency_sum,
            hops_sum=self.hops_sum, packet_count=self.packet_count,
            packet_latency_sum=self.packet_latency_sum,
            counters=self.counters, weights=cfg.energy_weights,
            incomplete_packets=len(self.logical),
            dropped_at_source=self.dropped_at_source,
            records=self.records if cfg.record_deliveries else [],
        )


def run(cfg: SimConfig, events: Iterable[TraceEvent],
        fixed: Iterable[FixedPathPacket] = ()) -> metrics.StatsReport:
    """Simulate one run; deterministic for identical (config, events)."""
    return Simulator(cfg).run(events, fixed)


def adversarial_ring_fixture(mesh: Mesh, size: int = 12) -> list[FixedPathPacket]:
    """Four long fixed-path worms chasing each other around the (0,0)-(1,1)
    square with unrestricted turns; deadlocks under wormhole flow control."""
    a = mesh.label_of((0, 0))
    b = mesh.label_of((1, 0))
    c = mesh.label_of((1, 1))
    d = mesh.label_of((0, 1))
    ring = [a, b, c, d]
    out = []
    for i in range(4):
        path = [ring[i % 4], ring[(i + 1) % 4], ring[(i + 2) % 4], ring[(i + 3) % 4]]
        out.append(FixedPathPacket(cycle=0, path=tuple(path), size=size))
    return out
