"""Hop-level routing and full multicast route planners.

Low-level rule: within the High subnetwork the next hop from u toward a
higher-labeled destination d is the neighbor with the largest label not
exceeding d; the Low subnetwork mirrors it.  Labels are strictly monotone
along a leg, so every walk terminates and stays inside one subnetwork.

Planners (all emit a RoutePlan):
  - plan_mu:  one unicast per destination.
  - plan_dp:  two label-monotone chains (higher / lower than the source).
  - plan_mp:  the dual-path chains split again by destination x versus
              source x, giving up to four chains.
  - plan_nmp: the same four-way split computed on row-major labels, with a
              greedy nearest-first visit order inside each group.
  - plan_dpm: chains / unicast fan-out per merged partition, reached via an
              approach leg to the partition representative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .topology import Coord, Mesh, RouteTables, TopologyError


class RoutingError(ValueError):
    pass


class RouteMode(enum.Enum):
    DUAL_PATH = "dual_path"
    MULTI_UNICAST = "multi_unicast"


class PlannerKind(enum.Enum):
    DPM = "dpm"
    MP = "mp"
    NMP = "nmp"
    DP = "dp"
    MU = "mu"


class ApproachMode(enum.Enum):
    """How the source-to-representative leg of a DPM plan is routed."""

    HAMILTONIAN = "hamiltonian"
    XY = "xy"


def next_hop_high(u: Coord, dest: Coord, mesh: Mesh) -> Coord:
    lu, ld = mesh.label_of(u), mesh.label_of(dest)
    if ld <= lu:
        raise RoutingError(f"next_hop_high needs label(dest) > label(u), got {lu} -> {ld}")
    return mesh.coord_of(RouteTables.for_mesh(mesh).next_high[lu][ld])


def next_hop_low(u: Coord, dest: Coord, mesh: Mesh) -> Coord:
    lu, ld = mesh.label_of(u), mesh.label_of(dest)
    if ld >= lu:
        raise RoutingError(f"next_hop_low needs label(dest) < label(u), got {lu} -> {ld}")
    return mesh.coord_of(RouteTables.for_mesh(mesh).next_low[lu][ld])


def walk_labels(start: int, dest: int, tables: RouteTables) -> list[int]:
    """Full label path start..dest (inclusive) under the subnet next-hop rule."""
    path = [start]
    u = start
    if dest > start:
        nxt = tables.next_high
    elif dest < start:
        nxt = tables.next_low
    else:
        return path
    while u != dest:
        u = nxt[u][dest]
        path.append(u)
    return path


def walk_chain(start: Coord, ordered_dests: list[Coord], mesh: Mesh) -> tuple[int, list[Coord]]:
    """Concatenated subnet walk visiting each destination in order.

    The destination labels must be strictly monotone relative to the start
    (all ascending or all descending); every listed destination is a
    copy-and-forward point.  Returns (hop count, full node path).
    """
    t = RouteTables.for_mesh(mesh)
    labels = [mesh.label_of(c) for c in ordered_dests]
    seq = [mesh.label_of(start)] + labels
    ascending = all(b > a for a, b in zip(seq, seq[1:]))
    descending = all(b < a for a, b in zip(seq, seq[1:]))
    if labels and not (ascending or descending):
        raise RoutingError(f"chain {labels} is not label-monotone from {seq[0]}")
    path = [seq[0]]
    for d in labels:
        path.extend(walk_labels(path[-1], d, t)[1:])
    return len(path) - 1, [mesh.coord_of(l) for l in path]


def greedy_chain_walk(start: Coord, order: list[Coord], mesh: Mesh) -> tuple[int, dict[int, int]]:
    """Walk a greedy (not necessarily monotone) visit order leg by leg.

    Destinations encountered while en route to a later target are delivered
    opportunistically and skipped.  Returns (total hops, {dest label: hop
    offset at delivery}).
    """
    t = RouteTables.for_mesh(mesh)
    remaining = [mesh.label_of(c) for c in order]
    here = mesh.label_of(start)
    hops = 0
    delivered: dict[int, int] = {}
    while remaining:
        target = remaining[0]
        while here != target:
            here = t.next_high[here][target] if target > here else t.next_low[here][target]
            hops += 1
            if here in remaining and here != target:
                delivered[here] = hops
                remaining.remove(here)
        delivered[target] = hops
        remaining.remove(target)
    return hops, delivered


@dataclass(frozen=True)
class PlanEntry:
    """One delivery leg bundle of a RoutePlan.

    `approach` is the full node path from the source to `representative`
    (just (S,) when delivery starts at the source itself).  Chains are
    visit orders walked from the representative; `rep_is_destination`
    marks DPM entries where the representative itself receives a copy.
    """

    representative: Coord
    approach: tuple[Coord, ...]
    mode: RouteMode
    high_chain: tuple[Coord, ...] = ()
    low_chain: tuple[Coord, ...] = ()
    greedy_chain: tuple[Coord, ...] = ()
    unicast_fanout: tuple[Coord, ...] = ()
    rep_is_destination: bool = False

    def destinations(self) -> tuple[Coord, ...]:
        out = []
        if self.rep_is_destination:
            out.append(self.representative)
        out.extend(self.high_chain)
        out.extend(self.low_chain)
        out.extend(self.greedy_chain)
        out.extend(self.unicast_fanout)
        return tuple(out)


@dataclass(frozen=True)
class RoutePlan:
    planner: PlannerKind
    source: Coord
    entries: tuple[PlanEntry, ...] = field(default_factory=tuple)

    def destinations(self) -> tuple[Coord, ...]:
        out: list[Coord] = []
        for e in self.entries:
            out.extend(e.destinations())
        return tuple(out)


def _check_instance(dests, source) -> None:
    if source in dests:
        raise RoutingError(f"source {source} appears in destination set")


def _sorted_by_label(coords, mesh: Mesh, reverse: bool = False) -> list[Coord]:
    return sorted(coords, key=mesh.label_of, reverse=reverse)


def plan_mu(dests: set[Coord], source: Coord) -> RoutePlan:
    """One unicast packet per destination, serialized at the source."""
    _check_instance(dests, source)
    entries = tuple(
        PlanEntry(representative=source, approach=(source,), mode=RouteMode.MULTI_UNICAST,
                  unicast_fanout=(d,))
        for d in sorted(dests)
    )
    return RoutePlan(planner=PlannerKind.MU, source=source, entries=entries)


def plan_dp(dests: set[Coord], source: Coord, mesh: Mesh) -> RoutePlan:
    _check_instance(dests, source)
    ls = mesh.label_of(source)
    high = _sorted_by_label([d for d in dests if mesh.label_of(d) > ls], mesh)
    low = _sorted_by_label([d for d in dests if mesh.label_of(d) < ls], mesh, reverse=True)
    entries = []
    if high:
        entries.append(PlanEntry(representative=source, approach=(source,),
                                 mode=RouteMode.DUAL_PATH, high_chain=tuple(high)))
    if low:
        entries.append(PlanEntry(representative=source, approach=(source,),
                                 mode=RouteMode.DUAL_PATH, low_chain=tuple(low)))
    return RoutePlan(planner=PlannerKind.DP, source=source, entries=tuple(entries))


def plan_mp(dests: set[Coord], source: Coord, mesh: Mesh) -> RoutePlan:
    """Four-way split: higher/lower label, then destination x < / >= source x.

    Group emission order is fixed as H1, H2, L1, L2; empty groups are omitted.
    """
    _check_instance(dests, source)
    ls = mesh.label_of(source)
    sx = source[0]
    h = [d for d in dests if mesh.label_of(d) > ls]
    l = [d for d in dests if mesh.label_of(d) < ls]
    groups = [
        ("h", _sorted_by_label([d for d in h if d[0] < sx], mesh)),
        ("h", _sorted_by_label([d for d in h if d[0] >= sx], mesh)),
        ("l", _sorted_by_label([d for d in l if d[0] < sx], mesh, reverse=True)),
        ("l", _sorted_by_label([d for d in l if d[0] >= sx], mesh, reverse=True)),
    ]
    entries = []
    for kind, grp in groups:
        if not grp:
            continue
        chain = {"high_chain" if kind == "h" else "low_chain": tuple(grp)}
        entries.append(PlanEntry(representative=source, approach=(source,),
                                 mode=RouteMode.DUAL_PATH, **chain))
    return RoutePlan(planner=PlannerKind.MP, source=source, entries=tuple(entries))


def plan_nmp(dests: set[Coord], source: Coord, mesh: Mesh) -> RoutePlan:
    """MP's four-way split on row-major labels with greedy nearest-first ordering.

    Within each group the next destination is the one at minimum Manhattan
    distance from the current head, ties broken by the smaller row-major
    label.  Legs are still routed with the subnet next-hop rule.
    """
    _check_instance(dests, source)

    def rm(c: Coord) -> int:
        return c[1] * mesh.width + c[0]

    ls = rm(source)
    sx = source[0]
    h = [d for d in dests if rm(d) > ls]
    l = [d for d in dests if rm(d) < ls]
    groups = [
        [d for d in h if d[0] < sx],
        [d for d in h if d[0] >= sx],
        [d for d in l if d[0] < sx],
        [d for d in l if d[0] >= sx],
    ]
    entries = []
    for grp in groups:
        if not grp:
            continue
        order: list[Coord] = []
        head = source
        rest = sorted(grp, key=rm)
        while rest:
            nxt = min(rest, key=lambda d: (abs(d[0] - head[0]) + abs(d[1] - head[1]), rm(d)))
            order.append(nxt)
            rest.remove(nxt)
            head = nxt
        entries.append(PlanEntry(representative=source, approach=(source,),
                                 mode=RouteMode.DUAL_PATH, greedy_chain=tuple(order)))
    return RoutePlan(planner=PlannerKind.NMP, source=source, entries=tuple(entries))


def approach_path(source: Coord, rep: Coord, mesh: Mesh,
                  approach: ApproachMode = ApproachMode.HAMILTONIAN) -> tuple[Coord, ...]:
    """Node path from source to a partition representative."""
    t = RouteTables.for_mesh(mesh)
    ls, lr = mesh.label_of(source), mesh.label_of(rep)
    if ls == lr:
        return (source,)
    if approach is ApproachMode.HAMILTONIAN:
        return tuple(mesh.coord_of(l) for l in walk_labels(ls, lr, t))
    path = [ls]
    while path[-1] != lr:
        path.append(t.next_xy[path[-1]][lr])
    return tuple(mesh.coord_of(l) for l in path)


def plan_dpm(dests: set[Coord], source: Coord, mesh: Mesh,
             cost_model=None,
             approach: ApproachMode = ApproachMode.HAMILTONIAN) -> RoutePlan:
    """One entry per merged partition: approach leg to R, then per-mode delivery."""
    from . import partition as _partition

    if cost_model is None:
        cost_model = _partition.CostModel.INCLUDE_APPROACH_LEG
    final = _partition.dpm_partition(dests, source, mesh, cost_model)
    entries = []
    for cand in final.sets:
        rep = cand.representative
        assert rep is not None
        others = [d for d in cand.members if d != rep]
        lr = mesh.label_of(rep)
        kwargs = {}
        if cand.mode is RouteMode.DUAL_PATH:
            kwargs["high_chain"] = tuple(_sorted_by_label(
                [d for d in others if mesh.label_of(d) > lr], mesh))
            kwargs["low_chain"] = tuple(_sorted_by_label(
                [d for d in others if mesh.label_of(d) < lr], mesh, reverse=True))
        else:
            kwargs["unicast_fanout"] = tuple(sorted(others, key=mesh.label_of))
        entries.append(PlanEntry(
            representative=rep,
            approach=approach_path(source, rep, mesh, approach),
            mode=cand.mode,
            rep_is_destination=True,
            **kwargs,
        ))
    return RoutePlan(planner=PlannerKind.DPM, source=source, entries=tuple(entries))


def make_plan(kind: PlannerKind, dests: set[Coord], source: Coord, mesh: Mesh,
              cost_model=None,
              approach: ApproachMode = ApproachMode.HAMILTONIAN) -> RoutePlan:
    if kind is PlannerKind.MU:
        return plan_mu(dests, source)
    if kind is PlannerKind.DP:
        return plan_dp(dests, source, mesh)
    if kind is PlannerKind.MP:
        return plan_mp(dests, source, mesh)
    if kind is PlannerKind.NMP:
        return plan_nmp(dests, source, mesh)
    return plan_dpm(dests, source, mesh, cost_model=cost_model, approach=approach)


def planned_cost(plan: RoutePlan, mesh: Mesh) -> int:
    """Total planned hops: approach legs + chain walks + Manhattan unicast fan-out.

    Unicast fan-out legs are costed at Manhattan distance (the multi-unicast
    cost definition); chain legs are costed at their actual subnet walk
    length, which for a single leg equals Manhattan distance as well.
    """
    total = 0
    for e in plan.entries:
        total += len(e.approach) - 1
        r = e.representative
        if e.high_chain:
            total += walk_chain(r, list(e.high_chain), mesh)[0]
        if e.low_chain:
            total += walk_chain(r, list(e.low_chain), mesh)[0]
        if e.greedy_chain:
            total += greedy_chain_walk(r, list(e.greedy_chain), mesh)[0]
        for d in e.unicast_fanout:
            total += abs(d[0] - r[0]) + abs(d[1] - r[1])
    return total
