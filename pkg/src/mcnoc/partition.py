"""Destination-set partitioning by dynamic merging of sector partitions.

The plane around a source node splits into eight sectors P0..P7 (counter
clockwise from "strictly north-east").  Candidates are the eight basic
sectors plus every union of 2 or 3 circularly consecutive sectors; each
candidate has a representative (nearest member to the source), a cost
(cheaper of multi-unicast and dual-path delivery from the representative)
and, for merged candidates, a saving relative to serving the constituent
sectors separately.  The greedy loop repeatedly takes the largest positive
saving, retires every candidate sharing a constituent index, and finally
appends the untouched non-empty sectors.

`exact_optimal_partition` solves the same covering problem exhaustively
over the <= 24 candidates and is the test oracle for the greedy result.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .routing import RouteMode
from .topology import Coord, Mesh


class PartitionError(ValueError):
    pass


class CostModel(enum.Enum):
    # Cost measured from the representative only.
    FROM_REPRESENTATIVE = "from_representative"
    # Plus the source-to-representative Manhattan leg (default: actual delivered hops).
    INCLUDE_APPROACH_LEG = "include_approach_leg"


#: (dx sign, dy sign) predicates for sectors P0..P7, dx = lx-sx, dy = ly-sy.
_SECTOR_PREDICATES = (
    lambda dx, dy: dx > 0 and dy > 0,   # P0
    lambda dx, dy: dx == 0 and dy > 0,  # P1
    lambda dx, dy: dx < 0 and dy > 0,   # P2
    lambda dx, dy: dx < 0 and dy == 0,  # P3
    lambda dx, dy: dx < 0 and dy < 0,   # P4
    lambda dx, dy: dx == 0 and dy < 0,  # P5
    lambda dx, dy: dx > 0 and dy < 0,   # P6
    lambda dx, dy: dx > 0 and dy == 0,  # P7
)


def classify(dest: Coord, source: Coord) -> int:
    """Sector index 0..7 of dest relative to source."""
    if dest == source:
        raise PartitionError("source is never a destination")
    dx, dy = dest[0] - source[0], dest[1] - source[1]
    for i, pred in enumerate(_SECTOR_PREDICATES):
        if pred(dx, dy):
            return i
    raise AssertionError("sector predicates must tile the plane")  # pragma: no cover


def basic_partitions(dests: set[Coord], source: Coord) -> list[frozenset[Coord]]:
    """The eight mutually exclusive sector member sets (some may be empty)."""
    if source in dests:
        raise PartitionError("source is never a destination")
    buckets: list[set[Coord]] = [set() for _ in range(8)]
    for d in dests:
        buckets[classify(d, source)].add(d)
    return [frozenset(b) for b in buckets]


def manhattan(a: Coord, b: Coord) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def representative(members: frozenset[Coord] | set[Coord], source: Coord,
                   mesh: Mesh) -> Coord:
    """Member nearest to the source, ties broken by smallest label."""
    if not members:
        raise PartitionError("empty member set has no representative")
    return min(members, key=lambda d: (manhattan(d, source), mesh.label_of(d)))


def cost_multi_unicast(members: frozenset[Coord] | set[Coord], rep: Coord) -> int:
    """Sum of Manhattan distances from the representative to every member."""
    if rep not in members:
        raise PartitionError(f"representative {rep} not in member set")
    return sum(manhattan(rep, d) for d in members)


def cost_dual_path(members: frozenset[Coord] | set[Coord], rep: Coord, mesh: Mesh) -> int:
    """Hops of the two label-monotone chains from the representative.

    Every monotone subnet leg takes exactly Manhattan-many hops (the next-hop
    walk is distance-minimal; asserted exhaustively in the test suite), so the
    chain cost is the sum of Manhattan legs, no path walk required.
    """
    if rep not in members:
        raise PartitionError(f"representative {rep} not in member set")
    lr = mesh.label_of(rep)
    high = sorted((d for d in members if mesh.label_of(d) > lr), key=mesh.label_of)
    low = sorted((d for d in members if mesh.label_of(d) < lr), key=mesh.label_of,
                 reverse=True)
    total = 0
    for chain in (high, low):
        here = rep
        for d in chain:
            total += abs(d[0] - here[0]) + abs(d[1] - here[1])
            here = d
    return total


def cost(members: frozenset[Coord] | set[Coord], source: Coord, mesh: Mesh,
         cost_model: CostModel) -> tuple[int, RouteMode]:
    """(hops, delivery mode); multi-unicast wins ties (no chain bookkeeping needed)."""
    if not members:
        return 0, RouteMode.MULTI_UNICAST
    rep = representative(members, source, mesh)
    c_t = cost_multi_unicast(members, rep)
    c_p = cost_dual_path(members, rep, mesh)
    base = min(c_t, c_p)
    if cost_model is CostModel.INCLUDE_APPROACH_LEG:
        base += manhattan(source, rep)
    return base, (RouteMode.MULTI_UNICAST if c_t <= c_p else RouteMode.DUAL_PATH)


@dataclass(frozen=True)
class CandidateSet:
    """One element of the search collection: a sector or a merge of 2-3 sectors."""

    constituents: tuple[int, ...]
    members: frozenset[Coord]
    representative: Coord | None
    cost: int
    mode: RouteMode
    saving: int = 0
    eligible: bool = False  # merged candidates with >= 2 non-empty constituents

    @property
    def merged(self) -> bool:
        return len(self.constituents) > 1


@dataclass(frozen=True)
class FinalPartition:
    sets: tuple[CandidateSet, ...]
    total_cost: int
    merge_iterations: int
    cost_model: CostModel


def _constituent_tuples() -> list[tuple[int, ...]]:
    singles = [(i,) for i in range(8)]
    pairs = [(i, (i + 1) % 8) for i in range(8)]
    triples = [(i, (i + 1) % 8, (i + 2) % 8) for i in range(8)]
    return singles + pairs + triples


def candidate_sets(parts: list[frozenset[Coord]], source: Coord, mesh: Mesh,
                   cost_model: CostModel) -> list[CandidateSet]:
    """All 24 candidates (8 singles, 8 pairs, 8 triples) with costs and savings."""
    if len(parts) != 8:
        raise PartitionError("expected 8 basic partitions")
    single_cost = [cost(p, source, mesh, cost_model)[0] for p in parts]
    out = []
    for cons in _constituent_tuples():
        members = frozenset().union(*(parts[i] for i in cons))
        c, mode = cost(members, source, mesh, cost_model)
        rep = representative(members, source, mesh) if members else None
        nonempty = sum(1 for i in cons if parts[i])
        merged = len(cons) > 1
        saving = 0
        eligible = False
        if merged and nonempty >= 2:
            eligible = True
            saving = max(0, sum(single_cost[i] for i in cons) - c)
        out.append(CandidateSet(constituents=cons, members=members, representative=rep,
                                cost=c, mode=mode, saving=saving, eligible=eligible))
    return out


def saving(merged: CandidateSet, parts: list[CandidateSet]) -> int:
    """max(0, sum of constituent costs - merged cost)."""
    union = frozenset().union(*(p.members for p in parts))
    if union != merged.members:
        raise PartitionError("constituent members do not union to the merged set")
    return max(0, sum(p.cost for p in parts) - merged.cost)


def dpm_partition(dests: set[Coord], source: Coord, mesh: Mesh,
                  cost_model: CostModel = CostModel.INCLUDE_APPROACH_LEG) -> FinalPartition:
    """Greedy max-saving merge selection plus leftover sectors.

    Each selection consumes at least two of the eight sector indices, so the
    loop runs at most four times.  Ties on saving prefer fewer constituents,
    then the smaller starting sector index.
    """
    if not dests:
        raise PartitionError("empty destination set")
    for d in dests:
        mesh.check_bounds(d)
    mesh.check_bounds(source)
    parts = basic_partitions(dests, source)
    cands = candidate_sets(parts, source, mesh, cost_model)
    savings = {c.constituents: c.saving for c in cands if c.eligible}
    chosen: list[CandidateSet] = []
    consumed: set[int] = set()
    iterations = 0
    while True:
        best = None
        for c in cands:
            if not c.eligible or savings[c.constituents] <= 0:
                continue
            key = (-savings[c.constituents], len(c.constituents), c.constituents[0])
            if best is None or key < best[0]:
                best = (key, c)
        if best is None:
            break
        sel = best[1]
        chosen.append(sel)
        iterations += 1
        consumed.update(sel.constituents)
        for c in cands:
            if c.eligible and set(c.constituents) & set(sel.constituents):
                savings[c.constituents] = 0
    # Leftover non-empty sectors keep their own representative and mode.
    for c in cands:
        if not c.merged and c.members and c.constituents[0] not in consumed:
            chosen.append(c)
    total = sum(c.cost for c in chosen)
    return FinalPartition(sets=tuple(chosen), total_cost=total,
                          merge_iterations=iterations, cost_model=cost_model)


def basic_partition_cost(dests: set[Coord], source: Coord, mesh: Mesh,
                         cost_model: CostModel = CostModel.INCLUDE_APPROACH_LEG) -> int:
    """Total cost of serving the eight sectors separately (no merging)."""
    return sum(cost(p, source, mesh, cost_model)[0]
               for p in basic_partitions(dests, source) if p)


def exact_optimal_partition(
    dests: set[Coord], source: Coord, mesh: Mesh,
    cost_model: CostModel = CostModel.INCLUDE_APPROACH_LEG,
) -> tuple[int, FinalPartition]:
    """Minimum-cost exact cover of the destinations over the candidate collection.

    Exhaustive branch-and-bound over which candidate covers the lowest
    remaining non-empty sector; feasible because candidates only group
    circularly consecutive sectors.
    """
    if not dests:
        raise PartitionError("empty destination set")
    if source in dests:
        raise PartitionError("source is never a destination")
    parts = basic_partitions(dests, source)
    cands = candidate_sets(parts, source, mesh, cost_model)
    nonempty = frozenset(i for i in range(8) if parts[i])
    # Candidates keyed by the non-empty sectors they cover; keep the cheapest
    # per coverage signature (duplicates arise from empty constituents).
    by_cover: dict[frozenset[int], CandidateSet] = {}
    for c in cands:
        if not c.members:
            continue
        cover = frozenset(i for i in c.constituents if parts[i])
        prev = by_cover.get(cover)
        if prev is None or (c.cost, len(c.constituents)) < (prev.cost, len(prev.constituents)):
            by_cover[cover] = c
    options = sorted(by_cover.items(), key=lambda kv: (min(kv[0]), kv[1].cost))

    best_cost = [float("inf")]
    best_sets: list[tuple[CandidateSet, ...]] = [()]

    def search(uncovered: frozenset[int], acc_cost: int, acc: tuple[CandidateSet, ...]) -> None:
        if acc_cost >= best_cost[0]:
            return
        if not uncovered:
            best_cost[0] = acc_cost
            best_sets[0] = acc
            return
        pivot = min(uncovered)
        for cover, cand in options:
            if pivot in cover and cover <= uncovered:
                search(uncovered - cover, acc_cost + cand.cost, acc + (cand,))

    search(nonempty, 0, ())
    assert best_cost[0] != float("inf")
    fp = FinalPartition(sets=best_sets[0], total_cost=int(best_cost[0]),
                        merge_iterations=0, cost_model=cost_model)
    return int(best_cost[0]), fp
