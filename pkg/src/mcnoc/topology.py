"""Mesh geometry, snake labeling, and the high/low channel subnetworks.

Nodes are addressed either by (x, y) coordinates or by their snake label:
row y contributes labels [y*width, (y+1)*width), running left-to-right on
even rows and right-to-left on odd rows.  Consecutive labels are always
mesh neighbors, so the labeling is a Hamiltonian path.

A directed channel (u -> v) belongs to the High subnetwork when
label(v) > label(u) and to the Low subnetwork otherwise.  Confining a
packet leg to one subnetwork makes its label sequence monotone, which is
what the deadlock argument rests on; `channel_dependency_graph` checks
that claim mechanically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

Coord = tuple[int, int]


class Subnet(enum.Enum):
    HIGH = "high"
    LOW = "low"


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh:
    """A width x height 2D mesh, width >= 2 and height >= 2, no wraparound."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise TopologyError(f"mesh must be at least 2x2, got {self.width}x{self.height}")

    @property
    def node_count(self) -> int:
        return self.width * self.height

    def in_bounds(self, coord: Coord) -> bool:
        x, y = coord
        return 0 <= x < self.width and 0 <= y < self.height

    def check_bounds(self, coord: Coord) -> None:
        if not self.in_bounds(coord):
            raise TopologyError(f"coordinate {coord} outside {self.width}x{self.height} mesh")

    def label_of(self, coord: Coord) -> int:
        """Snake label: y*w+x on even rows, y*w+w-x-1 on odd rows."""
        self.check_bounds(coord)
        x, y = coord
        if y % 2 == 0:
            return y * self.width + x
        return y * self.width + self.width - x - 1

    def coord_of(self, label: int) -> Coord:
        if not 0 <= label < self.node_count:
            raise TopologyError(f"label {label} outside [0, {self.node_count})")
        y, r = divmod(label, self.width)
        x = r if y % 2 == 0 else self.width - r - 1
        return (x, y)

    def neighbors(self, coord: Coord) -> list[Coord]:
        """4-connected neighbors, no wraparound."""
        self.check_bounds(coord)
        x, y = coord
        out = []
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < self.width and 0 <= ny < self.height:
                out.append((nx, ny))
        return out

    def channel_subnet(self, frm: Coord, to: Coord) -> Subnet:
        if abs(frm[0] - to[0]) + abs(frm[1] - to[1]) != 1:
            raise TopologyError(f"{frm} and {to} are not adjacent")
        return Subnet.HIGH if self.label_of(to) > self.label_of(frm) else Subnet.LOW

    def channels(self) -> list[tuple[int, int]]:
        """All directed channels as (label_u, label_v) pairs, sorted."""
        out = []
        for lbl in range(self.node_count):
            c = self.coord_of(lbl)
            for n in self.neighbors(c):
                out.append((lbl, self.label_of(n)))
        out.sort()
        return out


@lru_cache(maxsize=64)
def _tables(mesh: Mesh) -> "RouteTables":
    n = mesh.node_count
    adj: list[list[int]] = []
    for lbl in range(n):
        adj.append(sorted(mesh.label_of(c) for c in mesh.neighbors(mesh.coord_of(lbl))))
    # next_high[u][d]: neighbor of u with the largest label <= d (requires d > u);
    # next_low[u][d]: neighbor with the smallest label >= d (requires d < u).
    next_high = [[-1] * n for _ in range(n)]
    next_low = [[-1] * n for _ in range(n)]
    for u in range(n):
        nbrs = adj[u]
        for d in range(n):
            if d > u:
                next_high[u][d] = max(v for v in nbrs if v <= d)
            elif d < u:
                next_low[u][d] = min(v for v in nbrs if v >= d)
    # XY next hop (x first, then y), by label.
    next_xy = [[-1] * n for _ in range(n)]
    for u in range(n):
        ux, uy = mesh.coord_of(u)
        for d in range(n):
            if d == u:
                continue
            dx, dy = mesh.coord_of(d)
            if ux != dx:
                step = (ux + (1 if dx > ux else -1), uy)
            else:
                step = (ux, uy + (1 if dy > uy else -1))
            next_xy[u][d] = mesh.label_of(step)
    return RouteTables(mesh=mesh, adjacency=adj, next_high=next_high,
                       next_low=next_low, next_xy=next_xy)


@dataclass(frozen=True)
class RouteTables:
    """Precomputed per-mesh adjacency and next-hop tables, keyed by label."""

    mesh: Mesh
    adjacency: list[list[int]] = field(repr=False)
    next_high: list[list[int]] = field(repr=False)
    next_low: list[list[int]] = field(repr=False)
    next_xy: list[list[int]] = field(repr=False)

    @staticmethod
    def for_mesh(mesh: Mesh) -> "RouteTables":
        return _tables(mesh)


@dataclass
class DependencyVerdict:
    acyclic: bool
    # A witness cycle of directed channels when cyclic, else empty.
    witness: list[tuple[int, int]]
    edge_count: int


def hamiltonian_routing_relation(mesh: Mesh) -> set[tuple[tuple[int, int], tuple[int, int]]]:
    """Hold/request pairs of channels under monotone high/low subnet routing.

    A packet holding (u -> v) on its way to destination d can request
    (v -> w) where w is the next hop from v toward d, provided u was also
    on the routed path (next hop from u toward d is v).  Legs never switch
    subnet mid-flight, so only same-subnet continuations appear.
    """
    t = RouteTables.for_mesh(mesh)
    n = mesh.node_count
    rel: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    for u in range(n):
        for d in range(n):
            if d == u:
                continue
            v = t.next_high[u][d] if d > u else t.next_low[u][d]
            if v == d:
                continue
            w = t.next_high[v][d] if d > v else t.next_low[v][d]
            rel.add(((u, v), (v, w)))
    return rel


def all_turns_routing_relation(mesh: Mesh) -> set[tuple[tuple[int, int], tuple[int, int]]]:
    """Unrestricted relation: any channel may request any continuation but a U-turn."""
    rel = set()
    for (u, v) in mesh.channels():
        for (v2, w) in mesh.channels():
            if v2 == v and w != u:
                rel.add(((u, v), (v, w)))
    return rel


def channel_dependency_graph(
    mesh: Mesh,
    relation: set[tuple[tuple[int, int], tuple[int, int]]] | None = None,
) -> DependencyVerdict:
    """Build the channel dependency graph for a routing relation and test acyclicity.

    Defaults to the Hamiltonian high/low subnet relation.  Returns a witness
    cycle (list of channels) when a cycle exists.
    """
    if relation is None:
        relation = hamiltonian_routing_relation(mesh)
    succ: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for c1, c2 in sorted(relation):
        succ.setdefault(c1, []).append(c2)
    # Iterative DFS with colors; extract a cycle from the stack on a back edge.
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[tuple[int, int], int] = {}
    for start in sorted(succ):
        if color.get(start, WHITE) != WHITE:
            continue
        stack: list[tuple[tuple[int, int], int]] = [(start, 0)]
        path: list[tuple[int, int]] = []
        color[start] = GRAY
        path.append(start)
        while stack:
            node, idx = stack[-1]
            nxt = succ.get(node, [])
            if idx < len(nxt):
                stack[-1] = (node, idx + 1)
                child = nxt[idx]
                st = color.get(child, WHITE)
                if st == GRAY:
                    cyc = path[path.index(child):] + [child]
                    return DependencyVerdict(acyclic=False, witness=cyc,
                                             edge_count=len(relation))
                if st == WHITE:
                    color[child] = GRAY
                    path.append(child)
                    stack.append((child, 0))
            else:
                color[node] = BLACK
                path.pop()
                stack.pop()
    return DependencyVerdict(acyclic=True, witness=[], edge_count=len(relation))


def xy_approach_relation(mesh: Mesh) -> set[tuple[tuple[int, int], tuple[int, int]]]:
    """Hamiltonian relation augmented with XY-routed legs (alternate approach mode)."""
    t = RouteTables.for_mesh(mesh)
    n = mesh.node_count
    rel = set(hamiltonian_routing_relation(mesh))
    for u in range(n):
        for d in range(n):
            if d == u:
                continue
            v = t.next_xy[u][d]
            if v == d:
                continue
            w = t.next_xy[v][d]
            rel.add(((u, v), (v, w)))
    return rel
