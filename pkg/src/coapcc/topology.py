"""The four evaluation topologies and their static sink-rooted routing tree."""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

SPACING = 10.0
DEFAULT_TX_RANGE = 10.0


class Role(str, enum.Enum):
    CLIENT = "client"
    PRIMARY_SINK = "sink"
    SECONDARY_SINK = "secondary"
    BORDER_RELAY = "relay"


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    role: Role


class RoutingError(RuntimeError):
    """The tx-range graph leaves some node without a path to the sink."""


@dataclass
class Topology:
    name: str
    nodes: list[Node]
    tx_range: float = DEFAULT_TX_RANGE
    routes: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for i, n in enumerate(self.nodes):
            if n.id != i:
                raise ValueError("node ids must be 0..n-1 in order")
        if sum(n.role is Role.BORDER_RELAY for n in self.nodes) != 1:
            raise ValueError("topology needs exactly one border relay")
        if sum(n.role is Role.PRIMARY_SINK for n in self.nodes) != 1:
            raise ValueError("topology needs exactly one primary sink")
        if not self.routes:
            self.routes = compute_routes(self)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def sink(self) -> int:
        return next(n.id for n in self.nodes if n.role is Role.PRIMARY_SINK)

    @property
    def relay(self) -> int:
        return next(n.id for n in self.nodes if n.role is Role.BORDER_RELAY)

    @property
    def clients(self) -> list[int]:
        return [n.id for n in self.nodes if n.role is Role.CLIENT]

    def distance(self, a: int, b: int) -> float:
        na, nb = self.nodes[a], self.nodes[b]
        return math.hypot(na.x - nb.x, na.y - nb.y)

    def next_hop(self, node: int, destination: int) -> int | None:
        if node == destination:
            return None
        return self.routes[(node, destination)]

    def hop_count(self, node: int, destination: int) -> int:
        hops = 0
        while node != destination:
            node = self.routes[(node, destination)]
            hops += 1
            if hops > len(self.nodes):
                raise RoutingError("routing loop")
        return hops

    def with_roles(self, overrides: dict[int, Role]) -> "Topology":
        """Copy with some roles reassigned; routes are recomputed."""
        nodes = [Node(n.id, n.x, n.y, overrides.get(n.id, n.role)) for n in self.nodes]
        return Topology(self.name, nodes, self.tx_range)

    def export(self) -> str:
        """Tab-separated ``id x y role next_hop`` table (next hop toward the sink)."""
        lines = ["id\tx\ty\trole\tnext_hop"]
        sink = self.sink
        for n in self.nodes:
            nh = self.next_hop(n.id, sink)
            lines.append(f"{n.id}\t{n.x:g}\t{n.y:g}\t{n.role.value}\t{'-' if nh is None else nh}")
        return "\n".join(lines) + "\n"


def neighbors(topology: Topology, node: int, tx_range: float | None = None) -> set[int]:
    r = topology.tx_range if tx_range is None else tx_range
    return {
        other.id for other in topology.nodes
        if other.id != node and topology.distance(node, other.id) <= r + 1e-9
    }


def _bfs_depths(topology: Topology, root: int, adj: list[list[int]]) -> list[int]:
    depth = [-1] * len(topology)
    depth[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if depth[v] < 0:
                depth[v] = depth[u] + 1
                queue.append(v)
    return depth


def compute_routes(topology: Topology) -> dict[tuple[int, int], int]:
    """Shortest-path tree rooted at the primary sink, lowest-id parent on ties.

    Every (node, destination) pair gets a next hop along the tree: up toward
    the sink unless the destination lies in the node's subtree, in which case
    down toward it. ACKs therefore retrace their request's path.
    """
    n = len(topology)
    adj = [sorted(neighbors(topology, u)) for u in range(n)]
    sink = topology.sink
    depth = _bfs_depths(topology, sink, adj)
    unreachable = [u for u in range(n) if depth[u] < 0]
    if unreachable:
        raise RoutingError(f"nodes {unreachable} cannot reach sink {sink}")

    parent: list[int | None] = [None] * n
    for u in range(n):
        if u != sink:
            parent[u] = min(v for v in adj[u] if depth[v] == depth[u] - 1)

    # ancestors-or-self path from each node up to the sink
    paths = []
    for u in range(n):
        path = [u]
        while path[-1] != sink:
            path.append(parent[path[-1]])
        paths.append(path)

    routes: dict[tuple[int, int], int] = {}
    for dest in range(n):
        down = paths[dest]  # dest, parent(dest), ..., sink
        child_toward = {down[i + 1]: down[i] for i in range(len(down) - 1)}
        for u in range(n):
            if u == dest:
                continue
            routes[(u, dest)] = child_toward.get(u, parent[u])
    return routes


def build_chain(n: int = 17) -> Topology:
    """Line of *n* nodes, sink at one end and the relay in the middle."""
    relay = n // 2
    nodes = []
    for i in range(n):
        role = Role.PRIMARY_SINK if i == 0 else Role.BORDER_RELAY if i == relay else Role.CLIENT
        nodes.append(Node(i, i * SPACING, 0.0, role))
    return Topology("chain", nodes)


def build_dumbbell() -> Topology:
    """Two 3x3 clusters bridged by three nodes; 21 nodes in total.

    The left cluster holds the nine clients, the bridge midpoint is the
    relay, and the sink sits in the middle of the right cluster. The other
    right-cluster and bridge-end nodes only forward.
    """
    coords: list[tuple[float, float, str]] = []
    for row in range(3):
        for col in range(3):
            coords.append((col * SPACING, row * SPACING, "left"))
    for k in range(3):
        coords.append(((3 + k) * SPACING, SPACING, "bridge"))
    for row in range(3):
        for col in range(3):
            coords.append(((6 + col) * SPACING, row * SPACING, "right"))
    nodes = []
    for i, (x, y, part) in enumerate(coords):
        if part == "left":
            role = Role.CLIENT
        elif part == "bridge":
            role = Role.BORDER_RELAY if x == 4 * SPACING else Role.SECONDARY_SINK
        else:
            role = Role.PRIMARY_SINK if (x, y) == (7 * SPACING, SPACING) else Role.SECONDARY_SINK
        nodes.append(Node(i, x, y, role))
    return Topology("dumbbell", nodes)


def build_grid(side: int) -> Topology:
    if side not in (6, 7):
        raise ValueError(f"grid side must be 6 or 7, got {side}")
    centre = side // 2
    relay = centre * side + centre
    sink = centre * side + centre - 1  # left neighbour of the relay
    nodes = []
    for row in range(side):
        for col in range(side):
            i = row * side + col
            role = Role.BORDER_RELAY if i == relay else Role.PRIMARY_SINK if i == sink else Role.CLIENT
            nodes.append(Node(i, col * SPACING, row * SPACING, role))
    return Topology(f"grid{side}", nodes)


TOPOLOGIES = {
    "chain": build_chain,
    "dumbbell": build_dumbbell,
    "grid6": lambda: build_grid(6),
    "grid7": lambda: build_grid(7),
}


def build(name: str) -> Topology:
    try:
        return TOPOLOGIES[name]()
    except KeyError:
        raise ValueError(f"unknown topology {name!r} (expected one of: {', '.join(TOPOLOGIES)})") from None
