import itertools

import pytest

from coapcc.topology import (Node, Role, RoutingError, Topology, build, build_chain, build_dumbbell,
                             build_grid, neighbors, TOPOLOGIES)


def floyd_warshall(topo):
    n = len(topo)
    inf = float("inf")
    d = [[0 if i == j else (1 if topo.distance(i, j) <= topo.tx_range + 1e-9 else inf)
          for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def test_chain_shape():
    t = build_chain()
    assert len(t) == 17
    assert max(t.hop_count(c, t.sink) for c in t.clients) == 16
    assert all(t.distance(i, i + 1) == 10.0 for i in range(16))
    assert t.next_hop(3, t.sink) == 2
    assert t.next_hop(t.sink, t.sink) is None


def test_dumbbell_shape():
    t = build_dumbbell()
    assert len(t) == 21
    assert len(t.clients) == 9
    relay = t.relay
    for c in t.clients:
        node, path = c, []
        while node != t.sink:
            node = t.next_hop(node, t.sink)
            path.append(node)
        assert relay in path


def test_dumbbell_bridge_is_cut_vertex():
    t = build_dumbbell()
    relay = t.relay
    seen, stack = {t.clients[0]}, [t.clients[0]]
    while stack:
        u = stack.pop()
        for v in neighbors(t, u):
            if v != relay and v not in seen:
                seen.add(v)
                stack.append(v)
    assert t.sink not in seen


@pytest.mark.parametrize("side", [6, 7])
def test_grid_shape(side):
    t = build_grid(side)
    assert len(t) == side * side
    r = t.nodes[t.relay]
    if side == 7:
        assert (r.x, r.y) == (30.0, 30.0)
    assert t.distance(t.relay, t.sink) == 10.0
    for n in t.nodes:
        interior = 0 < n.x < (side - 1) * 10 and 0 < n.y < (side - 1) * 10
        if interior:
            assert len(neighbors(t, n.id)) == 4


@pytest.mark.parametrize("side", [6, 7])
def test_grid_corner_hops_are_manhattan(side):
    t = build_grid(side)
    s = t.nodes[t.sink]
    for corner in (0, side - 1, side * (side - 1), side * side - 1):
        c = t.nodes[corner]
        assert t.hop_count(corner, t.sink) == (abs(c.x - s.x) + abs(c.y - s.y)) / 10


def test_grid_rejects_other_sides():
    with pytest.raises(ValueError):
        build_grid(5)


@pytest.mark.parametrize("name", list(TOPOLOGIES))
def test_routes_are_shortest_and_in_range(name):
    t = build(name)
    d = floyd_warshall(t)
    for u, v in itertools.permutations(range(len(t)), 2):
        nh = t.next_hop(u, v)
        assert t.distance(u, nh) <= t.tx_range + 1e-9
    for u in range(len(t)):
        if u != t.sink:
            assert t.hop_count(u, t.sink) == d[u][t.sink] <= len(t) - 1
            assert t.hop_count(t.sink, u) == d[u][t.sink]


@pytest.mark.parametrize("name", list(TOPOLOGIES))
def test_ack_path_reverses_request_path(name):
    t = build(name)
    for c in t.clients:
        up = [c]
        while up[-1] != t.sink:
            up.append(t.next_hop(up[-1], t.sink))
        down = [t.sink]
        while down[-1] != c:
            down.append(t.next_hop(down[-1], c))
        assert down == up[::-1]


def test_routing_is_deterministic():
    assert build("grid7").routes == build("grid7").routes


def test_unreachable_node_raises():
    nodes = [Node(0, 0, 0, Role.PRIMARY_SINK), Node(1, 10, 0, Role.BORDER_RELAY),
             Node(2, 50, 0, Role.CLIENT)]
    with pytest.raises(RoutingError):
        Topology("broken", nodes)


def test_role_validation():
    nodes = [Node(0, 0, 0, Role.PRIMARY_SINK), Node(1, 10, 0, Role.CLIENT)]
    with pytest.raises(ValueError, match="relay"):
        Topology("norelay", nodes)


def test_unknown_name():
    with pytest.raises(ValueError, match="grid9"):
        build("grid9")


def test_export_lists_every_node():
    text = build_chain().export()
    lines = text.strip().split("\n")
    assert len(lines) == 18
    assert lines[1].split("\t") == ["0", "0", "0", "sink", "-"]
    assert lines[4].split("\t")[-1] == "2"
