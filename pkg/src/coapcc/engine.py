"""Discrete-event kernel, seeded random streams and the constant-traffic run."""

from __future__ import annotations

import enum
import hashlib
import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Callable

from coapcc import cc_policies as cc
from coapcc.messages import REQUEST_SIZE, CoapLayer, Message
from coapcc.metrics import MetricsRecord, collect_metrics
from coapcc.radio import Frame, MacParams, Medium, RadioParams
from coapcc.topology import Topology, build

NS = 1_000_000_000


class SimulationError(RuntimeError):
    """An internal invariant of the event kernel was violated."""


def to_ns(seconds: float) -> int:
    return int(round(seconds * NS))


class Streams:
    """Independent ``random.Random`` streams keyed by (seed, node, purpose).

    Stream seeds come from SHA-256 of the key, so adding a new consumer never
    shifts the draws of an existing one.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._cache: dict[tuple[int, str], random.Random] = {}

    def get(self, node: int, purpose: str) -> random.Random:
        key = (node, purpose)
        rng = self._cache.get(key)
        if rng is None:
            digest = hashlib.sha256(f"{self.seed}/{node}/{purpose}".encode()).digest()
            rng = random.Random(int.from_bytes(digest[:16], "big"))
            self._cache[key] = rng
        return rng


def next_random(stream: random.Random, purpose: str = "") -> float:
    """Uniform draw in [0, 1) from *stream*; *purpose* is informational."""
    return stream.random()


class Simulator:
    """Min-heap event queue ordered by (time_ns, sequence)."""

    def __init__(self) -> None:
        self.now = 0
        self._seq = 0
        self._queue: list = []
        self.executed = 0

    def at(self, time_ns: int, fn: Callable, arg=None) -> None:
        if time_ns < self.now:
            raise SimulationError(f"event scheduled in the past: {time_ns} < {self.now}")
        self._seq += 1
        heapq.heappush(self._queue, (time_ns, self._seq, fn, arg))

    def after(self, delay_ns: int, fn: Callable, arg=None) -> None:
        self.at(self.now + delay_ns, fn, arg)

    def run_until(self, end_ns: int) -> None:
        """Execute every event with time < *end_ns*; later ones stay queued."""
        q = self._queue
        pop = heapq.heappop
        n = 0
        while q and q[0][0] < end_ns:
            t, _, fn, arg = pop(q)
            self.now = t
            fn(arg)
            n += 1
        self.executed += n
        self.now = max(self.now, end_ns)

    def __len__(self) -> int:
        return len(self._queue)


class TrafficMode(str, enum.Enum):
    PERIODIC = "periodic"
    POISSON = "poisson"


@dataclass(frozen=True)
class TrafficSpec:
    offered_load_kbps: float
    clients: int
    message_size: int = REQUEST_SIZE
    mode: TrafficMode = TrafficMode.PERIODIC

    def __post_init__(self) -> None:
        if not 0.1 <= self.offered_load_kbps <= 20:
            raise ValueError(f"offered load must lie in [0.1, 20] kbps, got {self.offered_load_kbps}")
        if self.message_size <= 0:
            raise ValueError("message_size must be positive")


def per_node_interval(spec: TrafficSpec) -> float:
    """Seconds between requests of one client for the network-wide load."""
    if spec.clients < 1:
        raise ValueError("need at least one client")
    return spec.clients * spec.message_size * 8 / (spec.offered_load_kbps * 1000.0)


@dataclass
class Scenario:
    topology: Topology
    policy: cc.PolicyKind
    offered_load_kbps: float
    seed: int = 1
    radio: RadioParams = field(default_factory=RadioParams)
    mac: MacParams = field(default_factory=MacParams)
    cc_params: cc.PolicyParams = field(default_factory=cc.PolicyParams)
    traffic_mode: TrafficMode = TrafficMode.PERIODIC
    warmup: float = 60.0
    duration: float = 900.0
    app_queue_limit: int | None = 1
    trace: bool = False

    @classmethod
    def named(cls, topology: str, policy: str | cc.PolicyKind, load: float, **kw) -> "Scenario":
        pol = policy if isinstance(policy, cc.PolicyKind) else cc.PolicyKind.parse(policy)
        return cls(topology=build(topology), policy=pol, offered_load_kbps=load, **kw)


@dataclass
class RunResult:
    metrics: MetricsRecord
    layer: CoapLayer
    medium: Medium
    sim: Simulator
    event_trace: list | None

    def trace_lines(self) -> list[str]:
        """Event trace as newline-delimited JSON records."""
        if not self.event_trace:
            return []
        return [json.dumps({"t_ns": t, "kind": k, "node": n, "exchange": x})
                for t, k, n, x in self.event_trace]


class _Network:
    """Glues the CoAP layer to the medium through static next-hop routes."""

    def __init__(self, topology: Topology, overhead: int) -> None:
        self.topology = topology
        self.routes = topology.routes
        self.overhead = overhead
        self.medium: Medium | None = None
        self.layer: CoapLayer | None = None

    def send(self, node: int, msg: Message) -> None:
        nh = self.routes[(node, msg.destination)]
        self.medium.enqueue_frame(node, Frame(node, nh, msg, msg.payload_size + self.overhead,
                                              self.medium.sim.now))

    def on_frame(self, node: int, frame: Frame) -> None:
        msg = frame.payload
        if msg.destination == node:
            self.layer.on_receive(node, msg)
        else:
            self.send(node, msg)


def run(scenario: Scenario) -> RunResult:
    sc = scenario
    topo = sc.topology
    if topo.tx_range != sc.radio.tx_range:
        topo = Topology(topo.name, topo.nodes, sc.radio.tx_range)
    streams = Streams(sc.seed)
    sim = Simulator()
    net = _Network(topo, sc.mac.link_overhead)
    positions = [(n.x, n.y) for n in topo.nodes]
    medium = Medium(sim, positions, sc.radio, sc.mac, streams, net.on_frame)
    trace: list | None = [] if sc.trace else None
    layer = CoapLayer(sim, sc.policy, sc.cc_params, streams, net.send, trace, sc.app_queue_limit)
    net.medium, net.layer = medium, layer

    start = to_ns(sc.warmup)
    end = start + to_ns(sc.duration)
    sink = topo.sink
    clients = topo.clients

    if clients:
        spec = TrafficSpec(sc.offered_load_kbps, len(clients), REQUEST_SIZE, sc.traffic_mode)
        interval = per_node_interval(spec)
        interval_ns = to_ns(interval)
        poisson = sc.traffic_mode is TrafficMode.POISSON

        def app_send(node: int) -> None:
            layer.submit_request(node, sink)
            if trace is not None:
                trace.append((sim.now, "app", node, -1))
            rng = streams.get(node, "app")
            gap = to_ns(rng.expovariate(1.0 / interval)) if poisson else interval_ns
            sim.at(sim.now + max(gap, 1), app_send, node)

        for c in clients:
            phase = streams.get(c, "app-phase").random() * interval
            if poisson:
                phase = streams.get(c, "app").expovariate(1.0 / interval)
            sim.at(start + to_ns(phase), app_send, c)

    sim.run_until(end)

    mac_totals = medium.totals()
    metrics = collect_metrics(layer.exchanges, sc.offered_load_kbps, start, end,
                              REQUEST_SIZE, mac_totals, layer.counters, medium.conservation_ok())
    return RunResult(metrics, layer, medium, sim, trace)
