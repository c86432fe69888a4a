"""CoAP reliability layer: CON/ACK exchanges, NSTART gating and retransmission."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from coapcc import cc_policies as cc

NS = 1_000_000_000
REQUEST_SIZE = 71
ACK_SIZE = 11
MAX_RETRANSMIT = 4
NSTART = 1
DEDUP_WINDOW = 64


class Kind(str, enum.Enum):
    CON = "CON"
    NON = "NON"
    ACK = "ACK"
    RST = "RST"


class ExchangeState(str, enum.Enum):
    QUEUED = "queued"
    IN_FLIGHT = "in_flight"
    ACKED = "acked"
    FAILED = "failed"
    DECLINED = "declined"


class Message:
    __slots__ = ("kind", "message_id", "source", "destination", "payload_size",
                 "created_at", "exchange")

    def __init__(self, kind: Kind, message_id: int, source: int, destination: int,
                 payload_size: int, created_at: int, exchange: "Exchange | None" = None) -> None:
        self.kind = kind
        self.message_id = message_id
        self.source = source
        self.destination = destination
        self.payload_size = payload_size
        self.created_at = created_at
        # back-reference used only for metrics bookkeeping, never for protocol decisions
        self.exchange = exchange


class Exchange:
    __slots__ = ("uid", "message", "transmission_count", "rto_init", "rto_current",
                 "first_tx_time", "deadline", "state", "received_at", "ended_at")

    def __init__(self, uid: int, message: Message) -> None:
        self.uid = uid
        self.message = message
        self.transmission_count = 0
        self.rto_init = 0.0
        self.rto_current = 0.0
        self.first_tx_time: int | None = None
        # generation counter of the armed RTO timer; None while not armed
        self.deadline: int | None = None
        self.state = ExchangeState.QUEUED
        self.received_at: int | None = None
        self.ended_at: int | None = None

    @property
    def created_at(self) -> int:
        return self.message.created_at


@dataclass
class EndpointQueue:
    destination: int
    cc_state: cc.CcState
    in_flight: int = 0
    waiting: deque = field(default_factory=deque)
    active: dict[int, Exchange] = field(default_factory=dict)  # message_id -> InFlight


@dataclass
class LayerCounters:
    retransmissions: int = 0
    failed: int = 0
    acked: int = 0
    stale_acks: int = 0
    anomalies: int = 0
    duplicates: int = 0
    declined: int = 0
    acks_sent: int = 0


class CoapLayer:
    """Message layer for every node of one simulation.

    ``send(node, message)`` hands a message to the network for its first hop;
    ``sim`` provides ``now`` (ns) and ``at(time_ns, fn, arg)``.
    """

    def __init__(self, sim, policy: cc.PolicyKind, params: cc.PolicyParams, streams,
                 send, trace: list | None = None, queue_limit: int | None = None) -> None:
        self.sim = sim
        self.policy = policy
        self.params = params
        self.streams = streams
        self.send = send
        self.trace = trace
        self.queue_limit = queue_limit
        self.endpoints: dict[tuple[int, int], EndpointQueue] = {}
        self.next_mid: dict[int, int] = {}
        self.seen: dict[int, tuple[deque, set]] = {}
        self.exchanges: list[Exchange] = []
        self.counters = LayerCounters()
        self._timer_gen = 0

    def _log(self, kind: str, node: int, ex: Exchange) -> None:
        if self.trace is not None:
            self.trace.append((self.sim.now, kind, node, ex.uid))

    def endpoint(self, node: int, destination: int) -> EndpointQueue:
        ep = self.endpoints.get((node, destination))
        if ep is None:
            rng = self.streams.get(node, f"cc-{destination}")
            ep = EndpointQueue(destination, cc.new_state(self.policy, rng, self.params))
            self.endpoints[(node, destination)] = ep
        return ep

    def allocate_message_id(self, node: int, destination: int) -> int:
        ep = self.endpoint(node, destination)
        busy = set(ep.active)
        busy.update(ex.message.message_id for ex in ep.waiting)
        mid = self.next_mid.get(node, 0)
        for _ in range(1 << 16):
            if mid not in busy:
                break
            mid = (mid + 1) & 0xFFFF
        else:
            raise RuntimeError("message id space exhausted")
        self.next_mid[node] = (mid + 1) & 0xFFFF
        return mid

    # -- client side ---------------------------------------------------------

    def submit_request(self, node: int, destination: int) -> Exchange:
        now = self.sim.now
        ep = self.endpoint(node, destination)
        mid = self.allocate_message_id(node, destination)
        msg = Message(Kind.CON, mid, node, destination, REQUEST_SIZE, now)
        ex = Exchange(len(self.exchanges), msg)
        msg.exchange = ex
        self.exchanges.append(ex)
        self._log("submit", node, ex)
        if ep.in_flight < NSTART:
            self._start(node, ep, ex)
        elif self.queue_limit is not None and len(ep.waiting) >= self.queue_limit:
            ex.state = ExchangeState.DECLINED
            ex.ended_at = now
            self.counters.declined += 1
            self._log("decline", node, ex)
        else:
            ep.waiting.append(ex)
        return ex

    def _start(self, node: int, ep: EndpointQueue, ex: Exchange) -> None:
        now = self.sim.now
        ep.in_flight += 1
        ep.active[ex.message.message_id] = ex
        state = ep.cc_state
        rto = cc.clamp_rto(state, cc.initial_rto(state, now / NS))
        ex.rto_init = ex.rto_current = rto
        ex.first_tx_time = now
        ex.transmission_count = 1
        ex.state = ExchangeState.IN_FLIGHT
        self._log("tx", node, ex)
        self._arm(ex)
        self.send(node, ex.message)

    def _arm(self, ex: Exchange) -> None:
        self._timer_gen += 1
        ex.deadline = self._timer_gen
        self.sim.at(self.sim.now + int(round(ex.rto_current * NS)), self._expire,
                    (ex, self._timer_gen))

    def _expire(self, arg: tuple[Exchange, int]) -> None:
        ex, gen = arg
        if ex.state is ExchangeState.IN_FLIGHT and ex.deadline == gen:
            self.on_rto_expiry(ex)

    def on_rto_expiry(self, ex: Exchange) -> None:
        node = ex.message.source
        ep = self.endpoints[(node, ex.message.destination)]
        if ex.transmission_count <= MAX_RETRANSMIT:
            ex.transmission_count += 1
            state = ep.cc_state
            ex.rto_current = cc.clamp_rto(
                state, cc.backoff(state, cc.BackoffInputs(ex.rto_current, ex.rto_init)))
            self.counters.retransmissions += 1
            self._log("retx", node, ex)
            self._arm(ex)
            self.send(node, ex.message)
        else:
            ex.state = ExchangeState.FAILED
            ex.deadline = None
            ex.ended_at = self.sim.now
            self.counters.failed += 1
            self._log("fail", node, ex)
            self._release(node, ep, ex)

    def _release(self, node: int, ep: EndpointQueue, ex: Exchange) -> None:
        del ep.active[ex.message.message_id]
        ep.in_flight -= 1
        if ep.waiting:
            self._start(node, ep, ep.waiting.popleft())

    # -- receive path --------------------------------------------------------

    def on_receive(self, node: int, msg: Message) -> None:
        if msg.kind is Kind.CON:
            self._on_con(node, msg)
        elif msg.kind is Kind.ACK:
            self._on_ack(node, msg)
        else:
            self.counters.anomalies += 1

    def _on_con(self, node: int, msg: Message) -> None:
        window = self.seen.get(msg.source)
        if window is None:
            window = self.seen[msg.source] = (deque(), set())
        order, ids = window
        if msg.message_id in ids:
            self.counters.duplicates += 1
        else:
            order.append(msg.message_id)
            ids.add(msg.message_id)
            if len(order) > DEDUP_WINDOW:
                ids.discard(order.popleft())
            ex = msg.exchange
            if ex is not None and ex.received_at is None:
                ex.received_at = self.sim.now
        ack = Message(Kind.ACK, msg.message_id, node, msg.source, ACK_SIZE, self.sim.now)
        self.counters.acks_sent += 1
        self.send(node, ack)

    def _on_ack(self, node: int, msg: Message) -> None:
        ep = self.endpoints.get((node, msg.source))
        ex = ep.active.get(msg.message_id) if ep is not None else None
        if ex is None or ex.state is not ExchangeState.IN_FLIGHT:
            self.counters.stale_acks += 1
            return
        now = self.sim.now
        ex.state = ExchangeState.ACKED
        ex.deadline = None
        ex.ended_at = now
        self.counters.acked += 1
        rtt = (now - ex.first_tx_time) / NS
        cc.on_rtt_sample(ep.cc_state, rtt, ex.transmission_count, now / NS)
        self._log("ack", node, ex)
        self._release(node, ep, ex)
