"""Unit-disk radio medium with interference, Bernoulli link loss and a CSMA MAC.

Each node owns a bounded FIFO of frames and transmits the head frame after
sensing the channel. A transmission is heard by every node inside the
sender's interference disk; a frame is lost at its receiver if any other
transmission inside the receiver's interference disk overlaps it in time.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

NS = 1_000_000_000


@dataclass(frozen=True)
class RadioParams:
    tx_range: float = 10.0
    interference_range: float = 20.0
    ldr: float = 1.0
    bitrate: float = 250_000.0
    # "single": one Bernoulli(ldr) draw per attempt; "compound": separate TX
    # and RX draws, each with probability ldr.
    ldr_mode: str = "single"

    def __post_init__(self) -> None:
        if not self.interference_range >= self.tx_range > 0:
            raise ValueError("need interference_range >= tx_range > 0")
        if not 0.0 < self.ldr <= 1.0:
            raise ValueError(f"ldr must lie in (0, 1], got {self.ldr}")
        if self.bitrate <= 0:
            raise ValueError("bitrate must be positive")
        if self.ldr_mode not in ("single", "compound"):
            raise ValueError(f"ldr_mode must be 'single' or 'compound', got {self.ldr_mode!r}")


@dataclass(frozen=True)
class MacParams:
    buffer_capacity: int = 8
    csma_retries: int = 8
    link_retries: int = 3
    backoff_min: float = 0.5e-3
    backoff_max: float = 2.5e-3
    link_overhead: int = 25
    # Mean node-local wait before each link-layer attempt, drawn uniform in
    # [0, 2 * service_time): the duty-cycled receiver's wake-up phase plus
    # stack processing. The channel stays free while waiting.
    service_time: float = 0.0625
    # Link retry k waits an extra uniform [0, 2**k * retry_backoff) seconds.
    retry_backoff: float = 0.004
    # Draw a random backoff before the first clear-channel assessment, as
    # unslotted CSMA does; False sends on an idle channel at once.
    initial_backoff: bool = True

    def __post_init__(self) -> None:
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be >= 1")
        if self.csma_retries < 0 or self.link_retries < 0:
            raise ValueError("retry limits must be >= 0")
        if not 0 <= self.backoff_min <= self.backoff_max:
            raise ValueError("need 0 <= backoff_min <= backoff_max")
        if self.link_overhead < 0 or min(self.service_time, self.retry_backoff) < 0:
            raise ValueError("link_overhead and MAC timing parameters must be >= 0")


def airtime(size_bytes: int, bitrate: float) -> float:
    """Seconds needed to clock *size_bytes* onto the air at *bitrate* bit/s."""
    return size_bytes * 8 / bitrate


class Frame:
    __slots__ = ("link_source", "link_destination", "payload", "size", "enqueued_at",
                 "csma_failures", "link_attempts")

    def __init__(self, link_source: int, link_destination: int, payload, size: int,
                 enqueued_at: int) -> None:
        self.link_source = link_source
        self.link_destination = link_destination
        self.payload = payload
        self.size = size
        self.enqueued_at = enqueued_at
        self.csma_failures = 0
        self.link_attempts = 0


class _Tx:
    __slots__ = ("sender", "receiver", "frame", "corrupt", "rx_start", "end")

    def __init__(self, sender: int, receiver: int, frame: Frame, rx_start: int, end: int) -> None:
        self.sender = sender
        self.receiver = receiver
        self.frame = frame
        self.corrupt = False
        # the receiver decodes during [rx_start, end)
        self.rx_start = rx_start
        self.end = end


@dataclass
class MacCounters:
    enqueued: int = 0
    delivered: int = 0
    mac_overflow: int = 0
    csma_drop: int = 0
    link_retry_exhausted: int = 0
    collisions: int = 0
    link_losses: int = 0
    retries: int = 0
    transmissions: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


@dataclass
class MacState:
    buffer: deque = field(default_factory=deque)
    busy: bool = False
    counters: MacCounters = field(default_factory=MacCounters)


class Medium:
    """Shared channel plus the MAC of every node.

    ``sim`` must provide ``now`` (int ns) and ``at(time_ns, fn, arg)``.
    ``on_frame(node, frame)`` is invoked at the link destination for every
    delivered frame.
    """

    def __init__(self, sim, positions: list[tuple[float, float]], radio: RadioParams,
                 mac: MacParams, streams, on_frame: Callable[[int, Frame], None]) -> None:
        self.sim = sim
        self.radio = radio
        self.mac = mac
        self.on_frame = on_frame
        n = len(positions)
        self.n = n
        self.positions = positions
        self.states = [MacState() for _ in range(n)]
        dist = [[math.hypot(a[0] - b[0], a[1] - b[1]) for b in positions] for a in positions]
        eps = 1e-9
        self.in_range = [[d <= radio.tx_range + eps for d in row] for row in dist]
        self.interferes = [[d <= radio.interference_range + eps for d in row] for row in dist]
        self.interf_list = [[j for j in range(n) if self.interferes[i][j]] for i in range(n)]
        # number of ongoing transmissions audible at each node (own included)
        self.busy_count = [0] * n
        self.active: list[_Tx] = []
        self.backoff_rng = [streams.get(i, "mac-backoff") for i in range(n)]
        self.loss_rng = [streams.get(i, "link-loss") for i in range(n)]
        self.bo_lo = int(round(mac.backoff_min * NS))
        self.bo_span = int(round((mac.backoff_max - mac.backoff_min) * NS))
        self.service_span = 2.0 * mac.service_time * NS
        self.service_rng = [streams.get(i, "mac-service") for i in range(n)]
        self.retry_unit = mac.retry_backoff * NS
        self._airtime_cache: dict[int, int] = {}

    # -- queries -----------------------------------------------------------

    def neighbors(self, node: int) -> set[int]:
        return {j for j in range(self.n) if j != node and self.in_range[node][j]}

    def airtime_ns(self, size: int) -> int:
        t = self._airtime_cache.get(size)
        if t is None:
            t = int(round(airtime(size, self.radio.bitrate) * NS))
            self._airtime_cache[size] = t
        return t

    def transmitting(self, node: int) -> bool:
        return any(tx.sender == node for tx in self.active)

    def conservation_ok(self) -> bool:
        for st in self.states:
            c = st.counters
            if c.enqueued != (c.delivered + c.mac_overflow + c.csma_drop
                              + c.link_retry_exhausted + len(st.buffer)):
                return False
        return True

    def totals(self) -> MacCounters:
        out = MacCounters()
        for st in self.states:
            for k, v in st.counters.__dict__.items():
                setattr(out, k, getattr(out, k) + v)
        return out

    # -- MAC operations ----------------------------------------------------

    def enqueue_frame(self, node: int, frame: Frame) -> bool:
        st = self.states[node]
        st.counters.enqueued += 1
        if len(st.buffer) >= self.mac.buffer_capacity:
            st.counters.mac_overflow += 1
            return False
        st.buffer.append(frame)
        if not st.busy:
            st.busy = True
            self._schedule_first_attempt(node)
        return True

    def _schedule_first_attempt(self, node: int) -> None:
        delay = self._backoff_ns(node) if self.mac.initial_backoff else 0
        self.sim.at(self.sim.now + self._service_ns(node) + delay, self.attempt_transmission, node)

    def _service_ns(self, node: int) -> int:
        if not self.service_span:
            return 0
        return int(self.service_rng[node].random() * self.service_span)

    def _backoff_ns(self, node: int) -> int:
        return self.bo_lo + int(self.backoff_rng[node].random() * self.bo_span)

    def _next_or_idle(self, node: int) -> None:
        st = self.states[node]
        if st.buffer:
            self._schedule_first_attempt(node)
        else:
            st.busy = False

    def attempt_transmission(self, node: int) -> None:
        st = self.states[node]
        frame = st.buffer[0]
        sim = self.sim
        if self.busy_count[node]:
            frame.csma_failures += 1
            if frame.csma_failures > self.mac.csma_retries:
                st.buffer.popleft()
                st.counters.csma_drop += 1
                self._next_or_idle(node)
            else:
                sim.at(sim.now + self._backoff_ns(node), self.attempt_transmission, node)
            return

        dest = frame.link_destination
        now = sim.now
        rx_start = now
        end = now + self.airtime_ns(frame.size)
        new = _Tx(node, dest, frame, rx_start, end)
        row = self.interferes[node]
        dest_row = self.interferes[dest]
        for tx in self.active:
            # new signal overlaps tx's decode window at tx's receiver
            if row[tx.receiver] and end > tx.rx_start:
                tx.corrupt = True
            # tx's signal still on the air when our receiver starts decoding
            if dest_row[tx.sender] and tx.end > rx_start:
                new.corrupt = True
        bc = self.busy_count
        for j in self.interf_list[node]:
            bc[j] += 1
        self.active.append(new)
        st.counters.transmissions += 1
        sim.at(end, self._tx_end, new)

    def _tx_end(self, tx: _Tx) -> None:
        self.active.remove(tx)
        bc = self.busy_count
        for j in self.interf_list[tx.sender]:
            bc[j] -= 1
        node = tx.sender
        st = self.states[node]
        frame = tx.frame
        if self.resolve_reception(tx):
            st.buffer.popleft()
            st.counters.delivered += 1
            self.on_frame(tx.receiver, frame)
            self._next_or_idle(node)
            return
        frame.link_attempts += 1
        if frame.link_attempts > self.mac.link_retries:
            st.buffer.popleft()
            st.counters.link_retry_exhausted += 1
            self._next_or_idle(node)
        else:
            st.counters.retries += 1
            frame.csma_failures = 0
            extra = int(self.backoff_rng[node].random() * (1 << frame.link_attempts) * self.retry_unit)
            delay = self._service_ns(node) + self._backoff_ns(node) + extra
            self.sim.at(self.sim.now + delay, self.attempt_transmission, node)

    def resolve_reception(self, tx: _Tx) -> bool:
        c = self.states[tx.sender].counters
        if not self.in_range[tx.sender][tx.receiver]:
            return False
        if tx.corrupt:
            c.collisions += 1
            return False
        ldr = self.radio.ldr
        if ldr < 1.0:
            rng = self.loss_rng[tx.sender]
            ok = rng.random() < ldr
            if ok and self.radio.ldr_mode == "compound":
                ok = rng.random() < ldr
            if not ok:
                c.link_losses += 1
                return False
        return True
