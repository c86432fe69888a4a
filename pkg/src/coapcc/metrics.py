from __future__ import annotations

from dataclasses import asdict, dataclass

from coapcc.messages import ExchangeState

NS = 1_000_000_000


@dataclass
class MetricsRecord:
    requests_sent: int
    requests_received: int
    pdr: float
    offered_load_kbps: float
    carried_load_kbps: float
    mean_delay_s: float
    p95_delay_s: float
    mac_overflows: int
    retransmissions: int
    failed_exchanges: int
    acked_exchanges: int = 0
    pending_exchanges: int = 0
    declined_requests: int = 0
    csma_drops: int = 0
    link_drops: int = 0
    collisions: int = 0
    stale_acks: int = 0
    submitted: int = 0
    measured_offered_kbps: float = 0.0
    conservation_ok: bool = True
    empty: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def percentile(values: list[float], q: float) -> float:
    """Linear-interpolation percentile (same convention as numpy's default)."""
    if not values:
        return 0.0
    xs = sorted(values)
    pos = (len(xs) - 1) * q / 100.0
    lo = int(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - lo)


def collect_metrics(exchanges, offered_load_kbps: float, window_start: int, window_end: int,
                    message_size: int = 71, mac_totals=None, layer_counters=None,
                    conservation_ok: bool = True) -> MetricsRecord:
    """Aggregate per-exchange outcomes over ``[window_start, window_end)`` (ns).

    Exchanges still queued or in flight when the window closes are left out
    of both sides of the delivery ratio.
    """
    submitted = sent = received = acked = failed = pending = declined = 0
    delays = []
    for ex in exchanges:
        if not window_start <= ex.created_at < window_end:
            continue
        submitted += 1
        if ex.state in (ExchangeState.QUEUED, ExchangeState.IN_FLIGHT):
            pending += 1
            continue
        sent += 1
        if ex.state is ExchangeState.ACKED:
            acked += 1
        elif ex.state is ExchangeState.FAILED:
            failed += 1
        else:
            declined += 1
        if ex.received_at is not None:
            received += 1
            delays.append((ex.received_at - ex.created_at) / NS)

    empty = sent == 0
    pdr = 1.0 if empty else received / sent
    window_s = (window_end - window_start) / NS
    return MetricsRecord(
        requests_sent=sent,
        requests_received=received,
        pdr=pdr,
        offered_load_kbps=offered_load_kbps,
        carried_load_kbps=pdr * offered_load_kbps,
        mean_delay_s=sum(delays) / len(delays) if delays else 0.0,
        p95_delay_s=percentile(delays, 95.0),
        mac_overflows=mac_totals.mac_overflow if mac_totals else 0,
        retransmissions=layer_counters.retransmissions if layer_counters else 0,
        failed_exchanges=failed,
        acked_exchanges=acked,
        pending_exchanges=pending,
        declined_requests=declined,
        csma_drops=mac_totals.csma_drop if mac_totals else 0,
        link_drops=mac_totals.link_retry_exhausted if mac_totals else 0,
        collisions=mac_totals.collisions if mac_totals else 0,
        stale_acks=layer_counters.stale_acks if layer_counters else 0,
        submitted=submitted,
        measured_offered_kbps=(submitted * message_size * 8 / 1000.0 / window_s) if window_s > 0 else 0.0,
        conservation_ok=conservation_ok,
        empty=empty,
    )
