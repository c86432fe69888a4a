import dataclasses
import statistics
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from coapcc import cc_policies as cc
from coapcc.cc_policies import PolicyKind
from coapcc.engine import (NS, Scenario, SimulationError, Simulator, Streams, TrafficMode,
                           TrafficSpec, next_random, per_node_interval, run, to_ns)
from coapcc.messages import REQUEST_SIZE, CoapLayer, Exchange, ExchangeState, Kind, Message
from coapcc.metrics import collect_metrics, percentile
from coapcc.topology import Node, Role, Topology


def tiny(clients: int) -> Topology:
    nodes = [Node(0, 0, 0, Role.PRIMARY_SINK), Node(1, -10, 0, Role.BORDER_RELAY)]
    for k in range(clients):
        nodes.append(Node(2 + k, 10 * (k + 1), 0, Role.CLIENT))
    return Topology("tiny", nodes)


class TestKernel:
    def test_events_run_in_time_then_insertion_order(self):
        sim, log = Simulator(), []
        sim.at(5, log.append, "b")
        sim.at(3, log.append, "a")
        sim.at(5, log.append, "c")
        sim.run_until(10)
        assert log == ["a", "b", "c"]
        assert sim.executed == 3

    def test_past_event_rejected(self):
        sim = Simulator()
        sim.run_until(100)
        with pytest.raises(SimulationError):
            sim.at(50, print)

    def test_run_until_is_exclusive(self):
        sim, log = Simulator(), []
        sim.at(10, log.append, 1)
        sim.run_until(10)
        assert log == [] and len(sim) == 1
        sim.run_until(11)
        assert log == [1]

    @given(st.lists(st.integers(0, 10_000), max_size=60))
    def test_clock_monotone_and_causal(self, delays):
        sim, seen = Simulator(), []

        def fire(arg):
            scheduled_at, due = arg
            assert sim.now == due >= scheduled_at
            seen.append(sim.now)

        for d in delays:
            sim.at(d, fire, (0, d))
        sim.run_until(20_000)
        assert seen == sorted(seen) and len(seen) == len(delays)

    def test_to_ns(self):
        assert to_ns(1.5) == 1_500_000_000
        assert to_ns(0.0625) == 62_500_000


class TestStreams:
    def test_same_key_same_sequence(self):
        a = Streams(7).get(3, "app")
        b = Streams(7).get(3, "app")
        assert [a.random() for _ in range(10)] == [b.random() for _ in range(10)]

    def test_purposes_independent(self):
        s = Streams(7)
        x = [next_random(s.get(3, "app"), "app") for _ in range(5000)]
        y = [next_random(s.get(3, "mac-backoff"), "mac-backoff") for _ in range(5000)]
        assert x != y
        assert abs(statistics.correlation(x, y)) < 0.05
        assert all(0.0 <= v < 1.0 for v in x + y)

    def test_new_consumer_does_not_perturb_existing(self):
        a, b = Streams(9), Streams(9)
        b.get(0, "something-new").random()
        assert a.get(0, "app").random() == b.get(0, "app").random()


@pytest.mark.parametrize("clients, load, expected", [(35, 1.0, 19.88), (35, 10.0, 1.988), (1, 0.568, 1.0)])
def test_per_node_interval(clients, load, expected):
    got = per_node_interval(TrafficSpec(load, clients))
    # exact rational evaluation of bits per client-period over bits per second
    exact = Fraction(clients * REQUEST_SIZE * 8) / (Fraction(str(load)) * 1000)
    assert got == pytest.approx(float(exact), rel=1e-12)
    assert got == pytest.approx(expected, rel=1e-9)


def test_traffic_spec_validation():
    with pytest.raises(ValueError):
        TrafficSpec(25.0, 3)
    with pytest.raises(ValueError):
        per_node_interval(TrafficSpec(1.0, 0))


def _short(topology, load=1.0, **kw):
    kw.setdefault("duration", 120.0)
    kw.setdefault("warmup", 10.0)
    return Scenario(topology=topology, policy=kw.pop("policy", PolicyKind.COCOA),
                    offered_load_kbps=load, **kw)


def test_zero_clients_reports_empty_pdr():
    m = run(_short(tiny(0))).metrics
    assert m.requests_sent == 0 and m.empty and m.pdr == 1.0


def test_single_client_low_load_is_lossless():
    r = run(_short(tiny(1), load=0.568))
    m = r.metrics
    assert m.requests_sent > 100
    assert m.pdr == 1.0
    assert m.failed_exchanges == 0 and m.mac_overflows == 0


def test_same_seed_same_metrics_and_trace():
    a = run(_short(tiny(3), load=2.0, trace=True, seed=4))
    b = run(_short(tiny(3), load=2.0, trace=True, seed=4))
    assert a.metrics == b.metrics
    assert a.trace_lines() == b.trace_lines()
    c = run(_short(tiny(3), load=2.0, seed=5))
    assert c.metrics != a.metrics


@pytest.mark.parametrize("mode", list(TrafficMode))
def test_accounting_invariants(mode):
    m = run(_short(tiny(3), load=5.0, traffic_mode=mode, policy=PolicyKind.COCOA_PLUS)).metrics
    assert m.requests_received <= m.requests_sent
    assert m.acked_exchanges + m.failed_exchanges + m.declined_requests == m.requests_sent
    assert m.requests_sent + m.pending_exchanges == m.submitted
    assert m.conservation_ok


def test_load_fidelity_within_two_percent():
    m = run(_short(tiny(4), load=1.0, duration=600.0)).metrics
    assert abs(m.measured_offered_kbps - 1.0) <= 0.02


def test_no_traffic_during_warmup():
    r = run(_short(tiny(2), load=2.0, trace=True, warmup=30.0))
    first = min(t for t, kind, _, _ in r.event_trace if kind == "submit")
    assert first >= 30 * NS


def test_nstart_holds_in_trace():
    r = run(_short(tiny(4), load=8.0, trace=True, policy=PolicyKind.DEFAULT_COAP))
    open_ = {}
    for _, kind, node, uid in r.event_trace:
        if kind == "tx":
            assert open_.get(node) is None
            open_[node] = uid
        elif kind in ("ack", "fail"):
            assert open_.get(node) == uid
            open_[node] = None


def _ex(uid, created_s, state, received_s=None):
    ex = Exchange(uid, Message(Kind.CON, uid, 1, 0, REQUEST_SIZE, to_ns(created_s)))
    ex.state = state
    ex.received_at = None if received_s is None else to_ns(received_s)
    return ex


class TestCollectMetrics:
    def test_all_received(self):
        exs = [_ex(i, 1.0 + i * 0.01, ExchangeState.ACKED, 1.5 + i * 0.01) for i in range(100)]
        m = collect_metrics(exs, 3.0, 0, 10 * NS)
        assert m.pdr == 1.0 and m.carried_load_kbps == 3.0
        assert m.mean_delay_s == pytest.approx(0.5)

    def test_three_quarters(self):
        exs = [_ex(i, 1.0, ExchangeState.ACKED, 2.0) for i in range(150)]
        exs += [_ex(150 + i, 1.0, ExchangeState.FAILED) for i in range(50)]
        m = collect_metrics(exs, 4.0, 0, 10 * NS)
        assert m.pdr == 0.75 and m.carried_load_kbps == 3.0

    def test_retransmitted_then_delivered_counts_once(self):
        sim = Simulator()
        lay = CoapLayer(sim, PolicyKind.COCOA, cc.PolicyParams(), Streams(1), lambda n, m: None)
        ex = lay.submit_request(1, 0)
        sim.now = 100
        lay.on_receive(0, ex.message)
        sim.now = 3 * NS
        lay.on_receive(0, ex.message)  # retransmitted copy
        ex.state = ExchangeState.ACKED
        m = collect_metrics(lay.exchanges, 1.0, 0, 10 * NS)
        assert (m.requests_sent, m.requests_received) == (1, 1)

    def test_pending_and_out_of_window_excluded(self):
        exs = [_ex(0, 1.0, ExchangeState.IN_FLIGHT), _ex(1, 1.0, ExchangeState.QUEUED),
               _ex(2, 20.0, ExchangeState.ACKED, 20.1), _ex(3, 1.0, ExchangeState.FAILED, 1.2)]
        m = collect_metrics(exs, 1.0, 0, 10 * NS)
        assert m.requests_sent == 1 and m.requests_received == 1 and m.pending_exchanges == 2

    def test_percentile_matches_linear_interpolation(self):
        assert percentile([1.0, 2.0, 3.0, 4.0], 50) == 2.5
        assert percentile(list(map(float, range(101))), 95) == 95.0
        assert percentile([], 95) == 0.0


def test_scenario_named():
    sc = Scenario.named("chain", "cocoa+", 2.0, seed=3)
    assert sc.policy is PolicyKind.COCOA_PLUS and len(sc.topology) == 17
    assert dataclasses.replace(sc, seed=4).seed == 4
