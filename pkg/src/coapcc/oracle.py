"""Straight-line reference evaluator for the CoCoA / CoCoA+ RTO recurrences.

Deliberately shares no code with :mod:`coapcc.cc_policies`: every constant
is restated here and the recurrences are written out with scalar locals.
Used to cross-check the policy module by trace replay.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class TraceStep:
    """One replayed event.

    ``kind`` is ``"sample"`` (an ACK with ``rtt`` after ``count``
    transmissions) or ``"start"`` (a new exchange asks for its initial RTO,
    which is where CoCoA+ aging happens).
    """

    kind: str
    now: float
    rtt: float = 0.0
    count: int = 1


def reference_trajectory(policy: str, steps: Iterable[TraceStep]) -> list[float]:
    """RTO_overall after every step, for policy ``"cocoa"`` or ``"cocoa+"``."""
    plus = policy == "cocoa+"
    overall = 2.0
    last = 0.0
    s_init = w_init = False
    s_srtt = s_var = w_srtt = w_var = 0.0
    out = []
    for st in steps:
        if st.kind == "start":
            if plus and overall > 2.0 and st.now - last > 30.0:
                overall = (2.0 + overall) / 2.0
                last = st.now
        elif st.kind == "sample":
            if st.count == 1:
                if s_init:
                    s_var = 0.875 * s_var + 0.125 * abs(s_srtt - st.rtt)
                    s_srtt = 0.75 * s_srtt + 0.25 * st.rtt
                else:
                    s_srtt, s_var, s_init = st.rtt, st.rtt / 2.0, True
                overall = 0.5 * (s_srtt + 4.0 * s_var) + 0.5 * overall
                last = st.now
            elif st.count in (2, 3):
                if w_init:
                    w_var = 0.875 * w_var + 0.125 * abs(w_srtt - st.rtt)
                    w_srtt = 0.75 * w_srtt + 0.25 * st.rtt
                else:
                    w_srtt, w_var, w_init = st.rtt, st.rtt / 2.0, True
                overall = 0.5 * (w_srtt + 1.0 * w_var) + 0.5 * overall
                last = st.now
        else:
            raise ValueError(f"unknown step kind {st.kind!r}")
        out.append(overall)
    return out


def random_trace(rng: random.Random, length: int = 50) -> list[TraceStep]:
    """Random interleaving of exchange starts and ACK samples with increasing time."""
    now = 0.0
    steps = []
    for _ in range(length):
        now += rng.choice((0.05, 0.5, 3.0, 12.0, 35.0)) * rng.random() + 1e-3
        if rng.random() < 0.3:
            steps.append(TraceStep("start", now))
        else:
            rtt = rng.uniform(0.01, 8.0)
            count = rng.choice((1, 1, 1, 2, 3, 4, 5))
            steps.append(TraceStep("sample", now, rtt=rtt, count=count))
    return steps


def replay(policy: str, steps: Sequence[TraceStep]) -> list[float]:
    """Drive the production policy module over the same trace."""
    from coapcc import cc_policies as cc

    state = cc.new_state(cc.PolicyKind.parse(policy), 0)
    out = []
    for st in steps:
        if st.kind == "start":
            cc.initial_rto(state, st.now)
        else:
            cc.on_rtt_sample(state, st.rtt, st.count, st.now)
        out.append(state.rto_overall)
    return out


def cross_check(n_traces: int = 1000, seed: int = 2024, tol: float = 1e-9) -> tuple[int, float]:
    """Replay *n_traces* random traces through both paths.

    Returns ``(mismatching_traces, worst_abs_error)``.
    """
    rng = random.Random(seed)
    bad = 0
    worst = 0.0
    for i in range(n_traces):
        policy = "cocoa+" if i % 2 else "cocoa"
        steps = random_trace(rng)
        ref = reference_trajectory(policy, steps)
        got = replay(policy, steps)
        err = max(abs(a - b) for a, b in zip(ref, got))
        worst = max(worst, err)
        if err > tol or len(ref) != len(got):
            bad += 1
    return bad, worst
