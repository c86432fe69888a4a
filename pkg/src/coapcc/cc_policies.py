"""Retransmission-timeout policies: Default CoAP, CoCoA and CoCoA+.

All three policies share one state record (:class:`CcState`) and a small set
of free functions operating on it. Functions that update state mutate the
record in place and also return it, so callers can chain or ignore the
return value.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

BASE_RTO = 2.0
AGING_IDLE = 30.0


class PolicyKind(str, enum.Enum):
    DEFAULT_COAP = "default"
    COCOA = "cocoa"
    COCOA_PLUS = "cocoa+"

    @classmethod
    def parse(cls, text: str) -> "PolicyKind":
        key = text.strip().lower().replace("_", "").replace("-", "").replace(" ", "")
        aliases = {
            "default": cls.DEFAULT_COAP,
            "defaultcoap": cls.DEFAULT_COAP,
            "coap": cls.DEFAULT_COAP,
            "cocoa": cls.COCOA,
            "cocoa+": cls.COCOA_PLUS,
            "cocoaplus": cls.COCOA_PLUS,
        }
        try:
            return aliases[key]
        except KeyError:
            valid = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown policy {text!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class PolicyParams:
    """Tunable constants of the estimators and the per-exchange RTO clamp."""

    alpha: float = 0.25
    beta: float = 0.125
    k_strong: float = 4.0
    k_weak: float = 1.0
    weak_max_count: int = 3
    rto_min: float = 0.1
    rto_max: float = 60.0
    default_rto_low: float = 2.0
    default_rto_high: float = 3.0
    # Off by default; when > 1 the CoCoA/CoCoA+ initial RTO is scaled by a
    # uniform factor in [1, dither).
    dither: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0 and 0.0 < self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in (0, 1]")
        if self.k_strong <= 0 or self.k_weak <= 0:
            raise ValueError("K weights must be positive")
        if not 0 < self.rto_min <= self.rto_max:
            raise ValueError("need 0 < rto_min <= rto_max")
        if not 0 < self.default_rto_low < self.default_rto_high:
            raise ValueError("need 0 < default_rto_low < default_rto_high")
        if self.weak_max_count < 1:
            raise ValueError("weak_max_count must be >= 1")
        if self.dither < 1.0:
            raise ValueError("dither must be >= 1")


@dataclass
class Estimator:
    k: float
    srtt: float = 0.0
    rttvar: float = 0.0
    initialized: bool = False

    def rto(self) -> float:
        return self.srtt + self.k * self.rttvar


@dataclass
class CcState:
    policy: PolicyKind
    strong: Estimator
    weak: Estimator
    rng: random.Random
    params: PolicyParams = field(default_factory=PolicyParams)
    rto_overall: float = BASE_RTO
    last_update: float = 0.0


@dataclass(frozen=True)
class BackoffInputs:
    rto_previous: float
    rto_init: float

    def __post_init__(self) -> None:
        if self.rto_previous <= 0 or self.rto_init <= 0:
            raise ValueError("backoff inputs must be positive")


def new_state(policy: PolicyKind, seed: int | random.Random,
              params: PolicyParams | None = None) -> CcState:
    """Fresh per-endpoint state; *seed* may be an int or a ready RNG stream."""
    params = params or PolicyParams()
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return CcState(
        policy=PolicyKind(policy),
        strong=Estimator(k=params.k_strong),
        weak=Estimator(k=params.k_weak),
        rng=rng,
        params=params,
    )


def vbf(rto_init: float) -> float:
    """CoCoA+ variable backoff factor for an exchange started with *rto_init*."""
    if rto_init < 1.0:
        return 3.0
    if rto_init <= 3.0:
        return 2.0
    return 1.3


def clamp_rto(state: CcState, rto: float) -> float:
    p = state.params
    return min(max(rto, p.rto_min), p.rto_max)


def apply_aging(state: CcState, now: float) -> CcState:
    if state.policy is not PolicyKind.COCOA_PLUS:
        return state
    if state.rto_overall > BASE_RTO and now - state.last_update > AGING_IDLE:
        state.rto_overall = (BASE_RTO + state.rto_overall) / 2.0
        state.last_update = now
    return state


def initial_rto(state: CcState, now: float) -> float:
    """RTO for the first transmission of a new exchange (unclamped)."""
    if now < state.last_update:
        raise ValueError(f"time went backwards: now={now} < last_update={state.last_update}")
    p = state.params
    if state.policy is PolicyKind.DEFAULT_COAP:
        return p.default_rto_low + (p.default_rto_high - p.default_rto_low) * state.rng.random()
    if state.policy is PolicyKind.COCOA_PLUS:
        apply_aging(state, now)
    rto = state.rto_overall
    if p.dither > 1.0:
        rto *= 1.0 + (p.dither - 1.0) * state.rng.random()
    return rto


def backoff(state: CcState, inputs: BackoffInputs) -> float:
    if state.policy is PolicyKind.COCOA_PLUS:
        return inputs.rto_previous * vbf(inputs.rto_init)
    return inputs.rto_previous * 2.0


def _update_estimator(est: Estimator, rtt: float, alpha: float, beta: float) -> None:
    if not est.initialized:
        est.srtt = rtt
        est.rttvar = rtt / 2.0
        est.initialized = True
        return
    est.rttvar = (1.0 - beta) * est.rttvar + beta * abs(est.srtt - rtt)
    est.srtt = (1.0 - alpha) * est.srtt + alpha * rtt


def on_rtt_sample(state: CcState, rtt: float, transmission_count: int, now: float) -> CcState:
    """Feed one RTT measurement from an ACKed exchange.

    ``transmission_count`` is the number of transmissions the exchange needed
    before the ACK arrived. A count of 1 is a strong sample; counts up to
    ``params.weak_max_count`` are weak samples; anything beyond is discarded
    because the ACK cannot be attributed to a transmission.
    """
    if rtt <= 0:
        raise ValueError(f"non-positive RTT sample {rtt!r}")
    if transmission_count < 1:
        raise ValueError(f"transmission_count must be >= 1, got {transmission_count}")
    if state.policy is PolicyKind.DEFAULT_COAP:
        return state
    p = state.params
    if transmission_count == 1:
        est = state.strong
    elif transmission_count <= p.weak_max_count:
        est = state.weak
    else:
        return state
    _update_estimator(est, rtt, p.alpha, p.beta)
    state.rto_overall = 0.5 * est.rto() + 0.5 * state.rto_overall
    state.last_update = now
    return state
