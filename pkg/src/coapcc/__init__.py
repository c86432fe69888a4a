"""Simulator and policy library for CoAP congestion control (Default CoAP, CoCoA, CoCoA+)."""

from coapcc.cc_policies import PolicyKind, PolicyParams
from coapcc.engine import Scenario, run

__all__ = ["PolicyKind", "PolicyParams", "Scenario", "run"]
__version__ = "0.1.0"
