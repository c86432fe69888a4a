"""Sweep configuration: YAML text in, validated :class:`ScenarioConfig` out.

Example::

    policy: [default, cocoa, cocoa+]   # or a single name, or "all"
    topology: grid6                    # chain | dumbbell | grid6 | grid7 | all
    ldr: [1.0, 0.5, 0.25]
    loads_kbps: [1, 2, 3]
    seeds: [1, 2, 3, 4, 5]
    duration: 900
    mac:
      buffer_capacity: 8
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from coapcc.cc_policies import PolicyKind, PolicyParams
from coapcc.engine import Scenario, TrafficMode
from coapcc.radio import MacParams, RadioParams
from coapcc.topology import TOPOLOGIES, build

STANDARD_LDRS = (1.0, 0.5, 0.25)
DEFAULT_LOADS = tuple(float(x) for x in range(1, 11))
DEFAULT_SEEDS = (1, 2, 3, 4, 5)


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ScenarioConfig:
    policies: tuple[PolicyKind, ...]
    topologies: tuple[str, ...]
    ldrs: tuple[float, ...] = (1.0,)
    loads_kbps: tuple[float, ...] = DEFAULT_LOADS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    duration: float = 900.0
    warmup: float = 60.0
    traffic_mode: TrafficMode = TrafficMode.PERIODIC
    app_queue_limit: int | None = 1
    policy_params: PolicyParams = field(default_factory=PolicyParams)
    radio: RadioParams = field(default_factory=RadioParams)
    mac: MacParams = field(default_factory=MacParams)
    output: str | None = None

    @property
    def cells(self) -> list[tuple[PolicyKind, str, float, float, int]]:
        return [(p, t, l, load, s)
                for p in self.policies for t in self.topologies for l in self.ldrs
                for load in self.loads_kbps for s in self.seeds]

    def scenario(self, policy: PolicyKind, topology: str, ldr: float, load: float,
                 seed: int) -> Scenario:
        return Scenario(
            topology=build(topology),
            policy=policy,
            offered_load_kbps=load,
            seed=seed,
            radio=dataclasses.replace(self.radio, ldr=ldr),
            mac=self.mac,
            cc_params=self.policy_params,
            traffic_mode=self.traffic_mode,
            warmup=self.warmup,
            duration=self.duration,
            app_queue_limit=self.app_queue_limit,
        )


_TOP_KEYS = {"policy", "topology", "ldr", "loads_kbps", "seeds", "duration", "warmup",
             "traffic_mode", "app_queue_limit", "policy_params", "radio", "mac", "output"}
_SECTIONS = {"policy_params": PolicyParams, "radio": RadioParams, "mac": MacParams}


def _line(node: yaml.Node | None) -> int | None:
    return node.start_mark.line + 1 if node is not None else None


def _as_list(value: Any) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _number(value: Any, what: str, line: int | None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}", line)
    return float(value)


def parse_config(text: str) -> ScenarioConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {exc}", mark.line + 1 if mark else None) from None
    if not isinstance(data, dict) or not isinstance(root, yaml.MappingNode):
        raise ConfigError("config must be a mapping of keys to values", _line(root))

    lines: dict[str, int | None] = {}
    section_lines: dict[tuple[str, str], int | None] = {}
    for key_node, value_node in root.value:
        lines[key_node.value] = _line(key_node)
        if isinstance(value_node, yaml.MappingNode):
            for sub_key, _ in value_node.value:
                section_lines[(key_node.value, sub_key.value)] = _line(sub_key)

    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key {key!r}", lines.get(key))
    for key in ("policy", "topology"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}", _line(root))

    policies = []
    for p in _as_list(data["policy"]):
        if p == "all":
            policies.extend(PolicyKind)
            continue
        try:
            policies.append(PolicyKind.parse(str(p)))
        except ValueError as exc:
            raise ConfigError(str(exc), lines["policy"]) from None

    topologies = []
    for t in _as_list(data["topology"]):
        if t == "all":
            topologies.extend(TOPOLOGIES)
        elif t in TOPOLOGIES:
            topologies.append(t)
        else:
            raise ConfigError(f"unknown topology {t!r} (expected one of: {', '.join(TOPOLOGIES)})",
                              lines["topology"])

    ldrs = []
    for v in _as_list(data.get("ldr", 1.0)):
        v = _number(v, "ldr", lines.get("ldr"))
        if not 0.0 < v <= 1.0:
            raise ConfigError(f"ldr must lie in (0, 1], got {v}", lines.get("ldr"))
        ldrs.append(v)

    loads = []
    for v in _as_list(data.get("loads_kbps", list(DEFAULT_LOADS))):
        v = _number(v, "loads_kbps entry", lines.get("loads_kbps"))
        if not 0.1 <= v <= 20:
            raise ConfigError(f"offered load must lie in [0.1, 20] kbps, got {v}", lines.get("loads_kbps"))
        loads.append(v)

    seeds = []
    for v in _as_list(data.get("seeds", list(DEFAULT_SEEDS))):
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ConfigError(f"seeds must be non-negative integers, got {v!r}", lines.get("seeds"))
        seeds.append(v)

    kwargs: dict[str, Any] = {}
    for key in ("duration", "warmup"):
        if key in data:
            v = _number(data[key], key, lines[key])
            if v < 0 or (key == "duration" and v == 0):
                raise ConfigError(f"{key} out of range: {v}", lines[key])
            kwargs[key] = v
    if "traffic_mode" in data:
        try:
            kwargs["traffic_mode"] = TrafficMode(data["traffic_mode"])
        except ValueError:
            raise ConfigError(f"traffic_mode must be 'periodic' or 'poisson', got {data['traffic_mode']!r}",
                              lines["traffic_mode"]) from None
    if "app_queue_limit" in data:
        v = data["app_queue_limit"]
        if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
            raise ConfigError(f"app_queue_limit must be a non-negative integer or null, got {v!r}",
                              lines["app_queue_limit"])
        kwargs["app_queue_limit"] = v
    if "output" in data:
        kwargs["output"] = str(data["output"])

    for section, cls in _SECTIONS.items():
        if section not in data:
            continue
        body = data[section] or {}
        if not isinstance(body, dict):
            raise ConfigError(f"{section} must be a mapping", lines[section])
        allowed = {f.name for f in dataclasses.fields(cls)}
        if section == "radio":
            allowed.discard("ldr")  # swept through the top-level key
        for k in body:
            if k not in allowed:
                raise ConfigError(f"unknown key {k!r} in {section}", section_lines.get((section, k)))
        try:
            kwargs[section] = cls(**body)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}: {exc}", lines[section]) from None

    if not (policies and topologies and ldrs and loads and seeds):
        raise ConfigError("sweep matrix is empty", _line(root))
    return ScenarioConfig(policies=tuple(dict.fromkeys(policies)),
                          topologies=tuple(dict.fromkeys(topologies)),
                          ldrs=tuple(ldrs), loads_kbps=tuple(loads), seeds=tuple(seeds), **kwargs)


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


FULL_MATRIX_CONFIG = """\
policy: all
topology: all
ldr: [1.0, 0.5, 0.25]
loads_kbps: [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
seeds: [1, 2, 3, 4, 5]
"""
