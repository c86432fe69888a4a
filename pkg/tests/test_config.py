import pytest

from coapcc.cc_policies import PolicyKind
from coapcc.config import FULL_MATRIX_CONFIG, ConfigError, parse_config
from coapcc.engine import TrafficMode


def test_minimal_config_defaults():
    c = parse_config("policy: cocoa\ntopology: chain\n")
    assert c.policies == (PolicyKind.COCOA,)
    assert c.ldrs == (1.0,)
    assert c.loads_kbps == tuple(float(x) for x in range(1, 11))
    assert len(c.seeds) == 5
    assert len(c.cells) == 50


def test_full_matrix_size():
    c = parse_config(FULL_MATRIX_CONFIG)
    assert len(c.cells) == 1800
    assert len(c.policies) == 3 and len(c.topologies) == 4


def test_sections_override_dataclasses():
    c = parse_config("""\
policy: [default, cocoa+]
topology: [grid6, grid7]
ldr: 0.5
traffic_mode: poisson
app_queue_limit: null
mac:
  buffer_capacity: 4
radio:
  ldr_mode: compound
policy_params:
  k_strong: 3
""")
    assert c.mac.buffer_capacity == 4
    assert c.radio.ldr_mode == "compound"
    assert c.policy_params.k_strong == 3
    assert c.traffic_mode is TrafficMode.POISSON
    assert c.app_queue_limit is None
    sc = c.scenario(PolicyKind.COCOA_PLUS, "grid7", 0.5, 3.0, 2)
    assert sc.radio.ldr == 0.5 and sc.mac.buffer_capacity == 4 and len(sc.topology) == 49


@pytest.mark.parametrize("text, line, fragment", [
    ("policy: cocoa\ntopology: chain\nldr: 1.7\n", 3, "ldr"),
    ("policy: cocoa\ntopology: grid9\n", 2, "grid9"),
    ("policy: reno\ntopology: chain\n", 1, "reno"),
    ("topology: chain\n", 1, "policy"),
    ("policy: cocoa\ntopology: chain\ncolour: blue\n", 3, "colour"),
    ("policy: cocoa\ntopology: chain\nmac:\n  buffer_capacity: 8\n  wings: 2\n", 5, "wings"),
    ("policy: cocoa\ntopology: chain\nloads_kbps: [1, 40]\n", 3, "offered load"),
    ("policy: cocoa\ntopology: chain\nseeds: [-1]\n", 3, "seeds"),
    ("policy: cocoa\ntopology: chain\nradio:\n  ldr: 0.5\n", 4, "ldr"),
    ("policy: cocoa\ntopology: chain\nmac:\n  buffer_capacity: 0\n", 3, "buffer_capacity"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert fragment in str(info.value)


def test_empty_matrix_rejected():
    with pytest.raises(ConfigError, match="empty"):
        parse_config("policy: []\ntopology: chain\n")


def test_invalid_yaml():
    with pytest.raises(ConfigError):
        parse_config("policy: [cocoa\ntopology: chain\n")
