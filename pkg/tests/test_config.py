from ipaddress import IPv4Address

import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgedns.config import dumps, format_ms, load, loads, parse_flow, parse_ms, parse_records
from edgedns.dnswire import AAAA, CNAME
from edgedns.errors import ConfigError
from edgedns.flows import DROP, FORWARD_NORMAL, SEND_TO_CONTROLLER, Output
from edgedns.netsim.core import MS

from conftest import REPO

MINIMAL = """\
[scenario.g]
resolver = google
"""


def problems(text):
    with pytest.raises(ConfigError) as info:
        loads(text, "t.ini")
    return info.value.problems


def test_example_config_loads():
    cfg = load(REPO / "configs" / "example.ini")
    assert [s.name for s in cfg.scenarios] == ["edge", "google", "quad9"]
    assert cfg.counts == (10, 100, 1000) and cfg.seed == 7
    assert cfg.network.fronthaul == 50_000
    assert cfg.scenario("edge").ue_dns == "google" and cfg.scenario("edge").intercepting
    assert cfg.scenario("quad9").server("quad9").jitter == MS
    assert cfg.workload.ue_count == 2 and len(cfg.zone) == 5


def test_minimal_config_uses_defaults():
    cfg = loads(MINIMAL)
    s = cfg.scenarios[0]
    assert s.ue_dns == "google" and len(s.flows) == 3 and len(s.zone) == 10
    assert cfg.counts == (10, 100, 1000, 10000)


def test_round_trip_is_exact():
    text = (REPO / "configs" / "example.ini").read_text()
    cfg = loads(text)
    again = loads(dumps(cfg))
    assert again == cfg
    assert dumps(again) == dumps(cfg)


def test_errors_cite_line_numbers():
    text = """\
[topology]
radio_ms = fast
n3_ms = 2

[workload]
ue_count = 0

[scenario.x]
resolver = nowhere
"""
    got = {(line, field) for line, field, _ in problems(text)}
    assert (2, "[topology] radio_ms") in got
    assert (6, "[workload] ue_count") in got
    assert (9, "[scenario.x] resolver") in got


def test_error_message_format():
    with pytest.raises(ConfigError, match=r"t.ini:2: \[topology\] bogus: unknown key"):
        loads("[topology]\nbogus = 1\n" + MINIMAL, "t.ini")


def test_unknown_section_and_missing_scenario():
    assert problems("[tpology]\nradio_ms = 1\n" + MINIMAL)[0][:2] == (1, "[tpology]")
    assert problems("[bench]\nseed = 3\n")[0][1] == "scenario"


def test_syntax_error_has_line():
    line, field, _ = problems("[bench]\nseed = 1\nnot a key value line\n")[0]
    assert field == "syntax" and line == 3


def test_flow_conflict_reported():
    text = "[flows]\na = 10 proto=17 -> controller\nb = 10 * -> drop\n" + MINIMAL
    got = problems(text)
    assert got[0][0] in (2, 3) and "[flows]" in got[0][1]


def test_parse_flow_syntax():
    r = parse_flow("x", "100 in_port=3 proto=17 src=10.0.0.1 dst=10.0.0.2 udp_src=53 udp_dst=9 -> output:4")
    m = r.match
    assert (r.priority, r.action) == (100, Output(4))
    assert (m.in_port, m.ip_protocol, m.src_addr, m.dst_addr, m.src_port, m.dst_port) == (
        3, 17, IPv4Address("10.0.0.1"), IPv4Address("10.0.0.2"), 53, 9)
    assert parse_flow("y", "0 * -> NORMAL").action == FORWARD_NORMAL
    assert parse_flow("y", "1 * -> drop").action == DROP
    assert parse_flow("y", "1 * -> controller").action == SEND_TO_CONTROLLER
    for bad in ("100 proto=17", "x * -> drop", "1 port=3 -> drop", "1 * -> flood", "70000 * -> drop"):
        with pytest.raises(ValueError):
            parse_flow("b", bad)


def test_parse_records():
    rrs = parse_records("a.example", "AAAA 60 2001:db8::1; CNAME 30 b.example; TYPE16 10 0568656c6c6f")
    assert [rr.rtype for rr in rrs] == [AAAA, CNAME, 16]
    assert rrs[2].rdata == b"\x05hello"
    for bad in ("MX 10 x", "A 10", "A -1 1.2.3.4", ""):
        with pytest.raises(ValueError):
            parse_records("a", bad)


def test_parse_ms_is_exact():
    assert parse_ms("0.05") == 50_000
    assert parse_ms("17.2575") == 17_257_500
    for bad in ("-1", "abc", "0.0000001", "nan"):
        with pytest.raises(ValueError):
            parse_ms(bad)


@given(st.integers(0, 10**13))
def test_ms_format_round_trips(ns):
    assert parse_ms(format_ms(ns)) == ns
