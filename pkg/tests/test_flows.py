import random
from ipaddress import IPv4Address

import pytest

from edgedns.errors import DuplicatePriorityConflict, NoControllerRegistered, NoMatch, UnknownPort
from edgedns.flows import (
    DROP,
    FORWARD_NORMAL,
    NORMAL,
    SEND_TO_CONTROLLER,
    FlowRule,
    FlowTable,
    FrameHeaders,
    MatchCriteria,
    Output,
    Switch,
    peek_headers,
)
from edgedns.gtpu import InnerDatagram, encode_inner
from edgedns.netsim.core import Node, Simulator
from edgedns.scenario import default_flows
from oracles import brute_force_classify
from strategies import random_flow_case

EDGE = IPv4Address("192.168.10.53")


def test_default_flows_install():
    table = FlowTable(default_flows(EDGE))
    assert len(table) == 3
    assert [r.priority for r in table] == [200, 200, 0]


def test_rules_kept_in_descending_priority():
    table = FlowTable()
    for p in (5, 50, 1, 20):
        table.install_flow(FlowRule(p, MatchCriteria(dst_port=p), DROP))
    assert [r.priority for r in table] == [50, 20, 5, 1]


def test_equal_priority_overlap_with_different_action_rejected():
    table = FlowTable([FlowRule(10, MatchCriteria(dst_port=53), DROP)])
    with pytest.raises(DuplicatePriorityConflict):
        table.install_flow(FlowRule(10, MatchCriteria(ip_protocol=17), FORWARD_NORMAL))
    with pytest.raises(DuplicatePriorityConflict):
        table.install_flow(FlowRule(10, MatchCriteria(), FORWARD_NORMAL))
    assert len(table) == 1


def test_equal_priority_disjoint_accepted():
    table = FlowTable([FlowRule(10, MatchCriteria(dst_port=53), DROP)])
    table.install_flow(FlowRule(10, MatchCriteria(dst_port=54), FORWARD_NORMAL))
    assert len(table) == 2


def test_equal_priority_overlap_same_action_accepted():
    table = FlowTable([FlowRule(10, MatchCriteria(dst_port=53), DROP)])
    table.install_flow(FlowRule(10, MatchCriteria(src_port=53), DROP))
    assert table.classify(FrameHeaders(1, 17, EDGE, EDGE, 53, 53)) == DROP


def test_wildcard_matches_everything():
    table = FlowTable([FlowRule(0, MatchCriteria(), FORWARD_NORMAL)])
    assert MatchCriteria().is_wildcard
    assert table.classify(FrameHeaders()) == FORWARD_NORMAL


def test_no_match_raises():
    with pytest.raises(NoMatch):
        FlowTable().classify(FrameHeaders(1))


def test_classify_default_flows():
    table = FlowTable(default_flows(EDGE))
    gtpu = peek_headers(encode_inner(InnerDatagram("192.168.10.2", "192.168.10.3", 2152, 2152, b"x")), 1)
    from_edge = peek_headers(encode_inner(InnerDatagram(EDGE, "192.168.10.9", 53, 49152, b"x")), 3)
    other = peek_headers(encode_inner(InnerDatagram("10.0.0.1", "10.0.0.2", 1, 2, b"x")), 1)
    assert table.classify(gtpu) == SEND_TO_CONTROLLER
    assert table.classify(from_edge) == SEND_TO_CONTROLLER
    assert table.classify(other) == FORWARD_NORMAL


def test_without_controller_rules():
    table = FlowTable(default_flows(EDGE)).without_controller_rules()
    assert [r.name for r in table] == ["normal"]


def test_peek_headers_is_lenient():
    assert peek_headers(b"\x00" * 5) == FrameHeaders()
    raw = bytearray(encode_inner(InnerDatagram("10.0.0.1", "10.0.0.2", 1, 2, b"x")))
    raw[10:12] = b"\x00\x00"  # broken checksum still classifies
    assert peek_headers(bytes(raw)).dst_port == 2


def test_randomized_against_brute_force():
    rng = random.Random(11)
    for _ in range(500):
        table, headers = random_flow_case(rng)
        try:
            got = table.classify(headers)
        except NoMatch:
            got = None
        assert got == brute_force_classify(table.rules, headers)


class Sink(Node):
    def __init__(self, node_id):
        super().__init__(node_id)
        self.frames = []

    def on_frame(self, frame, port):
        self.frames.append((self.now, frame))

    def on_packet_in(self, frame, port):
        self.frames.append((self.now, ("packet_in", port)))


def _switch(rules, controller_latency=100):
    sim = Simulator()
    sw = sim.add(Switch("sw", FlowTable(rules), controller_latency))
    a, b = sim.add(Sink("a")), sim.add(Sink("b"))
    sim.connect(sw, 1, a, 0, 10)
    sim.connect(sw, 2, b, 0, 10)
    sw.add_port(1, "a", ["10.0.0.1"])
    sw.add_port(2, "b", ["10.0.0.2"])
    return sim, sw, a, b


def test_switch_counters_balance():
    frame = encode_inner(InnerDatagram("10.0.0.1", "10.0.0.2", 1, 2, b"x"))
    back = encode_inner(InnerDatagram("10.0.0.2", "10.0.0.9", 1, 2, b"x"))  # no route
    dropped = encode_inner(InnerDatagram("10.0.0.1", "10.0.0.2", 1, 666, b"x"))
    sim, sw, a, b = _switch([FlowRule(5, MatchCriteria(dst_port=666), DROP),
                             FlowRule(0, MatchCriteria(), FORWARD_NORMAL)])
    for f in (frame, back, dropped):
        sim.schedule("sw", f, 0, port=1)
    sim.run()
    c = sw.counters
    assert c["frames_in"] == 3 == c["forwarded"] + c["dropped"] + c["to_controller"]
    assert c["no_route"] == 1
    assert b.frames == [(10, frame)]


def test_output_action_and_unknown_port():
    frame = encode_inner(InnerDatagram("10.0.0.1", "10.0.0.2", 1, 2, b"x"))
    sim, sw, a, b = _switch([FlowRule(0, MatchCriteria(), Output(1))])
    sim.schedule("sw", frame, 0, port=2)
    sim.run()
    assert a.frames == [(10, frame)]
    with pytest.raises(UnknownPort):
        sw.packet_out(frame, 9)


def test_packet_in_needs_controller():
    sim, sw, a, b = _switch([FlowRule(0, MatchCriteria(), SEND_TO_CONTROLLER)])
    sim.schedule("sw", b"\x45" + b"\x00" * 27, 0, port=1)
    with pytest.raises(NoControllerRegistered):
        sim.run()


def test_packet_in_and_out_each_cost_controller_latency():
    frame = encode_inner(InnerDatagram("10.0.0.1", "10.0.0.2", 1, 2, b"x"))
    sim, sw, a, b = _switch([FlowRule(0, MatchCriteria(), SEND_TO_CONTROLLER)], controller_latency=100)
    sw.attach_controller(a)
    sim.schedule("sw", frame, 0, port=1)
    sim.run()
    assert a.frames == [(100, ("packet_in", 1))]
    sw.packet_out(frame, NORMAL)
    sim.run()
    assert b.frames == [(210, frame)]  # packet_in 100, packet_out 100, link 10
    assert sw.counters["packet_out_sent"] == 1
