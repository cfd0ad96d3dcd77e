"""Priority flow table and the SDN switch that applies it.

The switch is a netsim node.  Frames on its ports are bare IPv4 datagrams;
link-layer addressing is abstracted to (node, port) wiring.
"""

import logging
import struct
from collections import Counter
from dataclasses import dataclass
from ipaddress import IPv4Address
from typing import NamedTuple

from .errors import DuplicatePriorityConflict, NoControllerRegistered, NoMatch, UnknownPort
from .netsim.core import Node

log = logging.getLogger(__name__)

# OpenFlow's reserved OFPP_NORMAL: "forward the way a non-SDN switch would"
NORMAL = 0xFFFFFFFA


@dataclass(frozen=True)
class SendToController:
    def __str__(self):
        return "controller"


@dataclass(frozen=True)
class ForwardNormal:
    def __str__(self):
        return "normal"


@dataclass(frozen=True)
class Drop:
    def __str__(self):
        return "drop"


@dataclass(frozen=True)
class Output:
    port: int

    def __str__(self):
        return f"output:{self.port}"


SEND_TO_CONTROLLER = SendToController()
FORWARD_NORMAL = ForwardNormal()
DROP = Drop()


class FrameHeaders(NamedTuple):
    """Outer-header fields a flow rule may match on; None when absent."""

    in_port: int | None = None
    ip_protocol: int | None = None
    src_addr: IPv4Address | None = None
    dst_addr: IPv4Address | None = None
    src_port: int | None = None
    dst_port: int | None = None


def peek_headers(frame, in_port=None):
    """Read match fields from an IPv4 frame without validating checksums."""
    if len(frame) < 20 or frame[0] >> 4 != 4:
        return FrameHeaders(in_port)
    ihl = (frame[0] & 0x0F) * 4
    proto = frame[9]
    src = IPv4Address(frame[12:16])
    dst = IPv4Address(frame[16:20])
    sport = dport = None
    if proto in (6, 17) and len(frame) >= ihl + 4 and not struct.unpack_from("!H", frame, 6)[0] & 0x1FFF:
        sport, dport = struct.unpack_from("!HH", frame, ihl)
    return FrameHeaders(in_port, proto, src, dst, sport, dport)


_MATCH_FIELDS = ("in_port", "ip_protocol", "src_addr", "dst_addr", "src_port", "dst_port")


@dataclass(frozen=True)
class MatchCriteria:
    in_port: int | None = None
    ip_protocol: int | None = None
    src_addr: IPv4Address | None = None
    dst_addr: IPv4Address | None = None
    src_port: int | None = None
    dst_port: int | None = None

    def __post_init__(self):
        for name in ("src_addr", "dst_addr"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, IPv4Address(value))

    def matches(self, headers):
        for name in _MATCH_FIELDS:
            want = getattr(self, name)
            if want is not None and getattr(headers, name) != want:
                return False
        return True

    def overlaps(self, other):
        """True if some frame could satisfy both criteria."""
        for name in _MATCH_FIELDS:
            mine, theirs = getattr(self, name), getattr(other, name)
            if mine is not None and theirs is not None and mine != theirs:
                return False
        return True

    @property
    def is_wildcard(self):
        return all(getattr(self, name) is None for name in _MATCH_FIELDS)

    def __str__(self):
        parts = [f"{name}={getattr(self, name)}" for name in _MATCH_FIELDS if getattr(self, name) is not None]
        return " ".join(parts) or "*"


@dataclass(frozen=True)
class FlowRule:
    priority: int
    match: MatchCriteria
    action: object
    name: str = ""


@dataclass(frozen=True)
class SwitchPort:
    port_id: int
    attached_node: str


class FlowTable:
    """Rules kept in strictly descending priority order."""

    def __init__(self, rules=()):
        self._rules = []
        for rule in rules:
            self.install_flow(rule)

    def install_flow(self, rule):
        # same-action overlap is harmless: whichever rule wins, the outcome is equal
        for other in self._rules:
            if (other.priority == rule.priority and other.action != rule.action
                    and other.match.overlaps(rule.match)):
                raise DuplicatePriorityConflict(
                    f"priority {rule.priority}: '{rule.match}' overlaps '{other.match}'"
                )
        i = 0
        while i < len(self._rules) and self._rules[i].priority >= rule.priority:
            i += 1
        self._rules.insert(i, rule)
        return self

    def classify(self, headers):
        for rule in self._rules:
            if rule.match.matches(headers):
                return rule.action
        raise NoMatch(f"no rule matches {headers}")

    def without_controller_rules(self):
        """Copy of the table with every SendToController rule removed."""
        return FlowTable(r for r in self._rules if not isinstance(r.action, SendToController))

    @property
    def rules(self):
        return tuple(self._rules)

    def __len__(self):
        return len(self._rules)

    def __iter__(self):
        return iter(self._rules)


class Switch(Node):
    """OpenFlow-style switch: table lookup, packet_in, packet_out.

    Counter identity: ``frames_in == forwarded + dropped + to_controller``.
    """

    role = "switch"

    def __init__(self, node_id, table, controller_latency=0):
        super().__init__(node_id)
        self.table = table
        self.controller_latency = controller_latency
        self.ports = {}
        self.routes = {}
        self.controller = None
        self.counters = Counter()

    def add_port(self, port_id, attached_node, addresses=()):
        if port_id in self.ports:
            raise ValueError(f"port {port_id} already exists")
        self.ports[port_id] = SwitchPort(port_id, attached_node)
        for addr in addresses:
            self.routes[IPv4Address(addr)] = port_id

    def attach_controller(self, node):
        self.controller = node

    def on_frame(self, frame, port):
        self.counters["frames_in"] += 1
        headers = peek_headers(frame, port)
        try:
            action = self.table.classify(headers)
        except NoMatch:
            self.counters["no_match"] += 1
            self.counters["dropped"] += 1
            return
        if isinstance(action, SendToController):
            self.counters["to_controller"] += 1
            self.packet_in(frame, port)
        elif isinstance(action, ForwardNormal):
            self._forward_normal(frame, headers)
        elif isinstance(action, Output):
            self._emit(frame, action.port)
        else:
            self.counters["dropped"] += 1

    def _forward_normal(self, frame, headers, counter="forwarded", drop_counter="dropped"):
        port = self.routes.get(headers.dst_addr)
        if port is None or port == headers.in_port:
            self.counters["no_route"] += 1
            self.counters[drop_counter] += 1
            return
        self.counters[counter] += 1
        self.send(port, frame)

    def _emit(self, frame, port, counter="forwarded"):
        if port not in self.ports:
            raise UnknownPort(port)
        self.counters[counter] += 1
        self.send(port, frame)

    def packet_in(self, frame, in_port):
        if self.controller is None:
            raise NoControllerRegistered(self.node_id)
        self.sim.schedule(self.controller.node_id, frame, self.controller_latency,
                          port=in_port, kind="packet_in")

    def packet_out(self, frame, out_port):
        if out_port != NORMAL and out_port not in self.ports:
            raise UnknownPort(out_port)
        self.sim.schedule(self.node_id, frame, self.controller_latency,
                          port=out_port, kind="packet_out")

    def on_packet_out(self, frame, out_port):
        self.counters["packet_outs"] += 1
        if out_port == NORMAL:
            self._forward_normal(frame, peek_headers(frame), counter="packet_out_sent",
                                 drop_counter="packet_out_dropped")
        else:
            self._emit(frame, out_port, counter="packet_out_sent")
