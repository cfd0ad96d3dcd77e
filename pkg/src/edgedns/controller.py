"""gNB-resident SDN controller: learn tunnels, divert DNS queries, inject answers.

The :class:`Controller` is a deterministic state machine that maps one
packet_in to a list of packet_out instructions.  :class:`ControllerApp` binds
it to a :class:`~edgedns.flows.Switch` inside a simulation and arms the
pending-query timers.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from ipaddress import IPv4Address, IPv4Network

from .dnswire import decode_dns
from .errors import (
    DecodeError,
    NoDownlinkTeid,
    NoPendingMatch,
    NotAQuery,
    RelayPortsExhausted,
    UndecodableDns,
)
from .flows import NORMAL, peek_headers
from .gtpu import (
    G_PDU,
    GTPU_PORT,
    GtpUPacket,
    InnerDatagram,
    as_addr,
    decode_gtpu,
    decode_inner,
    encode_gtpu,
    encode_inner,
)
from .netsim.core import SECOND, Node

log = logging.getLogger(__name__)

DNS_PORT = 53
UPLINK = "uplink"
DOWNLINK = "downlink"

COUNTER_NAMES = (
    "queries_extracted",
    "responses_injected",
    "timeouts",
    "no_pending_match",
    "no_downlink_teid",
    "fail_open_forwards",
)


@dataclass
class TunnelEntry:
    ue_addr: IPv4Address
    uplink_teid: int | None = None
    downlink_teid: int | None = None
    gnb_addr: IPv4Address | None = None
    upf_addr: IPv4Address | None = None
    last_seen: int = 0
    downlink_extensions: tuple = ()


class TunnelDatabase:
    """UE address -> learned tunnel bindings, one per direction."""

    def __init__(self):
        self.entries = {}
        self.rebinds = 0

    def get(self, ue_addr):
        return self.entries.get(as_addr(ue_addr))

    def bind(self, ue_addr, direction, teid, gnb_addr, upf_addr, now, extensions=()):
        entry = self.entries.get(ue_addr)
        if entry is None:
            entry = self.entries[ue_addr] = TunnelEntry(ue_addr)
        other = entry.downlink_teid if direction == UPLINK else entry.uplink_teid
        if other == teid:
            log.warning("ignoring %s teid 0x%x for %s: equals opposite direction", direction, teid, ue_addr)
            return entry
        attr = "uplink_teid" if direction == UPLINK else "downlink_teid"
        current = getattr(entry, attr)
        if current is not None and current != teid:
            self.rebinds += 1
            log.info("rebind %s %s teid 0x%x -> 0x%x", ue_addr, direction, current, teid)
        setattr(entry, attr, teid)
        entry.gnb_addr = gnb_addr
        entry.upf_addr = upf_addr
        entry.last_seen = now
        if direction == DOWNLINK:
            entry.downlink_extensions = tuple(extensions)
        return entry

    def __len__(self):
        return len(self.entries)


@dataclass
class PendingQuery:
    key: tuple  # (txid, lowercased qname, qtype)
    ue_addr: IPv4Address
    ue_port: int
    original_dst: IPv4Address
    issued_at: int
    relay_port: int = 0  # controller-side ephemeral port, 1:1 with this entry


@dataclass(frozen=True)
class PacketOut:
    frame: bytes
    out_port: int


@dataclass(frozen=True)
class ResolverDispatch(PacketOut):
    pending: PendingQuery = field(default=None, compare=False)


class Controller:
    def __init__(self, *, controller_addr, edge_dns_addr, ue_network, gnb_port, edge_port,
                 pending_timeout=5 * SECOND, ephemeral_ports=(49152, 65535)):
        self.controller_addr = IPv4Address(controller_addr)
        self.edge_dns_addr = IPv4Address(edge_dns_addr)
        self.ue_network = IPv4Network(ue_network)
        self.gnb_port = gnb_port
        self.edge_port = edge_port
        self.pending_timeout = pending_timeout
        self._port_lo, self._port_hi = ephemeral_ports
        self._next_port = self._port_lo
        self.tunnels = TunnelDatabase()
        self.pending = {}  # relay port -> PendingQuery
        self._by_origin = {}  # (ue_addr, ue_port, key) -> relay port
        self.counters = Counter({name: 0 for name in COUNTER_NAMES})
        self.latencies = []  # (ue_addr, key, ns) per injected response

    # --- dispatcher --------------------------------------------------------

    def handle_packet_in(self, frame, in_port, now):
        try:
            outer = decode_inner(frame)
        except DecodeError:
            return self._fail_open(frame)

        if outer.dst_port == GTPU_PORT:
            try:
                packet = decode_gtpu(outer.udp_payload)
            except DecodeError:
                return self._fail_open(frame)
            if packet.message_type != G_PDU:
                return self._forward(frame)
            direction = self.learn_tunnel(packet, outer.src_addr, outer.dst_addr, now)
            if direction == UPLINK:
                try:
                    inner = self._dns_candidate(packet)
                except UndecodableDns:
                    return self._fail_open(frame)
                if inner is not None:
                    try:
                        return [self.extract_query(packet, now, inner=inner)]
                    except NoDownlinkTeid:
                        self.counters["unlearned_passthrough"] += 1
                        return self._forward(frame)
                    except (NotAQuery, UndecodableDns, RelayPortsExhausted):
                        return self._fail_open(frame)
            return self._forward(frame)

        if outer.src_addr == self.edge_dns_addr and outer.src_port == DNS_PORT:
            try:
                return [self.inject_response(outer, now)]
            except NoPendingMatch:
                self.counters["no_pending_match"] += 1
            except NoDownlinkTeid:
                self.counters["no_downlink_teid"] += 1
            except UndecodableDns:
                self.counters["malformed_responses"] += 1
            return []

        return self._fail_open(frame)

    def _forward(self, frame):
        self.counters["forwarded"] += 1
        return [PacketOut(frame, NORMAL)]

    def _fail_open(self, frame):
        self.counters["fail_open_forwards"] += 1
        return [PacketOut(frame, NORMAL)]

    def _dns_candidate(self, packet):
        """Inner datagram if it is UDP to port 53, else None."""
        h = peek_headers(packet.payload)
        if h.ip_protocol != 17 or h.dst_port != DNS_PORT:
            return None
        try:
            return decode_inner(packet.payload)
        except DecodeError as exc:
            raise UndecodableDns(str(exc)) from exc

    # --- stage 1: learning -------------------------------------------------

    def learn_tunnel(self, packet, outer_src, outer_dst, now):
        """Record which TEID carries which UE, and in which direction.

        Returns ``"uplink"``, ``"downlink"`` or None when nothing was learned.
        """
        if packet.message_type != G_PDU:
            return None
        h = peek_headers(packet.payload)
        if h.src_addr is None:
            return None
        if h.src_addr in self.ue_network:
            self.tunnels.bind(h.src_addr, UPLINK, packet.teid, as_addr(outer_src),
                              as_addr(outer_dst), now)
            return UPLINK
        if h.dst_addr in self.ue_network:
            self.tunnels.bind(h.dst_addr, DOWNLINK, packet.teid, as_addr(outer_dst),
                              as_addr(outer_src), now, packet.extensions)
            return DOWNLINK
        return None

    # --- stage 2: query extraction ------------------------------------------

    def extract_query(self, packet, now, inner=None):
        if inner is None:
            try:
                inner = decode_inner(packet.payload)
            except DecodeError as exc:
                raise UndecodableDns(str(exc)) from exc
        try:
            query = decode_dns(inner.udp_payload)
        except DecodeError as exc:
            raise UndecodableDns(str(exc)) from exc
        if query.is_response:
            raise NotAQuery("QR set on an uplink datagram")
        entry = self.tunnels.get(inner.src_addr)
        if entry is None or entry.downlink_teid is None:
            raise NoDownlinkTeid(str(inner.src_addr))

        key = (query.txid, query.question.qname.key(), query.question.qtype)
        origin = (inner.src_addr, inner.src_port, key)
        port = self._by_origin.get(origin)
        if port is not None:
            pending = self.pending[port]
            pending.issued_at = now
            self.counters["retransmissions"] += 1
        else:
            port = self._allocate_port()
            pending = PendingQuery(key, inner.src_addr, inner.src_port, inner.dst_addr, now, port)
            self.pending[port] = pending
            self._by_origin[origin] = port
            self.counters["queries_extracted"] += 1

        relay = InnerDatagram(self.controller_addr, self.edge_dns_addr, port, DNS_PORT, inner.udp_payload)
        return ResolverDispatch(encode_inner(relay), self.edge_port, pending)

    def _allocate_port(self):
        span = self._port_hi - self._port_lo + 1
        for _ in range(span):
            port = self._next_port
            self._next_port = self._port_lo + (port - self._port_lo + 1) % span
            if port not in self.pending:
                return port
        raise RelayPortsExhausted(f"{span} relay ports in use")

    # --- stage 3: response injection -----------------------------------------

    def inject_response(self, resp, now):
        """Wrap an edge-resolver answer into the UE's downlink tunnel.

        ``resp`` is the resolver's datagram, either decoded or as frame bytes.
        """
        if isinstance(resp, (bytes, bytearray)):
            try:
                resp = decode_inner(resp)
            except DecodeError as exc:
                raise UndecodableDns(str(exc)) from exc
        try:
            answer = decode_dns(resp.udp_payload)
        except DecodeError as exc:
            raise UndecodableDns(str(exc)) from exc
        if not answer.is_response:
            raise UndecodableDns("edge resolver sent a query")
        pending = self.pending.get(resp.dst_port)
        key = (answer.txid, answer.question.qname.key(), answer.question.qtype)
        if pending is None or pending.key != key:
            raise NoPendingMatch(f"port {resp.dst_port} txid 0x{answer.txid:04x}")
        entry = self.tunnels.get(pending.ue_addr)
        if entry is None or entry.downlink_teid is None:
            raise NoDownlinkTeid(str(pending.ue_addr))

        self._release(pending)
        to_ue = InnerDatagram(pending.original_dst, pending.ue_addr, DNS_PORT, pending.ue_port,
                              resp.udp_payload)
        exts = entry.downlink_extensions
        gpdu = GtpUPacket(entry.downlink_teid, encode_inner(to_ue), e_flag=bool(exts), extensions=exts)
        outer = InnerDatagram(entry.upf_addr, entry.gnb_addr, GTPU_PORT, GTPU_PORT, encode_gtpu(gpdu))
        self.counters["responses_injected"] += 1
        self.latencies.append((pending.ue_addr, pending.key, now - pending.issued_at))
        return PacketOut(encode_inner(outer), self.gnb_port)

    def _release(self, pending):
        del self.pending[pending.relay_port]
        del self._by_origin[(pending.ue_addr, pending.ue_port, pending.key)]

    def expire_pending(self, now):
        """Drop pending queries older than the timeout; each counts as a loss."""
        expired = [p for p in self.pending.values() if now - p.issued_at >= self.pending_timeout]
        for p in expired:
            self._release(p)
            self.counters["timeouts"] += 1
        return expired


class ControllerApp(Node):
    """Runs a :class:`Controller` behind a switch's packet_in channel."""

    role = "controller"

    def __init__(self, node_id, controller, switch):
        super().__init__(node_id)
        self.controller = controller
        self.switch = switch
        switch.attach_controller(self)

    def on_packet_in(self, frame, in_port):
        for action in self.controller.handle_packet_in(frame, in_port, self.now):
            self.switch.packet_out(action.frame, action.out_port)
            if isinstance(action, ResolverDispatch):
                self.set_timer(self.controller.pending_timeout, "expire")

    def on_timer(self, tag, port=None):
        self.controller.expire_pending(self.now)
