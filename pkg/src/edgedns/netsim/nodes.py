"""User-plane elements: UE, gNB, UPF, data-network servers and the edge DNS."""

import logging
from collections import Counter
from dataclasses import dataclass
from ipaddress import IPv4Address

from ..dnswire import A, decode_dns, encode_dns, make_query, make_response
from ..errors import DecodeError, UpstreamTimeout
from ..flows import peek_headers
from ..gtpu import (
    G_PDU,
    GTPU_PORT,
    GtpUPacket,
    InnerDatagram,
    decode_gtpu,
    decode_inner,
    encode_gtpu,
    encode_inner,
    pdu_session_container,
)
from .core import Node

log = logging.getLogger(__name__)

DNS_PORT = 53
ECHO_PORT = 7


@dataclass
class QuerySample:
    ue: str
    batch: int
    index: int
    qname: str
    txid: int
    issued_at: int
    completed_at: int | None = None
    rcode: int | None = None
    answers: tuple = ()
    # query 5-tuple as sent and response 5-tuple as received
    query_tuple: tuple = ()
    response_tuple: tuple = ()

    @property
    def latency(self):
        if self.completed_at is None:
            return None
        return self.completed_at - self.issued_at

    @property
    def timed_out(self):
        return self.completed_at is None


@dataclass(frozen=True)
class UeWorkload:
    dns_addr: IPv4Address
    domains: tuple
    batches: tuple  # queries this UE issues per batch
    gap: int
    timeout: int
    ue_index: int = 0
    stride: int = 1  # number of UEs sharing the domain round-robin
    txid_base: int = 0x1000
    qtype: int = A
    echo_addr: IPv4Address | None = None
    warmup: bool = True
    background: int = 0
    port_base: int = 32768


class Ue(Node):
    """Closed-loop stub resolver: next query leaves ``gap`` after the last answer."""

    role = "ue"
    RADIO = 0

    def __init__(self, node_id, addr, workload):
        super().__init__(node_id)
        self.addr = IPv4Address(addr)
        self.w = workload
        self.samples = []
        self.batch_started = {}
        self.echo_replies = []
        self.echo_frames = []  # full datagrams as delivered, for differential checks
        self.counters = Counter()
        self._plan = [(b, k) for b, n in enumerate(workload.batches) for k in range(n)]
        self._cursor = 0
        self._outstanding = None
        self._sent = 0
        self._warming = False

    def start(self):
        for i in range(self.w.background):
            self.set_timer(i * self.w.gap, ("bg", i))
        if self.w.warmup and self.w.echo_addr is not None:
            self._warming = True
            self._send_echo(b"warmup " + self.node_id.encode())
            self.set_timer(self.w.timeout, ("warmup",))
        else:
            self.set_timer(0, ("next",))

    def _send_echo(self, payload):
        d = InnerDatagram(self.addr, self.w.echo_addr, ECHO_PORT, ECHO_PORT, payload)
        self.send(self.RADIO, encode_inner(d))

    def _issue(self):
        if self._cursor >= len(self._plan):
            return
        batch, k = self._plan[self._cursor]
        self._cursor += 1
        self.batch_started.setdefault(batch, self.now)
        w = self.w
        qname = w.domains[(w.ue_index + k * w.stride) % len(w.domains)]
        txid = (w.txid_base + self._sent) & 0xFFFF
        sport = w.port_base + self._sent % 16384
        self._sent += 1
        query = make_query(txid, qname, w.qtype)
        d = InnerDatagram(self.addr, w.dns_addr, sport, DNS_PORT, encode_dns(query))
        sample = QuerySample(self.node_id, batch, k, qname, txid, self.now,
                             query_tuple=(d.src_addr, d.src_port, d.dst_addr, d.dst_port))
        self._outstanding = (sample, query)
        self.samples.append(sample)
        self.send(self.RADIO, encode_inner(d))
        self.set_timer(w.timeout, ("timeout", self._sent))

    def on_frame(self, frame, port):
        try:
            d = decode_inner(frame)
        except DecodeError:
            self.counters["malformed"] += 1
            return
        if d.src_port == DNS_PORT:
            self._on_dns(d)
        elif self.w.echo_addr is not None and d.src_addr == self.w.echo_addr:
            self.echo_replies.append(d.udp_payload)
            self.echo_frames.append(frame)
            if self._warming and d.udp_payload.startswith(b"warmup "):
                self._warming = False
                self.set_timer(self.w.gap, ("next",))
        else:
            self.counters["unexpected"] += 1

    def _on_dns(self, d):
        try:
            msg = decode_dns(d.udp_payload)
        except DecodeError:
            self.counters["malformed"] += 1
            return
        if self._outstanding is None:
            self.counters["late_responses"] += 1
            return
        sample, query = self._outstanding
        rtuple = (d.src_addr, d.src_port, d.dst_addr, d.dst_port)
        expected = (sample.query_tuple[2], sample.query_tuple[3], sample.query_tuple[0], sample.query_tuple[1])
        if (not msg.is_response or msg.txid != query.txid or msg.question != query.question
                or rtuple != expected):
            self.counters["mismatched_responses"] += 1
            return
        sample.completed_at = self.now
        sample.rcode = msg.rcode
        sample.answers = msg.answers
        sample.response_tuple = rtuple
        self._outstanding = None
        self.set_timer(self.w.gap, ("next",))

    def on_timer(self, tag, port=None):
        kind = tag[0]
        if kind == "next":
            self._issue()
        elif kind == "timeout":
            if self._outstanding is not None and tag[1] == self._sent:
                self.counters["timeouts"] += 1
                self._outstanding = None
                self.set_timer(self.w.gap, ("next",))
        elif kind == "warmup":
            if self._warming:
                self._warming = False
                self.counters["warmup_lost"] += 1
                self._issue()
        elif kind == "bg":
            self._send_echo(b"bg %s %d" % (self.node_id.encode(), tag[1]))

    @property
    def done(self):
        return self._cursor >= len(self._plan) and self._outstanding is None


class Gnb(Node):
    """Base station: wraps UE datagrams into uplink G-PDUs and unwraps downlink ones."""

    role = "gnb"
    N3 = 0

    def __init__(self, node_id, addr, upf_addr, qfi=9):
        super().__init__(node_id)
        self.addr = IPv4Address(addr)
        self.upf_addr = IPv4Address(upf_addr)
        self.qfi = qfi
        self._ul = {}  # radio port -> uplink teid
        self._dl = {}  # downlink teid -> radio port
        self.counters = Counter()

    def add_session(self, radio_port, ul_teid, dl_teid):
        self._ul[radio_port] = ul_teid
        self._dl[dl_teid] = radio_port

    def on_frame(self, frame, port):
        if port != self.N3:
            teid = self._ul.get(port)
            if teid is None:
                self.counters["no_session"] += 1
                return
            gpdu = GtpUPacket(teid, frame, e_flag=True,
                              extensions=(pdu_session_container(self.qfi, downlink=False),))
            outer = InnerDatagram(self.addr, self.upf_addr, GTPU_PORT, GTPU_PORT, encode_gtpu(gpdu))
            self.send(self.N3, encode_inner(outer))
            return
        try:
            packet = decode_gtpu(decode_inner(frame).udp_payload)
        except DecodeError:
            self.counters["malformed"] += 1
            return
        radio = self._dl.get(packet.teid) if packet.message_type == G_PDU else None
        if radio is None:
            self.counters["unknown_teid"] += 1
            return
        self.counters["delivered"] += 1
        self.send(radio, packet.payload)


class Upf(Node):
    """Anchors the tunnels: N3 on port 0, one data-network port per server."""

    role = "upf"
    N3 = 0

    def __init__(self, node_id, addr, qfi=9):
        super().__init__(node_id)
        self.addr = IPv4Address(addr)
        self.qfi = qfi
        self.routes = {}
        self._ul = {}  # uplink teid -> ue addr
        self._dl = {}  # ue addr -> (downlink teid, gnb addr)
        self.counters = Counter()

    def add_session(self, ue_addr, ul_teid, dl_teid, gnb_addr):
        ue_addr = IPv4Address(ue_addr)
        self._ul[ul_teid] = ue_addr
        self._dl[ue_addr] = (dl_teid, IPv4Address(gnb_addr))

    def add_route(self, addr, port):
        self.routes[IPv4Address(addr)] = port

    def on_frame(self, frame, port):
        if port == self.N3:
            try:
                packet = decode_gtpu(decode_inner(frame).udp_payload)
            except DecodeError:
                self.counters["malformed"] += 1
                return
            if packet.message_type != G_PDU or packet.teid not in self._ul:
                self.counters["unknown_teid"] += 1
                return
            out = self.routes.get(peek_headers(packet.payload).dst_addr)
            if out is None:
                self.counters["no_route"] += 1
                return
            self.counters["uplink"] += 1
            self.send(out, packet.payload)
            return
        dst = peek_headers(frame).dst_addr
        session = self._dl.get(dst)
        if session is None:
            self.counters["no_session"] += 1
            return
        teid, gnb = session
        gpdu = GtpUPacket(teid, frame, e_flag=True,
                          extensions=(pdu_session_container(self.qfi, downlink=True),))
        outer = InnerDatagram(self.addr, gnb, GTPU_PORT, GTPU_PORT, encode_gtpu(gpdu))
        self.counters["downlink"] += 1
        self.send(self.N3, encode_inner(outer))


class _DnsNode(Node):
    role = "dns"
    PORT = 0

    def __init__(self, node_id, addr):
        super().__init__(node_id)
        self.addr = IPv4Address(addr)
        self.counters = Counter()

    def _parse_query(self, frame):
        try:
            d = decode_inner(frame)
            msg = decode_dns(d.udp_payload)
        except DecodeError:
            self.counters["malformed"] += 1
            return None, None
        if msg.is_response or d.dst_port != DNS_PORT:
            self.counters["ignored"] += 1
            return None, None
        self.counters["queries"] += 1
        return d, msg

    def _reply(self, d, response, delay):
        self.send(self.PORT, encode_inner(d.reply(encode_dns(response))), delay)


class RemoteDnsServer(_DnsNode):
    """A public resolver beyond the core: fixed service time, no cache on the path."""

    def __init__(self, node_id, addr, model):
        super().__init__(node_id, addr)
        self.model = model

    def on_frame(self, frame, port):
        d, query = self._parse_query(frame)
        if query is None:
            return
        try:
            delay = self.model.sample(self.sim.rng)
        except UpstreamTimeout:
            self.counters["dropped"] += 1
            return
        answers, nonexistent = self.model.zone.answer(query.question)
        self._reply(d, make_response(query, answers, ra=True, nonexistent=nonexistent), delay)


class EdgeDnsServer(_DnsNode):
    role = "edge-dns"

    def __init__(self, node_id, addr, resolver):
        super().__init__(node_id, addr)
        self.resolver = resolver

    def start(self):
        if self.resolver.rng is None:
            self.resolver.rng = self.sim.rng

    def on_frame(self, frame, port):
        d, query = self._parse_query(frame)
        if query is None:
            return
        try:
            res = self.resolver.resolve(query.question, self.now)
        except UpstreamTimeout:
            return
        response = make_response(query, res.answers, ra=True, nonexistent=res.nonexistent)
        self._reply(d, response, res.completes_at - self.now)


class EchoServer(Node):
    """Data-network host that reflects any UDP datagram; stands in for app traffic."""

    role = "echo"
    PORT = 0

    def __init__(self, node_id, addr):
        super().__init__(node_id)
        self.addr = IPv4Address(addr)
        self.received = []

    def on_frame(self, frame, port):
        try:
            d = decode_inner(frame)
        except DecodeError:
            return
        self.received.append((d.src_addr, d.src_port, d.udp_payload))
        self.send(self.PORT, encode_inner(d.reply(d.udp_payload)))
