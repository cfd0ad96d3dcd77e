"""GTP-U (3GPP TS 29.281) frames and the IPv4/UDP datagrams they tunnel.

All functions here are pure: bytes in, values out (or the reverse).  Decoders
raise a subclass of :class:`~edgedns.errors.DecodeError` for every malformed
input and never read past the buffer they were given.
"""

import struct
from dataclasses import dataclass, field
from ipaddress import IPv4Address

from .checksum import IPPROTO_UDP, internet_checksum, pseudo_header, udp_checksum
from .errors import (
    BadChecksum,
    DecodeError,
    Fragmented,
    InvalidExtensionLength,
    LengthMismatch,
    MalformedExtension,
    NotIpv4,
    NotUdp,
    PayloadTooLarge,
    Truncated,
    TruncatedFrame,
    UnsupportedVersion,
)

GTPU_PORT = 2152
G_PDU = 255
ECHO_REQUEST = 1
ECHO_RESPONSE = 2
END_MARKER = 254

PDU_SESSION_CONTAINER = 0x85

_HDR = struct.Struct("!BBHI")
_OPT = struct.Struct("!HBB")
_IPV4 = struct.Struct("!BBHHHBBH4s4s")
_UDP = struct.Struct("!HHHH")

MAX_DATAGRAM = 0xFFFF


@dataclass(frozen=True)
class ExtensionHeader:
    """One link of the GTP-U extension chain.

    ``content`` excludes the length octet and the trailing next-type octet,
    so ``len(content) + 2`` must be a multiple of 4.
    """

    ext_type: int
    content: bytes = b"\x00\x00"

    def __post_init__(self):
        if not 0 < self.ext_type <= 0xFF:
            raise ValueError(f"extension type must be 1..255, got {self.ext_type}")
        object.__setattr__(self, "content", bytes(self.content))

    @property
    def wire_length(self):
        return len(self.content) + 2


def pdu_session_container(qfi, downlink=True):
    """PDU Session Container carrying a QoS flow id (opaque to the pipeline)."""
    pdu_type = 0 if downlink else 1
    return ExtensionHeader(PDU_SESSION_CONTAINER, bytes([pdu_type << 4, qfi & 0x3F]))


@dataclass(frozen=True)
class GtpUPacket:
    teid: int
    payload: bytes = b""
    message_type: int = G_PDU
    e_flag: bool = False
    s_flag: bool = False
    pn_flag: bool = False
    sequence: int | None = None
    npdu: int | None = None
    extensions: tuple = ()
    version: int = 1
    pt_flag: bool = True

    def __post_init__(self):
        if not 0 <= self.teid <= 0xFFFFFFFF:
            raise ValueError(f"teid out of range: {self.teid}")
        if not 0 <= self.message_type <= 0xFF:
            raise ValueError(f"message type out of range: {self.message_type}")
        object.__setattr__(self, "payload", bytes(self.payload))
        object.__setattr__(self, "extensions", tuple(self.extensions))
        if self.has_optional_block:
            # the block is on the wire whenever any flag is set
            if self.sequence is None:
                object.__setattr__(self, "sequence", 0)
            if self.npdu is None:
                object.__setattr__(self, "npdu", 0)
        elif self.sequence is not None or self.npdu is not None:
            raise ValueError("sequence/npdu given but no optional-field flag set")
        if self.extensions and not self.e_flag:
            raise ValueError("extension headers present but e_flag is clear")
        if self.sequence is not None and not 0 <= self.sequence <= 0xFFFF:
            raise ValueError(f"sequence out of range: {self.sequence}")
        if self.npdu is not None and not 0 <= self.npdu <= 0xFF:
            raise ValueError(f"npdu out of range: {self.npdu}")

    @property
    def has_optional_block(self):
        return self.e_flag or self.s_flag or self.pn_flag


def decode_gtpu(raw):
    raw = bytes(raw)
    if len(raw) < 8:
        raise TruncatedFrame(f"need 8 header bytes, have {len(raw)}")
    flags, mtype, length, teid = _HDR.unpack_from(raw)
    version = flags >> 5
    if version != 1:
        raise UnsupportedVersion(f"GTP version {version}")
    if not flags & 0x10:
        raise UnsupportedVersion("PT=0 (GTP') is not GTP-U")
    e, s, pn = bool(flags & 0x04), bool(flags & 0x02), bool(flags & 0x01)
    end = 8 + length
    if len(raw) < end:
        raise TruncatedFrame(f"length field says {length}, only {len(raw) - 8} follow")
    if len(raw) > end:
        raise LengthMismatch(f"{len(raw) - end} bytes beyond declared length")

    pos = 8
    sequence = npdu = None
    extensions = []
    if e or s or pn:
        if end < 12:
            raise TruncatedFrame("optional field block cut short")
        sequence, npdu, next_type = _OPT.unpack_from(raw, 8)
        pos = 12
        if next_type and not e:
            raise MalformedExtension("next-extension type set without E flag")
        while next_type:
            if pos >= end:
                raise MalformedExtension("extension chain runs past frame end")
            ext_len = raw[pos] * 4
            if ext_len == 0:
                raise MalformedExtension("zero-length extension header")
            if pos + ext_len > end:
                raise MalformedExtension("extension chain runs past frame end")
            extensions.append(ExtensionHeader(next_type, raw[pos + 1:pos + ext_len - 1]))
            next_type = raw[pos + ext_len - 1]
            pos += ext_len

    return GtpUPacket(
        teid=teid,
        payload=raw[pos:end],
        message_type=mtype,
        e_flag=e,
        s_flag=s,
        pn_flag=pn,
        sequence=sequence,
        npdu=npdu,
        extensions=tuple(extensions),
    )


def encode_gtpu(p):
    body = bytearray()
    if p.has_optional_block:
        first = p.extensions[0].ext_type if p.extensions else 0
        body += _OPT.pack(p.sequence, p.npdu, first)
        for i, ext in enumerate(p.extensions):
            size = ext.wire_length
            if size % 4 or size > 255 * 4:
                raise InvalidExtensionLength(
                    f"extension 0x{ext.ext_type:02x}: {size} bytes is not a multiple of 4 (<=1020)"
                )
            nxt = p.extensions[i + 1].ext_type if i + 1 < len(p.extensions) else 0
            body.append(size // 4)
            body += ext.content
            body.append(nxt)
    body += p.payload
    if len(body) > 0xFFFF:
        raise PayloadTooLarge(f"GTP-U body of {len(body)} bytes")
    flags = (p.version << 5) | (0x10 if p.pt_flag else 0)
    flags |= (0x04 if p.e_flag else 0) | (0x02 if p.s_flag else 0) | (0x01 if p.pn_flag else 0)
    return _HDR.pack(flags, p.message_type, len(body), p.teid) + bytes(body)


@dataclass(frozen=True)
class InnerDatagram:
    """An IPv4/UDP datagram (the tunneled packet, or an outer N3 header).

    ``tos``, ``ident`` and ``dont_fragment`` ride along so captured headers
    re-encode byte-for-byte; they default to the values the pipeline crafts.
    """

    src_addr: IPv4Address
    dst_addr: IPv4Address
    src_port: int
    dst_port: int
    udp_payload: bytes = b""
    ttl_hops: int = 64
    protocol: int = IPPROTO_UDP
    tos: int = 0
    ident: int = 0
    dont_fragment: bool = False

    def __post_init__(self):
        object.__setattr__(self, "src_addr", as_addr(self.src_addr))
        object.__setattr__(self, "dst_addr", as_addr(self.dst_addr))
        object.__setattr__(self, "udp_payload", bytes(self.udp_payload))
        for name in ("src_port", "dst_port", "ident"):
            if not 0 <= getattr(self, name) <= 0xFFFF:
                raise ValueError(f"{name} out of range: {getattr(self, name)}")
        for name in ("ttl_hops", "tos"):
            if not 0 <= getattr(self, name) <= 0xFF:
                raise ValueError(f"{name} out of range: {getattr(self, name)}")
        if self.protocol != IPPROTO_UDP:
            raise ValueError("only UDP datagrams can be represented")

    def reply(self, udp_payload):
        """Datagram travelling the reversed 5-tuple."""
        return InnerDatagram(
            self.dst_addr, self.src_addr, self.dst_port, self.src_port, udp_payload,
            ttl_hops=self.ttl_hops,
        )


def as_addr(value):
    """IPv4Address from anything it accepts; existing instances pass through."""
    return value if type(value) is IPv4Address else IPv4Address(value)


def decode_inner(payload):
    b = bytes(payload)
    if not b:
        raise Truncated("empty datagram")
    if b[0] >> 4 != 4:
        raise NotIpv4(f"IP version {b[0] >> 4}")
    if len(b) < 20:
        raise Truncated("IPv4 header cut short")
    (ver_ihl, tos, total, ident, frag, ttl, proto, _csum, src, dst) = _IPV4.unpack_from(b)
    ihl = (ver_ihl & 0x0F) * 4
    if ihl < 20:
        raise DecodeError(f"IHL of {ihl} bytes")
    if total < ihl:
        raise LengthMismatch(f"total length {total} shorter than header")
    if len(b) < total or len(b) < ihl:
        raise Truncated(f"total length {total}, have {len(b)}")
    if len(b) > total:
        raise LengthMismatch(f"{len(b) - total} bytes beyond total length")
    if internet_checksum(b[:ihl]):
        raise BadChecksum("IPv4 header checksum")
    if frag & 0x2000 or frag & 0x1FFF:
        raise Fragmented("fragmented datagrams are not reassembled")
    if proto != IPPROTO_UDP:
        raise NotUdp(f"IP protocol {proto}")
    seg = b[ihl:total]
    if len(seg) < 8:
        raise Truncated("UDP header cut short")
    sport, dport, ulen, ucsum = _UDP.unpack_from(seg)
    if ulen > len(seg):
        raise Truncated(f"UDP length {ulen}, have {len(seg)}")
    if ulen != len(seg):
        raise LengthMismatch(f"UDP length {ulen} != {len(seg)}")
    if ucsum and internet_checksum(pseudo_header(src, dst, IPPROTO_UDP, ulen) + seg):
        raise BadChecksum("UDP checksum")
    return InnerDatagram(
        IPv4Address(src), IPv4Address(dst), sport, dport, seg[8:],
        ttl_hops=ttl, tos=tos, ident=ident, dont_fragment=bool(frag & 0x4000),
    )


def encode_inner(d):
    ulen = 8 + len(d.udp_payload)
    total = 20 + ulen
    if total > MAX_DATAGRAM:
        raise PayloadTooLarge(f"datagram of {total} bytes")
    src, dst = d.src_addr.packed, d.dst_addr.packed
    seg = _UDP.pack(d.src_port, d.dst_port, ulen, 0) + d.udp_payload
    seg = seg[:6] + struct.pack("!H", udp_checksum(src, dst, seg)) + seg[8:]
    frag = 0x4000 if d.dont_fragment else 0
    hdr = _IPV4.pack(0x45, d.tos, total, d.ident, frag, d.ttl_hops, d.protocol, 0, src, dst)
    hdr = hdr[:10] + struct.pack("!H", internet_checksum(hdr)) + hdr[12:]
    return hdr + seg
