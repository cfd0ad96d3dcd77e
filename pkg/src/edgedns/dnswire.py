"""DNS message codec (RFC 1035 subset): one question, A/AAAA/CNAME answers.

Other record types pass through with opaque rdata.  The decoder follows
compression pointers; the encoder never emits them.
"""

import struct
from dataclasses import dataclass
from ipaddress import IPv4Address, IPv6Address

from .errors import (
    CompressionLoop,
    DecodeError,
    EncodeError,
    MultipleQuestions,
    NameTooLong,
    Truncated,
)

A = 1
NS = 2
CNAME = 5
SOA = 6
AAAA = 28
IN = 1

NOERROR = 0
SERVFAIL = 2
NXDOMAIN = 3

TYPE_NAMES = {A: "A", NS: "NS", CNAME: "CNAME", SOA: "SOA", AAAA: "AAAA"}
TYPE_CODES = {v: k for k, v in TYPE_NAMES.items()}

_HEADER = struct.Struct("!HHHHHH")
_RR_FIXED = struct.Struct("!HHIH")
MAX_TTL = 2**31 - 1


@dataclass(frozen=True)
class Name:
    """A domain name as a tuple of raw labels; the root is the empty tuple."""

    labels: tuple = ()

    def __post_init__(self):
        labels = tuple(bytes(label) for label in self.labels)
        for label in labels:
            if not 1 <= len(label) <= 63:
                raise NameTooLong(f"label of {len(label)} bytes")
        if sum(len(label) + 1 for label in labels) + 1 > 255:
            raise NameTooLong("name exceeds 255 octets on the wire")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_text(cls, text):
        text = text.rstrip(".")
        if not text:
            return cls(())
        return cls(tuple(part.encode("ascii") for part in text.split(".")))

    def key(self):
        """Case-folded form used for cache and pending-query keys."""
        return b".".join(label.lower() for label in self.labels).decode("ascii", "backslashreplace")

    def to_wire(self):
        out = bytearray()
        for label in self.labels:
            out.append(len(label))
            out += label
        out.append(0)
        return bytes(out)

    def __str__(self):
        if not self.labels:
            return "."
        return ".".join(label.decode("ascii", "backslashreplace") for label in self.labels)


def _as_name(value):
    if isinstance(value, Name):
        return value
    return Name.from_text(value)


@dataclass(frozen=True)
class Question:
    qname: Name
    qtype: int = A
    qclass: int = IN

    def __post_init__(self):
        object.__setattr__(self, "qname", _as_name(self.qname))

    def key(self):
        return (self.qname.key(), self.qtype)


@dataclass(frozen=True)
class ResourceRecord:
    name: Name
    rtype: int
    ttl: int
    rdata: object
    rclass: int = IN

    def __post_init__(self):
        object.__setattr__(self, "name", _as_name(self.name))
        if not 0 <= self.ttl <= MAX_TTL:
            raise ValueError(f"ttl must be below 2**31, got {self.ttl}")
        rdata = self.rdata
        if self.rtype == A:
            rdata = rdata if type(rdata) is IPv4Address else IPv4Address(rdata)
        elif self.rtype == AAAA:
            rdata = rdata if type(rdata) is IPv6Address else IPv6Address(rdata)
        elif self.rtype == CNAME:
            rdata = _as_name(rdata)
        elif not isinstance(rdata, (bytes, bytearray)):
            raise ValueError(f"type {self.rtype} takes opaque bytes rdata")
        else:
            rdata = bytes(rdata)
        object.__setattr__(self, "rdata", rdata)

    def with_ttl(self, ttl):
        return ResourceRecord(self.name, self.rtype, ttl, self.rdata, self.rclass)

    def rdata_wire(self):
        if self.rtype in (A, AAAA):
            return self.rdata.packed
        if self.rtype == CNAME:
            return self.rdata.to_wire()
        return self.rdata


@dataclass(frozen=True)
class DnsMessage:
    txid: int
    question: Question
    is_response: bool = False
    rcode: int = NOERROR
    recursion_desired: bool = True
    recursion_available: bool = False
    answers: tuple = ()

    def __post_init__(self):
        if not 0 <= self.txid <= 0xFFFF:
            raise ValueError(f"txid out of range: {self.txid}")
        if not 0 <= self.rcode <= 15:
            raise ValueError(f"rcode out of range: {self.rcode}")
        object.__setattr__(self, "answers", tuple(self.answers))
        if not self.is_response and self.answers:
            raise ValueError("a query carries no answers")


def make_query(txid, qname, qtype=A, rd=True):
    return DnsMessage(txid, Question(qname, qtype), recursion_desired=rd)


def make_response(query, answers, ra=True, nonexistent=False):
    """Build the response to ``query``, echoing its txid, RD bit and question."""
    if query.is_response:
        raise ValueError("cannot answer a response")
    answers = tuple(answers)
    rcode = NXDOMAIN if nonexistent and not answers else NOERROR
    return DnsMessage(
        txid=query.txid,
        question=query.question,
        is_response=True,
        rcode=rcode,
        recursion_desired=query.recursion_desired,
        recursion_available=ra,
        answers=answers,
    )


def _read_name(raw, pos):
    labels = []
    size = 1
    hops = 0
    resume = None
    n = len(raw)
    while True:
        if pos >= n:
            raise Truncated("name runs past end of message")
        length = raw[pos]
        kind = length & 0xC0
        if kind == 0xC0:
            if pos + 1 >= n:
                raise Truncated("compression pointer cut short")
            if resume is None:
                resume = pos + 2
            hops += 1
            if hops > n:
                raise CompressionLoop(f"more than {n} pointer hops")
            pos = ((length & 0x3F) << 8) | raw[pos + 1]
        elif kind:
            raise DecodeError(f"reserved label type 0x{kind:02x}")
        elif length == 0:
            pos += 1
            break
        else:
            if pos + 1 + length > n:
                raise Truncated("label runs past end of message")
            labels.append(raw[pos + 1:pos + 1 + length])
            size += length + 1
            if size > 255:
                raise DecodeError("name exceeds 255 octets")
            pos += 1 + length
    return Name(tuple(labels)), (resume if resume is not None else pos)


def _read_rr(raw, pos):
    name, pos = _read_name(raw, pos)
    if pos + 10 > len(raw):
        raise Truncated("resource record header cut short")
    rtype, rclass, ttl, rdlen = _RR_FIXED.unpack_from(raw, pos)
    pos += 10
    end = pos + rdlen
    if end > len(raw):
        raise Truncated("rdata runs past end of message")
    if ttl > MAX_TTL:
        ttl = 0  # RFC 2181 s8
    if rtype == A:
        if rdlen != 4:
            raise DecodeError(f"A rdata of {rdlen} bytes")
        rdata = IPv4Address(raw[pos:end])
    elif rtype == AAAA:
        if rdlen != 16:
            raise DecodeError(f"AAAA rdata of {rdlen} bytes")
        rdata = IPv6Address(raw[pos:end])
    elif rtype == CNAME:
        rdata, after = _read_name(raw, pos)
        if after != end:
            raise DecodeError("CNAME rdata length mismatch")
    else:
        rdata = raw[pos:end]
    return ResourceRecord(name, rtype, ttl, rdata, rclass), end


def decode_dns(raw):
    raw = bytes(raw)
    if len(raw) < 12:
        raise Truncated(f"header needs 12 bytes, have {len(raw)}")
    txid, flags, qd, an, ns, ar = _HEADER.unpack_from(raw)
    if qd != 1:
        raise MultipleQuestions(f"qdcount={qd}")
    qname, pos = _read_name(raw, 12)
    if pos + 4 > len(raw):
        raise Truncated("question cut short")
    qtype, qclass = struct.unpack_from("!HH", raw, pos)
    pos += 4
    answers = []
    for _ in range(an):
        rr, pos = _read_rr(raw, pos)
        answers.append(rr)
    # authority/additional are validated but not modelled
    for _ in range(ns + ar):
        _, pos = _read_rr(raw, pos)
    is_response = bool(flags & 0x8000)
    if not is_response and answers:
        raise DecodeError("query carries answer records")
    return DnsMessage(
        txid=txid,
        question=Question(qname, qtype, qclass),
        is_response=is_response,
        rcode=flags & 0x000F,
        recursion_desired=bool(flags & 0x0100),
        recursion_available=bool(flags & 0x0080),
        answers=tuple(answers),
    )


def encode_dns(m):
    flags = (0x8000 if m.is_response else 0) | m.rcode
    flags |= (0x0100 if m.recursion_desired else 0) | (0x0080 if m.recursion_available else 0)
    out = bytearray(_HEADER.pack(m.txid, flags, 1, len(m.answers), 0, 0))
    q = m.question
    out += q.qname.to_wire()
    out += struct.pack("!HH", q.qtype, q.qclass)
    for rr in m.answers:
        rdata = rr.rdata_wire()
        if len(rdata) > 0xFFFF:
            raise EncodeError(f"rdata of {len(rdata)} bytes")
        out += rr.name.to_wire()
        out += _RR_FIXED.pack(rr.rtype, rr.rclass, rr.ttl, len(rdata))
        out += rdata
    return bytes(out)
