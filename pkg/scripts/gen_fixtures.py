"""Regenerate the codec fixture corpus under src/edgedns/fixtures.

Frames are built with scapy and dnspython (or laid out by hand with struct
for shapes those libraries will not produce), and the ``.expect`` fields come
from dissecting each frame with the same third-party libraries.  Nothing here
imports the package's own codecs, so the corpus is an independent oracle.

    python3 scripts/gen_fixtures.py [OUT_DIR]
"""

import struct
import sys
from pathlib import Path

import dns.flags
import dns.message
import dns.rcode
import dns.rdatatype
import dns.rrset
from scapy.all import IP, TCP, UDP, IPv6, Raw
from scapy.contrib.gtp import GTP_U_Header, GTPPDUSessionContainer

ROOT = Path(__file__).resolve().parent.parent / "src" / "edgedns" / "fixtures"


def write(out, kind, name, raw, expect):
    d = out / kind
    d.mkdir(parents=True, exist_ok=True)
    hexed = raw.hex()
    (d / f"{name}.hex").write_text("\n".join(hexed[i:i + 64] for i in range(0, len(hexed), 64)) + "\n")
    (d / f"{name}.expect").write_text("".join(f"{k} = {v}\n" for k, v in expect.items()))


# --- inner datagrams ---------------------------------------------------------

def inner_expect(raw):
    ip = IP(raw)
    udp = ip[UDP]
    return {
        "src": ip.src,
        "dst": ip.dst,
        "sport": str(udp.sport),
        "dport": str(udp.dport),
        "ttl": str(ip.ttl),
        "tos": str(ip.tos),
        "id": str(ip.id),
        "df": "1" if ip.flags.DF else "0",
        "payload": bytes(udp.payload).hex() or "-",
    }


def dns_query_bytes(txid=0x1234, name="example.com", rdtype="A"):
    q = dns.message.make_query(name, rdtype)
    q.id = txid
    return q.to_wire()


def gen_inner(out):
    query = dns_query_bytes()
    cases = {
        "dns_query": IP(src="10.45.0.2", dst="8.8.8.8", id=7) / UDP(sport=40000, dport=53) / Raw(query),
        "df_tos_ttl": IP(src="192.168.10.3", dst="192.168.10.2", ttl=128, tos=0x10, id=4242, flags="DF")
        / UDP(sport=2152, dport=2152) / Raw(b"\x30\xff\x00\x00\x00\x00\x00\x01"),
        "empty_payload": IP(src="10.45.0.9", dst="203.0.113.7", id=0) / UDP(sport=7, dport=7),
        "odd_length": IP(src="10.0.0.1", dst="10.0.0.2", id=99) / UDP(sport=1234, dport=53) / Raw(b"abc"),
    }
    for name, pkt in cases.items():
        raw = bytes(pkt)
        write(out, "inner", name, raw, inner_expect(raw))

    # checksum 0 means "not computed"; we always compute one, so bytes differ
    pkt = IP(src="10.45.0.2", dst="1.1.1.1", id=3) / UDP(sport=5353, dport=53, chksum=0) / Raw(query)
    raw = bytes(pkt)
    write(out, "inner", "udp_zero_checksum", raw, {**inner_expect(raw), "reencode": "no"})

    # IPv4 options (IHL 6): accepted, re-encoded without them
    pkt = IP(src="10.45.0.4", dst="8.8.4.4", id=11, options=[b"\x01\x01\x01\x00"]) / UDP(sport=999, dport=53) \
        / Raw(b"opt")
    raw = bytes(pkt)
    write(out, "inner", "ip_options", raw, {**inner_expect(raw), "reencode": "no"})

    good = bytearray(bytes(cases["dns_query"]))
    bad_ip = bytearray(good)
    bad_ip[10] ^= 0xFF
    write(out, "inner", "err_ip_checksum", bytes(bad_ip), {"error": "BadChecksum"})
    bad_udp = bytearray(good)
    bad_udp[26] ^= 0x01
    write(out, "inner", "err_udp_checksum", bytes(bad_udp), {"error": "BadChecksum"})
    write(out, "inner", "err_tcp", bytes(IP(src="10.45.0.2", dst="8.8.8.8") / TCP(sport=1, dport=53)),
          {"error": "NotUdp"})
    write(out, "inner", "err_fragment",
          bytes(IP(src="10.45.0.2", dst="8.8.8.8", flags="MF", id=5) / UDP(sport=1, dport=53) / Raw(b"xx")),
          {"error": "Fragmented"})
    write(out, "inner", "err_ipv6", bytes(IPv6(src="::1", dst="::2") / UDP(sport=1, dport=53)),
          {"error": "NotIpv4"})
    write(out, "inner", "err_truncated", bytes(good[:14]), {"error": "Truncated"})
    write(out, "inner", "err_trailing_bytes", bytes(good) + b"\x00\x00", {"error": "LengthMismatch"})


# --- GTP-U -------------------------------------------------------------------

def gtpu_expect(raw, exts="-", payload=None):
    h = GTP_U_Header(raw)
    optional = h.E or h.S or h.PN
    hdr = 12 if optional else 8
    body = raw[8:8 + h.length]
    if payload is None:
        payload = body[hdr - 8:] if exts == "-" else None
    return {
        "version": str(h.version),
        "pt": str(h.PT),
        "e": str(h.E),
        "s": str(h.S),
        "pn": str(h.PN),
        "type": str(h.gtp_type),
        "teid": str(h.teid),
        "seq": str(h.seq) if optional else "-",
        "npdu": str(h.npdu) if optional else "-",
        "exts": exts,
        "payload": payload.hex() or "-",
    }


def gen_gtpu(out):
    inner = bytes(IP(src="10.45.0.2", dst="8.8.8.8", id=1) / UDP(sport=40000, dport=53)
                  / Raw(dns_query_bytes()))
    reply = bytes(IP(src="8.8.8.8", dst="10.45.0.2", id=2) / UDP(sport=53, dport=40000) / Raw(b"\x12\x34\x81\x80"))

    raw = bytes(GTP_U_Header(teid=0x1000) / Raw(inner))
    write(out, "gtpu", "gpdu_plain", raw, gtpu_expect(raw))
    raw = bytes(GTP_U_Header(teid=0xDEADBEEF, S=1, seq=0x1234) / Raw(inner))
    write(out, "gtpu", "gpdu_sequence", raw, gtpu_expect(raw))
    raw = bytes(GTP_U_Header(teid=42, PN=1, npdu=7) / Raw(reply))
    write(out, "gtpu", "gpdu_npdu", raw, gtpu_expect(raw))
    raw = bytes(GTP_U_Header(teid=1) / Raw(b""))
    write(out, "gtpu", "gpdu_empty", raw, gtpu_expect(raw))
    raw = bytes(GTP_U_Header(teid=0, gtp_type=1, S=1, seq=5))
    write(out, "gtpu", "echo_request", raw, gtpu_expect(raw))
    raw = bytes(GTP_U_Header(teid=0x8001, gtp_type=254))
    write(out, "gtpu", "end_marker", raw, gtpu_expect(raw))

    # PDU session container: uplink (type 1) and downlink (type 0)
    raw = bytes(GTP_U_Header(teid=0x1000, E=1, next_ex=0x85) / GTPPDUSessionContainer(type=1, QFI=9) / Raw(inner))
    write(out, "gtpu", "ext_pdu_session_ul", raw, gtpu_expect(raw, "85:1009", inner))
    raw = bytes(GTP_U_Header(teid=0x8000, E=1, next_ex=0x85) / GTPPDUSessionContainer(type=0, QFI=5) / Raw(reply))
    write(out, "gtpu", "ext_pdu_session_dl", raw, gtpu_expect(raw, "85:0005", reply))

    # two chained extensions laid out by hand: UDP-port (0x40) then PDU session
    exts = b"\x01\x08\x68\x85" + b"\x01\x00\x09\x00"
    body = struct.pack("!HBB", 0, 0, 0x40) + exts + inner
    raw = struct.pack("!BBHI", 0x34, 255, len(body), 77) + body
    write(out, "gtpu", "ext_chain", raw, gtpu_expect(raw, "40:0868,85:0009", inner))

    # an 8-byte extension (length 2) with E and S set together
    exts = b"\x02\x10\x09\xaa\xbb\xcc\xdd\x00"
    body = struct.pack("!HBB", 0x00FF, 0, 0x85) + exts + reply
    raw = struct.pack("!BBHI", 0x36, 255, len(body), 0x7FFFFFFF) + body
    write(out, "gtpu", "ext_long_with_seq", raw, gtpu_expect(raw, "85:1009aabbccdd", reply))

    plain = bytes(GTP_U_Header(teid=9) / Raw(inner))
    write(out, "gtpu", "err_short_header", plain[:6], {"error": "TruncatedFrame"})
    write(out, "gtpu", "err_declared_too_long", plain[:-3], {"error": "TruncatedFrame"})
    write(out, "gtpu", "err_trailing_bytes", plain + b"\x00", {"error": "LengthMismatch"})
    write(out, "gtpu", "err_version2", bytes([0x50]) + plain[1:], {"error": "UnsupportedVersion"})
    write(out, "gtpu", "err_gtp_prime", bytes([0x20]) + plain[1:], {"error": "UnsupportedVersion"})
    body = struct.pack("!HBB", 0, 0, 0x85) + b"\x00\x00\x09\x00" + inner
    write(out, "gtpu", "err_zero_ext_length", struct.pack("!BBHI", 0x34, 255, len(body), 9) + body,
          {"error": "MalformedExtension"})
    body = struct.pack("!HBB", 0, 0, 0x85) + b"\x03\x00\x09"
    write(out, "gtpu", "err_ext_overrun", struct.pack("!BBHI", 0x34, 255, len(body), 9) + body,
          {"error": "MalformedExtension"})


# --- DNS ---------------------------------------------------------------------

def dns_expect(raw):
    m = dns.message.from_wire(raw)
    q = m.question[0]
    answers = []
    for rrset in m.answer:
        for rd in rrset:
            if rrset.rdtype in (dns.rdatatype.A, dns.rdatatype.AAAA):
                value = rd.address
            elif rrset.rdtype == dns.rdatatype.CNAME:
                value = rd.target.to_text(omit_final_dot=True)
            else:
                value = rd.to_digestable().hex()
            answers.append(f"{rrset.name.to_text(omit_final_dot=True)}/{int(rrset.rdtype)}/{rrset.ttl}/{value}")
    return {
        "id": str(m.id),
        "qr": "1" if m.flags & dns.flags.QR else "0",
        "rcode": str(int(m.rcode())),
        "rd": "1" if m.flags & dns.flags.RD else "0",
        "ra": "1" if m.flags & dns.flags.RA else "0",
        "qname": q.name.to_text(omit_final_dot=True).lower(),
        "qtype": str(int(q.rdtype)),
        "qclass": str(int(q.rdclass)),
        "an": str(len(answers)),
        "answers": "|".join(answers) or "-",
    }


def name_wire(text):
    out = b""
    for label in text.split("."):
        out += bytes([len(label)]) + label.encode()
    return out + b"\x00"


def header(txid, flags, qd=1, an=0, ns=0, ar=0):
    return struct.pack("!HHHHHH", txid, flags, qd, an, ns, ar)


def rr_wire(name, rtype, ttl, rdata):
    return name_wire(name) + struct.pack("!HHIH", rtype, 1, ttl, len(rdata)) + rdata


def response(query_wire, rrsets, rcode=0, authority=()):
    q = dns.message.from_wire(query_wire)
    r = dns.message.make_response(q)
    r.flags |= dns.flags.RA
    r.set_rcode(rcode)
    for rrset in rrsets:
        r.answer.append(rrset)
    for rrset in authority:
        r.authority.append(rrset)
    return r.to_wire()


def gen_dns(out):
    q_a = dns_query_bytes(0x1234, "example.com", "A")
    write(out, "dns", "query_a", q_a, dns_expect(q_a))
    q_aaaa = dns_query_bytes(0xBEEF, "example.net", "AAAA")
    write(out, "dns", "query_aaaa", q_aaaa, dns_expect(q_aaaa))
    q_case = dns_query_bytes(7, "ExAmPle.CO.uk", "A")
    write(out, "dns", "query_mixed_case", q_case, dns_expect(q_case))
    q_nord = dns.message.make_query("example.org", "A")
    q_nord.id = 0
    q_nord.flags &= ~dns.flags.RD
    raw = q_nord.to_wire()
    write(out, "dns", "query_no_rd", raw, dns_expect(raw))

    # dnspython compresses owner names: these exercise the pointer decoder
    raw = response(q_a, [dns.rrset.from_text("example.com.", 300, "IN", "A", "93.184.216.34", "93.184.216.35")])
    write(out, "dns", "resp_a_compressed", raw, {**dns_expect(raw), "reencode": "no"})
    raw = response(q_aaaa, [dns.rrset.from_text("example.net.", 60, "IN", "AAAA", "2001:db8::1")])
    write(out, "dns", "resp_aaaa_compressed", raw, {**dns_expect(raw), "reencode": "no"})
    q_www = dns_query_bytes(0x4321, "www.example.com", "A")
    raw = response(q_www, [dns.rrset.from_text("www.example.com.", 120, "IN", "CNAME", "edge.example.com."),
                           dns.rrset.from_text("edge.example.com.", 30, "IN", "A", "198.51.100.7")])
    write(out, "dns", "resp_cname_chain", raw, {**dns_expect(raw), "reencode": "no"})
    q_nx = dns_query_bytes(0x0101, "nonexistent.example", "A")
    soa = dns.rrset.from_text("example.", 900, "IN", "SOA", "ns.example. admin.example. 1 7200 3600 1209600 300")
    raw = response(q_nx, [], rcode=dns.rcode.NXDOMAIN, authority=[soa])
    write(out, "dns", "resp_nxdomain_soa", raw, {**dns_expect(raw), "reencode": "no"})

    # uncompressed responses laid out by hand: these must re-encode byte for byte
    qsec = name_wire("example.com") + struct.pack("!HH", 1, 1)
    raw = header(0x1234, 0x8180, an=1) + qsec + rr_wire("example.com", 1, 3600, bytes([198, 51, 100, 1]))
    write(out, "dns", "resp_a_plain", raw, dns_expect(raw))
    raw = header(0x2222, 0x8180, an=2) + qsec + rr_wire("example.com", 5, 10, name_wire("alias.example.org")) \
        + rr_wire("alias.example.org", 1, 10, bytes([192, 0, 2, 1]))
    write(out, "dns", "resp_cname_plain", raw, dns_expect(raw))
    txt = b"\x0bhello world"
    qtxt = name_wire("example.com") + struct.pack("!HH", 16, 1)
    raw = header(0x3333, 0x8180, an=1) + qtxt + rr_wire("example.com", 16, 5, txt)
    write(out, "dns", "resp_txt_opaque", raw, dns_expect(raw))
    raw = header(0x4444, 0x8182) + qsec
    write(out, "dns", "resp_servfail_empty", raw, dns_expect(raw))

    # pointer to a pointer: the answer owner points at a name that itself ends in a pointer
    qsec2 = name_wire("a.example.com") + struct.pack("!HH", 1, 1)
    # offset 12: "a" label, offset 14: "example", 22: "com"; an answer name "b" + ptr->14
    ans1 = b"\x01b\xc0\x0e" + struct.pack("!HHIH", 1, 1, 50, 4) + bytes([10, 0, 0, 2])
    ans2_owner = 12 + len(qsec2)  # start of ans1's owner name "b.example.com"
    ans2 = b"\x01c" + struct.pack("!H", 0xC000 | ans2_owner) + struct.pack("!HHIH", 1, 1, 50, 4) \
        + bytes([10, 0, 0, 3])
    raw = header(0x5555, 0x8180, an=2) + qsec2 + ans1 + ans2
    write(out, "dns", "resp_pointer_chain", raw, {**dns_expect(raw), "reencode": "no"})

    loop = header(1, 0x8180, an=1) + qsec + b"\xc0" + bytes([12 + len(qsec)]) + struct.pack("!HHIH", 1, 1, 1, 4) \
        + b"\x01\x02\x03\x04"
    write(out, "dns", "err_pointer_loop", loop, {"error": "CompressionLoop"})
    write(out, "dns", "err_two_questions", header(2, 0x0100, qd=2) + qsec + qsec, {"error": "MultipleQuestions"})
    write(out, "dns", "err_truncated_header", header(3, 0x0100)[:9], {"error": "Truncated"})
    write(out, "dns", "err_truncated_answer",
          header(4, 0x8180, an=1) + qsec + rr_wire("example.com", 1, 1, b"\x01\x02\x03\x04")[:-2],
          {"error": "Truncated"})
    write(out, "dns", "err_bad_label_type", header(5, 0x0100) + b"\x40" + b"x" * 64 + b"\x00\x00\x01\x00\x01",
          {"error": "DecodeError"})


def main(argv):
    out = Path(argv[1]) if len(argv) > 1 else ROOT
    gen_inner(out)
    gen_gtpu(out)
    gen_dns(out)
    for kind in ("gtpu", "dns", "inner"):
        print(kind, len(list((out / kind).glob("*.hex"))))


if __name__ == "__main__":
    main(sys.argv)
