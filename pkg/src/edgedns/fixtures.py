"""Codec fixture corpus: ``<name>.hex`` frames with ``<name>.expect`` fields.

An ``.expect`` file holds ``key = value`` lines.  ``error = <ExceptionName>``
marks a frame that must be rejected with that exception (or a subclass).
``reencode = no`` skips the byte-identity check, for frames whose encoding
is legitimately not canonical (DNS compression pointers).  Every other key
is compared with :func:`describe` of the decoded value.
"""

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import errors
from .dnswire import decode_dns, encode_dns
from .errors import DecodeError
from .gtpu import decode_gtpu, decode_inner, encode_gtpu, encode_inner

KINDS = ("gtpu", "dns", "inner")
META_KEYS = ("error", "reencode", "note")


def _flag(v):
    return "1" if v else "0"


def describe_gtpu(p):
    return {
        "version": str(p.version),
        "pt": _flag(p.pt_flag),
        "e": _flag(p.e_flag),
        "s": _flag(p.s_flag),
        "pn": _flag(p.pn_flag),
        "type": str(p.message_type),
        "teid": str(p.teid),
        "seq": "-" if p.sequence is None else str(p.sequence),
        "npdu": "-" if p.npdu is None else str(p.npdu),
        "exts": ",".join(f"{x.ext_type:02x}:{x.content.hex()}" for x in p.extensions) or "-",
        "payload": p.payload.hex() or "-",
    }


def format_rdata(rr):
    if isinstance(rr.rdata, (bytes, bytearray)):
        return rr.rdata.hex() or "-"
    return str(rr.rdata)


def describe_dns(m):
    q = m.question
    answers = "|".join(f"{rr.name}/{rr.rtype}/{rr.ttl}/{format_rdata(rr)}" for rr in m.answers)
    return {
        "id": str(m.txid),
        "qr": _flag(m.is_response),
        "rcode": str(m.rcode),
        "rd": _flag(m.recursion_desired),
        "ra": _flag(m.recursion_available),
        "qname": str(q.qname).lower(),
        "qtype": str(q.qtype),
        "qclass": str(q.qclass),
        "an": str(len(m.answers)),
        "answers": answers or "-",
    }


def describe_inner(d):
    return {
        "src": str(d.src_addr),
        "dst": str(d.dst_addr),
        "sport": str(d.src_port),
        "dport": str(d.dst_port),
        "ttl": str(d.ttl_hops),
        "tos": str(d.tos),
        "id": str(d.ident),
        "df": _flag(d.dont_fragment),
        "payload": d.udp_payload.hex() or "-",
    }


CODECS = {
    "gtpu": (decode_gtpu, encode_gtpu, describe_gtpu),
    "dns": (decode_dns, encode_dns, describe_dns),
    "inner": (decode_inner, encode_inner, describe_inner),
}


def describe(kind, value):
    return CODECS[kind][2](value)


def read_expect(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: '{line}' is not key = value")
        out[key.strip()] = value.strip()
    return out


def read_hex(path):
    return bytes.fromhex("".join(Path(path).read_text().split()))


@dataclass(frozen=True)
class FixtureResult:
    kind: str
    name: str
    ok: bool
    detail: str = ""


def check_fixture(kind, hex_path):
    hex_path = Path(hex_path)
    name = hex_path.stem
    decode, encode, desc = CODECS[kind]
    try:
        raw = read_hex(hex_path)
        expect = read_expect(hex_path.with_suffix(".expect"))
    except (OSError, ValueError) as exc:
        return FixtureResult(kind, name, False, f"unreadable: {exc}")

    want_error = expect.get("error")
    try:
        value = decode(raw)
    except DecodeError as exc:
        if want_error is None:
            return FixtureResult(kind, name, False, f"unexpected {type(exc).__name__}: {exc}")
        cls = getattr(errors, want_error, None)
        if cls is None or not isinstance(exc, cls):
            return FixtureResult(kind, name, False, f"raised {type(exc).__name__}, want {want_error}")
        return FixtureResult(kind, name, True, f"rejected with {type(exc).__name__}")
    if want_error is not None:
        return FixtureResult(kind, name, False, f"decoded, want {want_error}")

    got = desc(value)
    for key, want in expect.items():
        if key in META_KEYS:
            continue
        if key not in got:
            return FixtureResult(kind, name, False, f"unknown field '{key}'")
        if got[key] != want:
            return FixtureResult(kind, name, False, f"{key}: got {got[key]!r}, want {want!r}")
    again = encode(value)
    if expect.get("reencode", "yes") == "yes":
        if again != raw:
            return FixtureResult(kind, name, False, "re-encoding differs from fixture bytes")
    elif desc(decode(again)) != got:
        return FixtureResult(kind, name, False, "canonical re-encoding decodes differently")
    return FixtureResult(kind, name, True)


def default_dir():
    return Path(str(resources.files("edgedns") / "fixtures"))


def verify_corpus(root=None):
    """Check every fixture under ``root/{gtpu,dns,inner}``."""
    root = Path(root) if root is not None else default_dir()
    results = []
    for kind in KINDS:
        for hex_path in sorted((root / kind).glob("*.hex")):
            results.append(check_fixture(kind, hex_path))
    return results
