"""INI scenario files: parsing with line-numbered diagnostics, and dumping.

Times are written in milliseconds (``*_ms``) or seconds (``*_s``) as exact
decimals and converted to integer nanoseconds.  See README for every key.
"""

import configparser
import re
from dataclasses import dataclass, field, fields, replace
from decimal import Decimal, InvalidOperation
from ipaddress import IPv4Address, IPv4Network

from .dnswire import TYPE_CODES, TYPE_NAMES, Name, ResourceRecord
from .errors import ConfigError, DuplicatePriorityConflict, EdgeDnsError
from .flows import DROP, FORWARD_NORMAL, SEND_TO_CONTROLLER, FlowRule, FlowTable, MatchCriteria, Output
from .netsim.core import MS, SECOND
from .netsim.network import EdgeSpec, NetworkParams, ServerSpec
from .scenario import DEFAULT_SERVERS, EDGE, Scenario, Workload, default_flows, default_zone

DEFAULT_COUNTS = (10, 100, 1000, 10000)

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^([^\s=#;\[][^=]*?)\s*=")

_TOPOLOGY_TIMES = ("radio", "fronthaul", "n3", "edge_link", "controller", "echo")
_TOPOLOGY_ADDRS = ("gnb_addr", "upf_addr", "controller_addr", "edge_addr", "echo_addr")
_WORKLOAD_KEYS = ("query_count", "domains", "gap_ms", "ue_count", "txid_base", "timeout_s", "warmup",
                  "background")
_TEXT_TYPES = ("A", "AAAA", "CNAME")
_MATCH_KEYS = {"in_port": "in_port", "proto": "ip_protocol", "src": "src_addr", "dst": "dst_addr",
               "udp_src": "src_port", "udp_dst": "dst_port"}


@dataclass(frozen=True)
class BenchConfig:
    network: NetworkParams = field(default_factory=NetworkParams)
    edge: EdgeSpec = field(default_factory=EdgeSpec)
    servers: tuple = DEFAULT_SERVERS
    flows: tuple = ()
    zone: tuple = ()
    workload: Workload = field(default_factory=Workload)
    scenarios: tuple = ()
    counts: tuple = DEFAULT_COUNTS
    seed: int = 1

    def scenario(self, name):
        return next(s for s in self.scenarios if s.name == name)

    def with_seed(self, seed):
        return replace(self, seed=seed, scenarios=tuple(replace(s, seed=seed) for s in self.scenarios))


# --- value converters (raise ValueError with a readable message) -------------

def parse_ms(text):
    return _decimal_ns(text, MS)


def parse_seconds(text):
    return _decimal_ns(text, SECOND)


def _decimal_ns(text, unit):
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(f"'{text}' is not a number") from None
    if not value.is_finite() or value < 0:
        raise ValueError(f"'{text}' must be a non-negative number")
    ns = value * unit
    if ns != ns.to_integral_value():
        raise ValueError(f"'{text}' is finer than 1 ns")
    return int(ns)


def _int(text, lo=0, hi=None):
    try:
        value = int(text.strip(), 0)
    except ValueError:
        raise ValueError(f"'{text}' is not an integer") from None
    if value < lo or (hi is not None and value > hi):
        raise ValueError(f"{value} outside [{lo}, {hi if hi is not None else 'inf'}]")
    return value


def _rate(text):
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"'{text}' is not a number") from None
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{value} outside [0, 1]")
    return value


def _bool(text):
    low = text.strip().lower()
    if low in configparser.ConfigParser.BOOLEAN_STATES:
        return configparser.ConfigParser.BOOLEAN_STATES[low]
    raise ValueError(f"'{text}' is not a boolean")


def _domains(text):
    names = tuple(t.strip() for t in text.replace("\n", ",").split(",") if t.strip())
    if not names:
        raise ValueError("empty domain list")
    for n in names:
        Name.from_text(n)
    return names


def _counts(text):
    values = tuple(_int(t, 1) for t in text.replace("\n", ",").split(",") if t.strip())
    if not values:
        raise ValueError("empty count list")
    return tuple(sorted(set(values)))


def parse_flow(name, text):
    """``<priority> <match tokens | *> -> <action>``."""
    if "->" not in text:
        raise ValueError("expected '<priority> <match> -> <action>'")
    lhs, action_text = (part.strip() for part in text.split("->", 1))
    tokens = lhs.split()
    if not tokens:
        raise ValueError("missing priority")
    priority = _int(tokens[0], 0, 0xFFFF)
    criteria = {}
    for tok in tokens[1:]:
        if tok == "*":
            continue
        key, sep, value = tok.partition("=")
        if not sep or key not in _MATCH_KEYS:
            raise ValueError(f"bad match token '{tok}' (use {', '.join(_MATCH_KEYS)})")
        attr = _MATCH_KEYS[key]
        if attr in ("src_addr", "dst_addr"):
            criteria[attr] = IPv4Address(value)
        else:
            criteria[attr] = _int(value, 0, 0xFFFFFFFF if attr == "in_port" else 0xFFFF)
    action_text = action_text.lower()
    if action_text == "controller":
        action = SEND_TO_CONTROLLER
    elif action_text == "normal":
        action = FORWARD_NORMAL
    elif action_text == "drop":
        action = DROP
    elif action_text.startswith("output:"):
        action = Output(_int(action_text[7:]))
    else:
        raise ValueError(f"unknown action '{action_text}'")
    return FlowRule(priority, MatchCriteria(**criteria), action, name)


def parse_records(name, text):
    """``TYPE TTL VALUE; TYPE TTL VALUE; ...`` for one owner name."""
    records = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(None, 2)
        if len(bits) != 3:
            raise ValueError(f"'{part}': expected TYPE TTL VALUE")
        tname, ttl, value = bits
        tname = tname.upper()
        if tname in _TEXT_TYPES:
            rtype = TYPE_CODES[tname]
        elif tname.startswith("TYPE"):
            rtype = _int(tname[4:], 0, 0xFFFF)
            value = bytes.fromhex(value)
        else:
            raise ValueError(f"unknown record type '{tname}' (A, AAAA, CNAME or TYPEnn with hex rdata)")
        records.append(ResourceRecord(name, rtype, _int(ttl, 0, 2**31 - 1), value))
    if not records:
        raise ValueError("no records")
    return records


# --- parser ------------------------------------------------------------------

class _Reader:
    def __init__(self, text, path):
        self.path = path
        self.problems = []
        self.lines = {}
        section = None
        for no, line in enumerate(text.splitlines(), 1):
            m = _SECTION_RE.match(line)
            if m:
                section = m.group(1).strip()
                self.lines.setdefault((section, None), no)
                continue
            m = _KEY_RE.match(line)
            if m and section is not None:
                self.lines.setdefault((section, m.group(1).strip()), no)

    def line(self, section, key=None):
        return self.lines.get((section, key), self.lines.get((section, None)))

    def fail(self, section, key, msg):
        label = f"[{section}] {key}" if key else f"[{section}]"
        self.problems.append((self.line(section, key), label, msg))

    def get(self, cp, section, key, conv, default):
        if not cp.has_section(section) or not cp.has_option(section, key):
            return default
        try:
            return conv(cp.get(section, key))
        except (ValueError, EdgeDnsError) as exc:
            self.fail(section, key, str(exc))
            return default

    def check_keys(self, cp, section, allowed):
        for key in cp.options(section):
            if key not in allowed:
                self.fail(section, key, "unknown key")


def loads(text, path=None):
    """Parse config text into a :class:`BenchConfig`; raises ConfigError."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), default_section="\x00")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError([(line, "syntax", exc.message.splitlines()[0])], path) from None

    r = _Reader(text, path)
    known = {"bench", "topology", "edge", "flows", "zones", "workload"}
    for section in cp.sections():
        if section not in known and not section.startswith(("server.", "scenario.")):
            r.fail(section, None, "unknown section")

    counts = r.get(cp, "bench", "counts", _counts, DEFAULT_COUNTS)
    seed = r.get(cp, "bench", "seed", _int, 1)
    if cp.has_section("bench"):
        r.check_keys(cp, "bench", {"counts", "seed"})

    network = _read_topology(cp, r)
    edge = _read_edge(cp, r)
    servers = _read_servers(cp, r)
    workload = _read_workload(cp, r, "workload", Workload())
    flows = _read_flows(cp, r, network)
    zone = _read_zone(cp, r)

    scenarios = []
    server_names = [s.name for s in servers]
    for section in cp.sections():
        if not section.startswith("scenario."):
            continue
        name = section[len("scenario."):]
        r.check_keys(cp, section, {"resolver", "ue_dns", "seed", "shared_cache", "controller", "horizon_s",
                                   *_WORKLOAD_KEYS})
        resolver = r.get(cp, section, "resolver", str.strip, None)
        if resolver is None:
            r.fail(section, "resolver", "missing (a server name or 'edge')")
            continue
        if resolver != EDGE and resolver not in server_names:
            r.fail(section, "resolver", f"unknown server '{resolver}'")
            continue
        default_dns = resolver if resolver != EDGE else server_names[0]
        ue_dns = r.get(cp, section, "ue_dns", str.strip, default_dns)
        if ue_dns not in server_names:
            r.fail(section, "ue_dns", f"unknown server '{ue_dns}'")
            continue
        wl = _read_workload(cp, r, section, workload)
        try:
            scenarios.append(Scenario(
                name, resolver=resolver, ue_dns=ue_dns, network=network, flows=flows, edge=edge,
                servers=servers, zone=zone or default_zone(wl.domains), workload=wl,
                seed=r.get(cp, section, "seed", _int, seed),
                shared_cache=r.get(cp, section, "shared_cache", _bool, False),
                controller_enabled=r.get(cp, section, "controller", _bool, True),
                horizon=r.get(cp, section, "horizon_s", parse_seconds, None),
            ))
        except ConfigError as exc:
            for _, fld, msg in exc.problems:
                r.fail(section, None, f"{fld}: {msg}")
    if not scenarios and not r.problems:
        r.problems.append((None, "scenario", "no [scenario.<name>] section"))
    if r.problems:
        raise ConfigError(r.problems, path)
    scenarios.sort(key=lambda s: s.name)
    return BenchConfig(network, edge, servers, flows, zone, workload, tuple(scenarios), counts, seed)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), str(path))


def _read_topology(cp, r):
    p = NetworkParams()
    if not cp.has_section("topology"):
        return p
    allowed = {f"{k}_ms" for k in _TOPOLOGY_TIMES} | set(_TOPOLOGY_ADDRS) | {"ue_network", "qfi"}
    r.check_keys(cp, "topology", allowed)
    values = {k: r.get(cp, "topology", f"{k}_ms", parse_ms, getattr(p, k)) for k in _TOPOLOGY_TIMES}
    for k in _TOPOLOGY_ADDRS:
        values[k] = r.get(cp, "topology", k, IPv4Address, getattr(p, k))
    values["ue_network"] = r.get(cp, "topology", "ue_network", IPv4Network, p.ue_network)
    values["qfi"] = r.get(cp, "topology", "qfi", lambda t: _int(t, 0, 63), p.qfi)
    return NetworkParams(**values)


def _read_edge(cp, r):
    e = EdgeSpec()
    if not cp.has_section("edge"):
        return e
    s = "edge"
    r.check_keys(cp, s, {"processing_ms", "upstream_rtt_ms", "upstream_jitter_ms", "upstream_failure_rate",
                         "capacity", "negative_ttl_s", "pending_timeout_s"})
    return EdgeSpec(
        processing=r.get(cp, s, "processing_ms", parse_ms, e.processing),
        upstream_rtt=r.get(cp, s, "upstream_rtt_ms", parse_ms, e.upstream_rtt),
        upstream_jitter=r.get(cp, s, "upstream_jitter_ms", parse_ms, e.upstream_jitter),
        upstream_failure_rate=r.get(cp, s, "upstream_failure_rate", _rate, e.upstream_failure_rate),
        capacity=r.get(cp, s, "capacity", lambda t: _int(t, 1), e.capacity),
        negative_ttl=r.get(cp, s, "negative_ttl_s", parse_seconds, e.negative_ttl),
        pending_timeout=r.get(cp, s, "pending_timeout_s", parse_seconds, e.pending_timeout),
    )


def _read_servers(cp, r):
    servers = []
    for section in cp.sections():
        if not section.startswith("server."):
            continue
        name = section[len("server."):]
        r.check_keys(cp, section, {"address", "latency_ms", "processing_ms", "jitter_ms", "failure_rate"})
        address = r.get(cp, section, "address", IPv4Address, None)
        if address is None:
            if not cp.has_option(section, "address"):
                r.fail(section, "address", "missing")
            continue
        d = ServerSpec(name, address)
        servers.append(ServerSpec(
            name, address,
            latency=r.get(cp, section, "latency_ms", parse_ms, d.latency),
            processing=r.get(cp, section, "processing_ms", parse_ms, d.processing),
            jitter=r.get(cp, section, "jitter_ms", parse_ms, d.jitter),
            failure_rate=r.get(cp, section, "failure_rate", _rate, d.failure_rate),
        ))
    if not servers:
        return DEFAULT_SERVERS
    addrs = [s.address for s in servers]
    if len(set(addrs)) != len(addrs):
        r.problems.append((None, "server", "two servers share an address"))
    return tuple(servers)


def _read_workload(cp, r, section, base):
    if not cp.has_section(section):
        return base
    if section == "workload":
        r.check_keys(cp, section, set(_WORKLOAD_KEYS))
    return Workload(
        query_count=r.get(cp, section, "query_count", lambda t: _int(t, 1), base.query_count),
        domains=r.get(cp, section, "domains", _domains, base.domains),
        gap=r.get(cp, section, "gap_ms", parse_ms, base.gap),
        ue_count=r.get(cp, section, "ue_count", lambda t: _int(t, 1, 1000), base.ue_count),
        txid_base=r.get(cp, section, "txid_base", lambda t: _int(t, 0, 0xFFFF), base.txid_base),
        timeout=r.get(cp, section, "timeout_s", parse_seconds, base.timeout),
        warmup=r.get(cp, section, "warmup", _bool, base.warmup),
        background=r.get(cp, section, "background", lambda t: _int(t, 0), base.background),
    )


def _read_flows(cp, r, network):
    if not cp.has_section("flows"):
        return default_flows(network.edge_addr)
    table = FlowTable()
    for name in cp.options("flows"):
        try:
            table.install_flow(parse_flow(name, cp.get("flows", name)))
        except DuplicatePriorityConflict as exc:
            r.fail("flows", name, str(exc))
        except ValueError as exc:
            r.fail("flows", name, str(exc))
    return table.rules


def _read_zone(cp, r):
    if not cp.has_section("zones"):
        return ()
    records = []
    for name in cp.options("zones"):
        try:
            records.extend(parse_records(name, cp.get("zones", name)))
        except (ValueError, EdgeDnsError) as exc:
            r.fail("zones", name, str(exc))
    return tuple(records)


# --- dumping -----------------------------------------------------------------

def format_ms(ns):
    return _fmt_decimal(Decimal(ns) / MS)


def format_seconds(ns):
    return _fmt_decimal(Decimal(ns) / SECOND)


def _fmt_decimal(d):
    return format(d.normalize(), "f")


def format_flow(rule):
    tokens = [str(rule.priority)]
    inverse = {v: k for k, v in _MATCH_KEYS.items()}
    for f in fields(rule.match):
        value = getattr(rule.match, f.name)
        if value is not None:
            tokens.append(f"{inverse[f.name]}={value}")
    if len(tokens) == 1:
        tokens.append("*")
    return f"{' '.join(tokens)} -> {rule.action}"


def format_record(rr):
    tname = TYPE_NAMES.get(rr.rtype)
    if tname not in _TEXT_TYPES:
        return f"TYPE{rr.rtype} {rr.ttl} {bytes(rr.rdata).hex()}"
    return f"{tname} {rr.ttl} {rr.rdata}"


def _workload_lines(w, base=None):
    out = []
    items = (
        ("query_count", w.query_count, str(w.query_count)),
        ("domains", w.domains, ", ".join(w.domains)),
        ("gap_ms", w.gap, format_ms(w.gap)),
        ("ue_count", w.ue_count, str(w.ue_count)),
        ("txid_base", w.txid_base, f"0x{w.txid_base:04x}"),
        ("timeout_s", w.timeout, format_seconds(w.timeout)),
        ("warmup", w.warmup, "yes" if w.warmup else "no"),
        ("background", w.background, str(w.background)),
    )
    attrs = ("query_count", "domains", "gap", "ue_count", "txid_base", "timeout", "warmup", "background")
    for (key, value, text), attr in zip(items, attrs):
        if base is None or getattr(base, attr) != value:
            out.append(f"{key} = {text}")
    return out


def dumps(cfg, header=()):
    """Render ``cfg`` as config text that :func:`loads` reads back unchanged."""
    out = [f"# {line}" for line in header]
    if out:
        out.append("")
    out += ["[bench]", f"counts = {', '.join(map(str, cfg.counts))}", f"seed = {cfg.seed}", ""]

    n = cfg.network
    out.append("[topology]")
    out += [f"{k}_ms = {format_ms(getattr(n, k))}" for k in _TOPOLOGY_TIMES]
    out.append(f"ue_network = {n.ue_network}")
    out += [f"{k} = {getattr(n, k)}" for k in _TOPOLOGY_ADDRS]
    out += [f"qfi = {n.qfi}", ""]

    e = cfg.edge
    out += [
        "[edge]",
        f"processing_ms = {format_ms(e.processing)}",
        f"upstream_rtt_ms = {format_ms(e.upstream_rtt)}",
        f"upstream_jitter_ms = {format_ms(e.upstream_jitter)}",
        f"upstream_failure_rate = {e.upstream_failure_rate}",
        f"capacity = {e.capacity}",
        f"negative_ttl_s = {format_seconds(e.negative_ttl)}",
        f"pending_timeout_s = {format_seconds(e.pending_timeout)}",
        "",
    ]
    for s in cfg.servers:
        out += [
            f"[server.{s.name}]",
            f"address = {s.address}",
            f"latency_ms = {format_ms(s.latency)}",
            f"processing_ms = {format_ms(s.processing)}",
            f"jitter_ms = {format_ms(s.jitter)}",
            f"failure_rate = {s.failure_rate}",
            "",
        ]
    flows = cfg.flows or default_flows(n.edge_addr)
    out.append("[flows]")
    out += [f"{rule.name or f'rule{i}'} = {format_flow(rule)}" for i, rule in enumerate(flows)]
    out.append("")
    if cfg.zone:
        out.append("[zones]")
        grouped = {}
        for rr in cfg.zone:
            grouped.setdefault(str(rr.name), []).append(format_record(rr))
        out += [f"{name} = {'; '.join(recs)}" for name, recs in grouped.items()]
        out.append("")
    out.append("[workload]")
    out += _workload_lines(cfg.workload)
    out.append("")
    for s in cfg.scenarios:
        out += [f"[scenario.{s.name}]", f"resolver = {s.resolver}", f"ue_dns = {s.ue_dns}"]
        if s.seed != cfg.seed:
            out.append(f"seed = {s.seed}")
        if s.shared_cache:
            out.append("shared_cache = yes")
        if not s.controller_enabled:
            out.append("controller = no")
        if s.horizon is not None:
            out.append(f"horizon_s = {format_seconds(s.horizon)}")
        out += _workload_lines(s.workload, cfg.workload)
        out.append("")
    return "\n".join(out)
