"""Scenario description shared by the config loader, bench runner and calibrator."""

from dataclasses import dataclass, field
from ipaddress import IPv4Address

from .dnswire import A, ResourceRecord
from .errors import ConfigError
from .flows import FORWARD_NORMAL, SEND_TO_CONTROLLER, FlowRule, FlowTable, MatchCriteria
from .gtpu import GTPU_PORT
from .netsim.core import MS, SECOND
from .netsim.network import EdgeSpec, NetworkParams, ServerSpec

EDGE = "edge"

# a spread of TLDs; only the count matters to the latency model
DEFAULT_DOMAINS = (
    "example.com",
    "example.net",
    "example.org",
    "example.us",
    "example.co.uk",
    "example.de",
    "example.io",
    "example.edu",
    "example.info",
    "example.ca",
)

DEFAULT_SERVERS = (
    ServerSpec("google", IPv4Address("8.8.8.8")),
    ServerSpec("opendns", IPv4Address("208.67.222.222")),
    ServerSpec("verisign", IPv4Address("64.6.64.6")),
)


def domain_list(count):
    """``count`` distinct names: the defaults first, then generated ones."""
    names = list(DEFAULT_DOMAINS[:count])
    i = 0
    while len(names) < count:
        names.append(f"host{i}.example.com")
        i += 1
    return tuple(names)


def default_zone(domains, ttl=3600):
    records = []
    for i, name in enumerate(domains):
        addr = IPv4Address("198.51.100.0") + (i % 254) + 1
        records.append(ResourceRecord(name, A, ttl, addr))
    return tuple(records)


def default_flows(edge_addr):
    """The three interception flows installed on the gNB switch."""
    return (
        FlowRule(200, MatchCriteria(ip_protocol=17, dst_port=GTPU_PORT), SEND_TO_CONTROLLER, "gtpu"),
        FlowRule(200, MatchCriteria(ip_protocol=17, src_addr=edge_addr, src_port=53), SEND_TO_CONTROLLER,
                 "edge_dns"),
        FlowRule(0, MatchCriteria(), FORWARD_NORMAL, "normal"),
    )


@dataclass(frozen=True)
class Workload:
    query_count: int = 10
    domains: tuple = DEFAULT_DOMAINS
    gap: int = MS
    ue_count: int = 1
    txid_base: int = 0x1000
    timeout: int = 5 * SECOND
    warmup: bool = True
    background: int = 0


@dataclass(frozen=True)
class Scenario:
    """Everything one simulation run needs.

    ``resolver`` is ``"edge"`` (interception flows installed) or the name of
    a remote server; ``ue_dns`` names the server the UE addresses its
    queries to.  Remote scenarios run with the controller-bound flows removed.
    """

    name: str
    resolver: str = "google"
    ue_dns: str = "google"
    network: NetworkParams = field(default_factory=NetworkParams)
    flows: tuple = ()
    edge: EdgeSpec = field(default_factory=EdgeSpec)
    servers: tuple = DEFAULT_SERVERS
    zone: tuple = ()
    workload: Workload = field(default_factory=Workload)
    seed: int = 1
    shared_cache: bool = False
    controller_enabled: bool = True
    horizon: int | None = None

    def __post_init__(self):
        problems = []
        w = self.workload
        if w.query_count < 1:
            problems.append((None, "query_count", "must be >= 1"))
        if w.ue_count < 1:
            problems.append((None, "ue_count", "must be >= 1"))
        if not w.domains:
            problems.append((None, "domains", "need at least one domain"))
        if w.gap < 0 or w.timeout <= 0:
            problems.append((None, "gap/timeout", "gap must be >= 0 and timeout > 0"))
        n = self.network
        for name in ("radio", "fronthaul", "n3", "edge_link", "controller", "echo"):
            if getattr(n, name) < 0:
                problems.append((None, name, "latency must be >= 0"))
        for s in self.servers:
            if s.latency < 0 or s.processing < 0 or s.jitter < 0:
                problems.append((None, f"server.{s.name}", "latencies must be >= 0"))
        names = {s.name for s in self.servers}
        if self.resolver != EDGE and self.resolver not in names:
            problems.append((None, "resolver", f"unknown server '{self.resolver}'"))
        if self.ue_dns not in names:
            problems.append((None, "ue_dns", f"unknown server '{self.ue_dns}'"))
        if problems:
            raise ConfigError(problems, path=f"scenario {self.name}")
        if not self.flows:
            object.__setattr__(self, "flows", default_flows(self.network.edge_addr))

    @property
    def intercepting(self):
        return self.resolver == EDGE

    def server(self, name):
        return next(s for s in self.servers if s.name == name)

    def flow_table(self):
        table = FlowTable(self.flows)
        return table if self.intercepting else table.without_controller_rules()
