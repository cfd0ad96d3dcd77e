"""Wire up the UE - gNB(+switch, controller, edge DNS) - UPF - DN topology."""

from dataclasses import dataclass, field
from ipaddress import IPv4Address, IPv4Network

from ..controller import Controller, ControllerApp
from ..flows import Switch
from ..resolver import EdgeResolver, UpstreamModel, Zone
from .core import MS, SECOND, LinkSpec, NodeSpec, Topology
from .nodes import EchoServer, EdgeDnsServer, Gnb, RemoteDnsServer, Ue, Upf

# switch port numbering
SW_GNB = 1
SW_UPF = 2
SW_EDGE = 3


@dataclass(frozen=True)
class NetworkParams:
    """One-way link latencies (ns) and addressing of the fixed elements."""

    radio: int = 2 * MS
    fronthaul: int = 50_000
    n3: int = 2 * MS
    edge_link: int = 50_000
    controller: int = MS // 2
    echo: int = 5 * MS
    ue_network: IPv4Network = IPv4Network("10.45.0.0/16")
    gnb_addr: IPv4Address = IPv4Address("192.168.10.2")
    upf_addr: IPv4Address = IPv4Address("192.168.10.3")
    controller_addr: IPv4Address = IPv4Address("192.168.10.9")
    edge_addr: IPv4Address = IPv4Address("192.168.10.53")
    echo_addr: IPv4Address = IPv4Address("203.0.113.7")
    qfi: int = 9

    def ue_addr(self, index):
        return self.ue_network.network_address + 2 + index


@dataclass(frozen=True)
class ServerSpec:
    """A public resolver reached through the UPF."""

    name: str
    address: IPv4Address
    latency: int = 5 * MS  # UPF <-> server, one way
    processing: int = MS // 2
    jitter: int = 0
    failure_rate: float = 0.0


@dataclass(frozen=True)
class EdgeSpec:
    processing: int = MS // 2
    upstream_rtt: int = 20 * MS
    upstream_jitter: int = 0
    upstream_failure_rate: float = 0.0
    capacity: int = 10_000
    negative_ttl: int = 30 * SECOND
    pending_timeout: int = 5 * SECOND


@dataclass
class Network:
    topology: Topology
    ues: list
    gnb: Gnb
    switch: Switch
    controller: Controller
    upf: Upf
    edge: EdgeDnsServer
    servers: dict = field(default_factory=dict)
    echo: EchoServer | None = None


def ul_teid(index):
    return 0x1000 + index


def dl_teid(index):
    return 0x8000 + index


def build_network(sim, params, table, edge, servers, zone, workloads, controller_enabled=True):
    """Instantiate every node inside ``sim`` and return handles to them.

    ``workloads`` has one :class:`UeWorkload` per UE.  With
    ``controller_enabled`` false no controller is attached, so any
    SendToController rule in ``table`` raises at runtime.
    """
    nodes = [NodeSpec("gnb", "gnb"), NodeSpec("switch", "switch"), NodeSpec("upf", "upf"),
             NodeSpec("edge-dns", "edge-dns"), NodeSpec("echo", "echo")]
    links = [
        LinkSpec("gnb", Gnb.N3, "switch", SW_GNB, params.fronthaul),
        LinkSpec("switch", SW_UPF, "upf", Upf.N3, params.n3),
        LinkSpec("switch", SW_EDGE, "edge-dns", 0, params.edge_link),
        LinkSpec("upf", 1, "echo", 0, params.echo),
    ]
    for i in range(len(workloads)):
        nodes.append(NodeSpec(f"ue{i}", "ue"))
        links.append(LinkSpec(f"ue{i}", Ue.RADIO, "gnb", 1 + i, params.radio))
    for j, spec in enumerate(servers):
        nodes.append(NodeSpec(f"dns-{spec.name}", "dns"))
        links.append(LinkSpec("upf", 2 + j, f"dns-{spec.name}", 0, spec.latency))
    if controller_enabled:
        nodes.append(NodeSpec("controller", "controller"))
    topology = Topology(tuple(nodes), tuple(links), params.controller)

    gnb = sim.add(Gnb("gnb", params.gnb_addr, params.upf_addr, params.qfi))
    switch = sim.add(Switch("switch", table, params.controller))
    upf = sim.add(Upf("upf", params.upf_addr, params.qfi))
    resolver = EdgeResolver(
        UpstreamModel(edge.upstream_rtt, zone, edge.upstream_jitter, edge.upstream_failure_rate),
        processing=edge.processing, capacity=edge.capacity, negative_ttl=edge.negative_ttl,
        rng=sim.rng,
    )
    edge_node = sim.add(EdgeDnsServer("edge-dns", params.edge_addr, resolver))
    echo = sim.add(EchoServer("echo", params.echo_addr))

    switch.add_port(SW_GNB, "gnb", [params.gnb_addr])
    switch.add_port(SW_UPF, "upf", [params.upf_addr])
    switch.add_port(SW_EDGE, "edge-dns", [params.edge_addr])
    upf.add_route(params.echo_addr, 1)

    controller = Controller(
        controller_addr=params.controller_addr, edge_dns_addr=params.edge_addr,
        ue_network=params.ue_network, gnb_port=SW_GNB, edge_port=SW_EDGE,
        pending_timeout=edge.pending_timeout,
    )
    if controller_enabled:
        sim.add(ControllerApp("controller", controller, switch))

    ues = []
    for i, w in enumerate(workloads):
        ue = sim.add(Ue(f"ue{i}", params.ue_addr(i), w))
        gnb.add_session(1 + i, ul_teid(i), dl_teid(i))
        upf.add_session(ue.addr, ul_teid(i), dl_teid(i), params.gnb_addr)
        ues.append(ue)

    remote = {}
    for j, spec in enumerate(servers):
        model = UpstreamModel(spec.processing, zone, spec.jitter, spec.failure_rate)
        remote[spec.name] = sim.add(RemoteDnsServer(f"dns-{spec.name}", spec.address, model))
        upf.add_route(spec.address, 2 + j)

    by_id = sim.nodes
    for link in topology.links:
        sim.connect(by_id[link.a], link.a_port, by_id[link.b], link.b_port, link.latency)

    return Network(topology, ues, gnb, switch, controller, upf, edge_node, remote, echo)
