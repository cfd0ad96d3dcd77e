"""Deterministic discrete-event kernel.

Time is an integer count of nanoseconds.  Events run in ``(fire_at, seq)``
order, so two events at the same instant execute in the order they were
scheduled.  All randomness comes from the single seeded generator owned by
the simulator and is drawn in event-execution order.
"""

import heapq
import logging
import random
import zlib
from dataclasses import dataclass, field
from typing import Any, NamedTuple

log = logging.getLogger(__name__)

MS = 1_000_000
SECOND = 1_000_000_000


class SimEvent(NamedTuple):
    fire_at: int
    seq: int
    target: str
    kind: str
    payload: Any
    port: Any = None


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    role: str


@dataclass(frozen=True)
class LinkSpec:
    a: str
    a_port: int
    b: str
    b_port: int
    latency: int  # one-way, ns


@dataclass(frozen=True)
class Topology:
    nodes: tuple
    links: tuple
    controller_latency: int = 0

    def __post_init__(self):
        if self.controller_latency < 0:
            raise ValueError("controller latency must be >= 0")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node id")
        seen = set()
        for link in self.links:
            if link.latency < 0:
                raise ValueError(f"negative latency on link {link.a}<->{link.b}")
            for end in ((link.a, link.a_port), (link.b, link.b_port)):
                if end[0] not in ids:
                    raise ValueError(f"link endpoint {end[0]} is not a node")
                if end in seen:
                    raise ValueError(f"port {end[1]} of {end[0]} wired twice")
                seen.add(end)


@dataclass
class RunResult:
    events: int
    end_time: int
    horizon_exceeded: bool
    trace: list = field(default_factory=list)


class Node:
    """Something that owns ports and reacts to events.

    Events of kind ``k`` are dispatched to ``on_<k>(payload, port)``.
    """

    role = "node"

    def __init__(self, node_id):
        self.node_id = node_id
        self.sim = None

    @property
    def now(self):
        return self.sim.now

    def send(self, port, frame, delay=0):
        self.sim.transmit(self, port, frame, delay)

    def set_timer(self, delay, tag):
        return self.sim.schedule(self.node_id, tag, delay, kind="timer")

    def start(self):
        """Called once when the run begins, at time zero."""

    def on_frame(self, frame, port):
        raise NotImplementedError

    def on_timer(self, tag, port=None):
        pass


class Simulator:
    def __init__(self, seed=0, trace=False):
        self.now = 0
        self.seq = 0
        self.rng = random.Random(seed)
        self.nodes = {}
        self._wires = {}
        self._queue = []
        self._trace = [] if trace else None

    def add(self, node):
        if node.node_id in self.nodes:
            raise ValueError(f"duplicate node {node.node_id}")
        node.sim = self
        self.nodes[node.node_id] = node
        return node

    def connect(self, a, a_port, b, b_port, latency):
        if latency < 0:
            raise ValueError("link latency must be >= 0")
        for end in ((a.node_id, a_port), (b.node_id, b_port)):
            if end in self._wires:
                raise ValueError(f"port {end[1]} of {end[0]} already wired")
        self._wires[(a.node_id, a_port)] = (b.node_id, b_port, latency)
        self._wires[(b.node_id, b_port)] = (a.node_id, a_port, latency)

    def peer(self, node_id, port):
        return self._wires.get((node_id, port))

    def schedule(self, target, payload, delay, port=None, kind="frame"):
        if delay < 0:
            raise ValueError("cannot schedule into the past")
        self.seq += 1
        heapq.heappush(self._queue, SimEvent(self.now + delay, self.seq, target, kind, payload, port))
        return self.seq

    def transmit(self, node, port, frame, delay=0):
        wire = self._wires.get((node.node_id, port))
        if wire is None:
            raise KeyError(f"{node.node_id} port {port} is not connected")
        peer, peer_port, latency = wire
        return self.schedule(peer, frame, delay + latency, port=peer_port)

    def run(self, horizon=None):
        for node in list(self.nodes.values()):
            node.start()
        queue = self._queue
        nodes = self.nodes
        trace = self._trace
        count = 0
        exceeded = False
        while queue:
            if horizon is not None and queue[0].fire_at > horizon:
                exceeded = True
                log.warning("horizon %d ns reached with %d events pending", horizon, len(queue))
                break
            ev = heapq.heappop(queue)
            self.now = ev.fire_at
            count += 1
            if trace is not None:
                trace.append(_trace_line(ev))
            getattr(nodes[ev.target], "on_" + ev.kind)(ev.payload, ev.port)
        return RunResult(count, self.now, exceeded, trace if trace is not None else [])


def _trace_line(ev):
    payload = ev.payload
    if isinstance(payload, (bytes, bytearray)):
        detail = f"port={ev.port} len={len(payload)} crc={zlib.crc32(payload):08x}"
    else:
        detail = f"port={ev.port} {payload!r}"
    return f"{ev.fire_at} {ev.target} {ev.kind} {detail}"
