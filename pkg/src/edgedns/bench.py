"""Run scenarios, collect per-query latencies and render the response-time table."""

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple

from .netsim.core import MS, Simulator
from .netsim.network import build_network
from .netsim.nodes import UeWorkload
from .resolver import Zone

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunStats:
    """Outcome of ``query_count`` queries in one scenario.

    Latencies are kept as integer nanoseconds, so every derived statistic is
    exact and can be recomputed from the samples.
    """

    scenario: str
    resolver: str
    query_count: int
    seed: int
    latencies: tuple  # ns, completed queries in issue order
    timeouts: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    negative_hits: int = 0
    counters: dict = field(default_factory=dict, compare=False)
    switch: dict = field(default_factory=dict, compare=False)

    @property
    def latencies_ms(self):
        return tuple(Fraction(ns, MS) for ns in self.latencies)

    @property
    def mean_ms(self):
        if not self.latencies:
            return None
        return Fraction(sum(self.latencies), MS * len(self.latencies))

    @property
    def median_ms(self):
        if not self.latencies:
            return None
        ordered = sorted(self.latencies)
        mid = len(ordered) // 2
        if len(ordered) % 2:
            return Fraction(ordered[mid], MS)
        return Fraction(ordered[mid - 1] + ordered[mid], 2 * MS)

    @property
    def p95_ms(self):
        """Nearest-rank 95th percentile."""
        if not self.latencies:
            return None
        ordered = sorted(self.latencies)
        return Fraction(ordered[math.ceil(0.95 * len(ordered)) - 1], MS)

    @property
    def hit_ratio(self):
        lookups = self.cache_hits + self.negative_hits + self.cache_misses
        if not lookups:
            return None
        return Fraction(self.cache_hits + self.negative_hits, lookups)


@dataclass
class Outcome:
    """Raw handles from one simulation, for tests that look past the stats."""

    scenario: object
    network: object
    result: object
    samples: list
    batches: tuple

    @property
    def trace(self):
        return self.result.trace


def split_queries(count, ue_count):
    """Queries per UE so that together they issue ``count``."""
    return [count // ue_count + (i < count % ue_count) for i in range(ue_count)]


def simulate(s, batches=None, trace=False):
    """Run one simulation issuing ``batches`` (a tuple of query counts) back to back."""
    if batches is None:
        batches = (s.workload.query_count,)
    w = s.workload
    n = s.network
    per_ue = [split_queries(b, w.ue_count) for b in batches]
    workloads = [
        UeWorkload(
            dns_addr=s.server(s.ue_dns).address,
            domains=w.domains,
            batches=tuple(p[i] for p in per_ue),
            gap=w.gap,
            timeout=w.timeout,
            ue_index=i,
            stride=w.ue_count,
            txid_base=w.txid_base,
            echo_addr=n.echo_addr,
            warmup=w.warmup,
            background=w.background,
        )
        for i in range(w.ue_count)
    ]
    sim = Simulator(s.seed, trace=trace)
    net = build_network(sim, n, s.flow_table(), s.edge, s.servers, Zone(s.zone), workloads,
                        controller_enabled=s.controller_enabled)
    result = sim.run(s.horizon)
    samples = sorted((x for ue in net.ues for x in ue.samples), key=lambda x: (x.issued_at, x.ue))
    return Outcome(s, net, result, samples, tuple(batches))


def stats_from(outcome):
    """One RunStats per batch of ``outcome``."""
    s = outcome.scenario
    net = outcome.network
    starts = []
    for b in range(len(outcome.batches)):
        times = [ue.batch_started[b] for ue in net.ues if b in ue.batch_started]
        starts.append(min(times) if times else None)
    log_entries = net.edge.resolver.log
    out = []
    for b, count in enumerate(outcome.batches):
        batch = [x for x in outcome.samples if x.batch == b]
        lo = starts[b]
        hi = next((t for t in starts[b + 1:] if t is not None), None)
        window = [src for t, src in log_entries
                  if lo is not None and t >= lo and (hi is None or t < hi)]
        out.append(RunStats(
            scenario=s.name,
            resolver=s.resolver,
            query_count=count,
            seed=s.seed,
            latencies=tuple(x.latency for x in batch if not x.timed_out),
            timeouts=sum(1 for x in batch if x.timed_out),
            cache_hits=sum(1 for src in window if src == "cache"),
            cache_misses=sum(1 for src in window if src == "upstream"),
            negative_hits=sum(1 for src in window if src == "negative"),
            counters=dict(net.controller.counters),
            switch=dict(net.switch.counters),
        ))
    return out


def run_scenario(s, trace=False):
    """Deterministic stats for ``s``; the scenario's own query count."""
    return stats_from(simulate(s, trace=trace))[0]


def run_series(s, counts, trace=False):
    """RunStats for each count, ascending.

    Each count gets a fresh network unless ``s.shared_cache`` is set; then the
    counts run as consecutive batches in one simulation, so the edge cache
    carries over from one batch to the next.  Returns ``(stats, traces)``
    where ``traces`` is a list of trace-line lists, one per simulation.
    """
    counts = tuple(sorted(counts))
    if s.shared_cache:
        outcome = simulate(s, counts, trace=trace)
        return stats_from(outcome), [outcome.trace]
    stats, traces = [], []
    for c in counts:
        outcome = simulate(replace(s, workload=replace(s.workload, query_count=c)), trace=trace)
        stats.extend(stats_from(outcome))
        traces.append(outcome.trace)
    return stats, traces


def _series_job(args):
    s, counts, trace = args
    return run_series(s, counts, trace)


def run_all(scenarios, counts, jobs=1, trace=False):
    """Run every scenario over ``counts``; results come back sorted by scenario name.

    With ``jobs > 1`` scenarios run in worker processes.  Each run owns its
    simulator and seed, so the output does not depend on ``jobs``.
    """
    ordered = sorted(scenarios, key=lambda s: s.name)
    tasks = [(s, counts, trace) for s in ordered]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_series_job, tasks))
    else:
        results = [_series_job(t) for t in tasks]
    stats, traces = [], []
    for s, (st, tr) in zip(ordered, results):
        stats.extend(st)
        for i, lines in enumerate(tr):
            traces.append((s.name, i, lines))
    return stats, traces


# --- rendering -------------------------------------------------------------

class Rendered(NamedTuple):
    text: str
    csv: str


def round_half_up(value):
    """Fraction -> string with exactly two decimals, halves rounded up."""
    cents = math.floor(Fraction(value) * 100 + Fraction(1, 2))
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}{cents // 100}.{cents % 100:02d}"


def _grid(stats):
    counts = sorted({st.query_count for st in stats})
    rows = {}
    for st in stats:
        rows.setdefault((st.scenario, st.resolver), {})[st.query_count] = st.mean_ms
    header = ["scenario", "resolver"] + [str(c) for c in counts]
    body = []
    for (scenario, resolver) in sorted(rows):
        cells = rows[(scenario, resolver)]
        body.append([scenario, resolver] + [
            round_half_up(cells[c]) if cells.get(c) is not None else "" for c in counts
        ])
    return header, body


def render_table(stats, title="Average DNS query response times (ms)"):
    """Rows are scenarios, columns query counts, cells mean latency."""
    stats = list(stats)
    if not stats:
        raise ValueError("nothing to render")
    header, body = _grid(stats)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(body)

    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = [title]
    for r in [header] + body:
        cells = [r[0].ljust(widths[0]), r[1].ljust(widths[1])]
        cells += [v.rjust(w) for v, w in zip(r[2:], widths[2:])]
        lines.append("  ".join(cells).rstrip())
    return Rendered("\n".join(lines) + "\n", buf.getvalue())


def render_details(stats):
    """One line per run with the spread statistics and counters."""
    lines = []
    for st in sorted(stats, key=lambda x: (x.scenario, x.query_count)):
        def fmt(v):
            return "-" if v is None else round_half_up(v)
        ratio = st.hit_ratio
        lines.append(
            f"{st.scenario} n={st.query_count} mean={fmt(st.mean_ms)} median={fmt(st.median_ms)} "
            f"p95={fmt(st.p95_ms)} timeouts={st.timeouts} hits={st.cache_hits} misses={st.cache_misses} "
            f"hit_ratio={'-' if ratio is None else f'{float(ratio):.4f}'}"
        )
    return "\n".join(lines) + "\n"
