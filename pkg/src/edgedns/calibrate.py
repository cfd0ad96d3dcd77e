"""Fit link and service latencies so simulated means land on a target table.

The simulated network is pure delay, so every mean is linear in the knobs:

* a remote query costs ``2 (radio + fronthaul + n3 + server latency) + processing``;
* a warm edge query costs ``W = 2 (radio + fronthaul + edge_link) + 4 controller + processing``;
* a cold edge query costs ``W + R`` where ``R`` is the upstream round trip.

With ``D`` domains cycled round-robin, a run of ``N`` queries has ``m(N)``
misses and mean ``W + R m(N) / N``.  The calibrator tries both cache models
(a fresh cache per count, or one cache shared by the ascending series),
every ``D`` up to the largest count, solves ``W`` and ``R`` exactly from the
first and last columns, and keeps the fit with the smallest worst-case error.
"""

import csv
import io
import math
from dataclasses import dataclass, replace
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from ipaddress import IPv4Address

from .config import BenchConfig
from .errors import ConfigError, Infeasible
from .netsim.core import MS, SECOND
from .netsim.network import ServerSpec
from .scenario import EDGE, Scenario, default_zone, domain_list

FRESH = "fresh"
SHARED = "shared"


@dataclass(frozen=True)
class TargetRow:
    scenario: str
    resolver: str
    means: dict  # query count -> Fraction ms


@dataclass(frozen=True)
class EdgeFit:
    model: str
    domains: int
    warm: Fraction  # ms
    penalty: Fraction  # ms per miss
    max_error: Fraction  # relative


@dataclass
class Calibration:
    config: BenchConfig
    predicted: dict  # (scenario, count) -> Fraction ms
    targets: list
    edge_fit: EdgeFit | None = None

    def errors(self):
        """(scenario, count, target, predicted, relative error) rows."""
        rows = []
        for t in self.targets:
            for count, want in sorted(t.means.items()):
                got = self.predicted[(t.scenario, count)]
                rows.append((t.scenario, count, want, got, abs(got - want) / want))
        return rows

    def report(self):
        lines = []
        if self.edge_fit is not None:
            f = self.edge_fit
            lines.append(f"edge fit: {f.model} cache, {f.domains} domains, warm {float(f.warm):.4f} ms, "
                         f"miss penalty {float(f.penalty):.4f} ms")
        for scenario, count, want, got, err in self.errors():
            lines.append(f"{scenario} n={count}: target {float(want):.2f} predicted {float(got):.4f} "
                         f"error {float(err) * 100:.2f}%")
        return lines


def read_targets(text):
    """Parse ``scenario,resolver,<count>,...`` CSV; empty cells are skipped."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ConfigError([(None, "targets", "empty table")])
    header = [c.strip() for c in rows[0]]
    if len(header) < 3 or header[0] != "scenario" or header[1] != "resolver":
        raise ConfigError([(1, "targets", "header must be scenario,resolver,<count>,...")])
    try:
        counts = [int(c) for c in header[2:]]
    except ValueError:
        raise ConfigError([(1, "targets", "count columns must be integers")]) from None
    out = []
    problems = []
    for lineno, r in enumerate(rows[1:], 2):
        if len(r) > len(header):
            problems.append((lineno, "targets", "more cells than header columns"))
            continue
        means = {}
        for count, cell in zip(counts, r[2:]):
            cell = cell.strip()
            if not cell:
                continue
            try:
                value = Fraction(Decimal(cell))
            except (InvalidOperation, ValueError):
                problems.append((lineno, f"{r[0]} n={count}", f"'{cell}' is not a number"))
                continue
            if value <= 0:
                problems.append((lineno, f"{r[0]} n={count}", "mean must be positive"))
                continue
            means[count] = value
        if not means:
            problems.append((lineno, r[0], "no target values"))
            continue
        out.append(TargetRow(r[0].strip(), r[1].strip(), means))
    if problems:
        raise ConfigError(problems)
    return out


def misses(domains, counts, model):
    """Cold lookups per count under round-robin over ``domains`` names."""
    out = []
    seen = 0
    for c in counts:
        if model == FRESH:
            out.append(min(domains, c))
        else:
            now = max(seen, min(domains, c))
            out.append(now - seen)
            seen = now
    return out


def fit_edge(means, min_warm=0):
    """Best (model, D, W, R) for a ``{count: mean_ms}`` row with ``W >= min_warm``.

    When every count is at least ``D`` under a fresh cache only ``D * R`` is
    identifiable; the smallest such ``D`` wins the tie.
    """
    counts = sorted(means)
    m = [means[c] for c in counts]
    if len(counts) == 1:
        return EdgeFit(FRESH, 1, m[0], Fraction(0), Fraction(0))
    best = None
    for model in (FRESH, SHARED):
        for d in range(1, counts[-1] + 1):
            a = [Fraction(k, c) for k, c in zip(misses(d, counts, model), counts)]
            if a[0] == a[-1]:
                continue
            penalty = (m[0] - m[-1]) / (a[0] - a[-1])
            if penalty < 0:
                continue
            warm = m[-1] - a[-1] * penalty
            if warm < min_warm:
                continue
            err = max(abs(warm + ai * penalty - mi) / mi for ai, mi in zip(a, m))
            if best is None or err < best.max_error:
                best = EdgeFit(model, d, warm, penalty, err)
    if best is None:
        raise Infeasible("no cache model fits the edge targets with a non-negative miss penalty "
                         "and a warm mean above the fixed path")
    return best


def _ns(ms):
    return round(Fraction(ms) * MS)


def _server_for(row, servers):
    for s in servers:
        if row.resolver in (s.name, str(s.address)):
            return s
    try:
        addr = IPv4Address(row.resolver)
    except ValueError:
        raise Infeasible(f"row '{row.scenario}': resolver '{row.resolver}' is neither a server nor an "
                         "IPv4 address") from None
    return ServerSpec(row.scenario, addr)


def calibrate(targets, base=None):
    """Suggest a :class:`BenchConfig` whose simulated means match ``targets``."""
    if not targets:
        raise Infeasible("no target rows")
    base = base or BenchConfig()
    n = base.network
    counts = tuple(sorted({c for t in targets for c in t.means}))
    edge_rows = [t for t in targets if t.resolver == EDGE]
    remote_rows = [t for t in targets if t.resolver != EDGE]
    if len(edge_rows) > 1:
        raise Infeasible("only one edge row can be calibrated (the edge path is shared)")

    servers = list(base.servers)
    remote_fixed = 2 * (n.radio + n.fronthaul + n.n3)
    tuned = {}
    predicted = {}
    row_server = {}
    for row in remote_rows:
        spec = _server_for(row, servers)
        # remote means do not depend on N; fit the largest count
        target = _ns(row.means[max(row.means)])
        rest = target - remote_fixed
        if rest < 0:
            raise Infeasible(f"{row.scenario}: {float(row.means[max(row.means)])} ms is below the fixed "
                             f"radio+N3 path of {remote_fixed / MS} ms")
        latency = max(0, (rest - spec.processing) // 2)
        spec = replace(spec, latency=latency, processing=rest - 2 * latency, jitter=0, failure_rate=0.0)
        if spec.name in tuned and tuned[spec.name] != spec:
            raise Infeasible(f"server '{spec.name}' has two different targets")
        tuned[spec.name] = spec
        row_server[row.scenario] = spec.name
        for c in row.means:
            predicted[(row.scenario, c)] = Fraction(target, MS)
    names = [s.name for s in servers]
    servers = [tuned.get(s.name, s) for s in servers]
    servers += [s for name, s in tuned.items() if name not in names]

    edge = base.edge
    network = n
    fit = None
    domains = base.workload.domains
    shared = False
    if edge_rows:
        row = edge_rows[0]
        fit = fit_edge(row.means, Fraction(2 * (n.radio + n.fronthaul + n.edge_link), MS))
        warm = _ns(fit.warm)
        penalty = _ns(fit.penalty)
        rest = warm - 2 * (n.radio + n.fronthaul + n.edge_link)
        if rest < 0:
            raise Infeasible(f"warm edge mean {float(fit.warm):.4f} ms is below the fixed radio path")
        controller = max(0, (rest - edge.processing) // 4)
        network = replace(n, controller=controller)
        edge = replace(edge, processing=rest - 4 * controller, upstream_rtt=penalty, upstream_jitter=0,
                       upstream_failure_rate=0.0)
        domains = domain_list(fit.domains)
        shared = fit.model == SHARED
        row_counts = sorted(row.means)
        for c, k in zip(row_counts, misses(fit.domains, row_counts, fit.model)):
            predicted[(row.scenario, c)] = Fraction(warm * c + penalty * k, MS * c)

    # the whole series must fit inside one TTL or warm entries expire mid-run
    longest = max(max(t.means.values()) for t in targets)
    span = sum(counts) * (Fraction(longest) * MS + base.workload.gap)
    ttl = max(3600, math.ceil(2 * span / SECOND))
    workload = replace(base.workload, domains=domains)
    zone = default_zone(domains, ttl)

    ue_dns = next(iter(row_server.values()), servers[0].name)
    scenarios = []
    for t in targets:
        if t.resolver == EDGE:
            scenarios.append(Scenario(t.scenario, resolver=EDGE, ue_dns=ue_dns, network=network,
                                      flows=base.flows, edge=edge, servers=tuple(servers), zone=zone,
                                      workload=workload, seed=base.seed, shared_cache=shared))
        else:
            name = row_server[t.scenario]
            scenarios.append(Scenario(t.scenario, resolver=name, ue_dns=name, network=network,
                                      flows=base.flows, edge=edge, servers=tuple(servers), zone=zone,
                                      workload=workload, seed=base.seed))
    scenarios.sort(key=lambda s: s.name)
    cfg = replace(base, network=network, edge=edge, servers=tuple(servers), zone=zone, workload=workload,
                  scenarios=tuple(scenarios), counts=counts,
                  flows=base.flows or scenarios[0].flows)
    return Calibration(cfg, predicted, list(targets), fit)
