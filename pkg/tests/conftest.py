from dataclasses import replace
from pathlib import Path

import pytest

from edgedns.netsim.core import MS
from edgedns.netsim.network import EdgeSpec, NetworkParams
from edgedns.scenario import DEFAULT_DOMAINS, Scenario, Workload, default_zone

REPO = Path(__file__).resolve().parent.parent


def make_scenario(name="edge", resolver="edge", domains=DEFAULT_DOMAINS, count=10, **kw):
    """A scenario with round-number latencies; keyword args override fields."""
    workload = kw.pop("workload", Workload(query_count=count, domains=tuple(domains)))
    return Scenario(
        name,
        resolver=resolver,
        ue_dns=kw.pop("ue_dns", "google"),
        network=kw.pop("network", NetworkParams()),
        edge=kw.pop("edge", EdgeSpec()),
        zone=kw.pop("zone", default_zone(domains)),
        workload=workload,
        **kw,
    )


def with_workload(s, **kw):
    return replace(s, workload=replace(s.workload, **kw))


@pytest.fixture
def repo():
    return REPO


@pytest.fixture
def ms():
    return MS


# one "PASS|FAIL criterion N: ..." line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
