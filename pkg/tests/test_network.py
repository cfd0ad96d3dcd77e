"""End-to-end runs through the simulated UE / gNB / UPF / edge topology."""

from dataclasses import replace

from hypothesis import given, settings
from hypothesis import strategies as st

from edgedns.bench import run_scenario, run_series, simulate
from edgedns.netsim.core import MS, SECOND
from edgedns.netsim.network import EdgeSpec, NetworkParams
from edgedns.scenario import default_zone

from conftest import make_scenario, with_workload
from oracles import edge_cold_ns, edge_warm_ns, remote_ns


def test_edge_cold_then_warm_closed_form():
    s = make_scenario(count=25)
    out = simulate(s)
    lat = [x.latency for x in out.samples]
    assert lat[:10] == [edge_cold_ns(s.network, s.edge)] * 10
    assert lat[10:] == [edge_warm_ns(s.network, s.edge)] * 15
    assert edge_warm_ns(s.network, s.edge) == 6_700_000


def test_remote_closed_form():
    s = make_scenario("google", resolver="google", count=12)
    lat = {x.latency for x in simulate(s).samples}
    assert lat == {remote_ns(s.network, s.server("google"))} == {18_600_000}


def test_switch_native_controller_hop():
    s = make_scenario(count=20, network=replace(NetworkParams(), controller=0))
    assert simulate(s).samples[-1].latency == 2 * (2 * MS + 50_000 + 50_000) + MS // 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 5000), st.integers(0, 5000), st.integers(0, 3000), st.integers(0, 2000),
       st.integers(0, 3000), st.integers(0, 50_000))
def test_closed_form_holds_for_any_latencies(radio, fronthaul, edge_link, controller, processing, rtt):
    # microsecond values keep the run short while exercising every term
    n = replace(NetworkParams(), radio=radio * 1000, fronthaul=fronthaul * 1000,
                edge_link=edge_link * 1000, controller=controller * 1000)
    e = replace(EdgeSpec(), processing=processing * 1000, upstream_rtt=rtt * 1000)
    s = make_scenario(domains=("a.example", "b.example"), count=4, network=n, edge=e)
    lat = [x.latency for x in simulate(s).samples]
    assert lat == [edge_cold_ns(n, e)] * 2 + [edge_warm_ns(n, e)] * 2


def test_transparency_and_conservation():
    s = make_scenario(count=40, workload=replace(make_scenario().workload, query_count=40, ue_count=2))
    out = simulate(s)
    for x in out.samples:
        assert not x.timed_out
        q = x.query_tuple
        assert x.response_tuple == (q[2], q[3], q[0], q[1])
        assert str(x.answers[-1].name) == x.qname
    c = out.network.controller.counters
    assert c["queries_extracted"] == c["responses_injected"] + c["timeouts"] == 40
    assert all(ue.counters["mismatched_responses"] == 0 for ue in out.network.ues)


def test_two_ues_with_colliding_txids_get_their_own_answers():
    s = make_scenario(count=20)
    s = with_workload(s, query_count=20, ue_count=2, gap=0)
    out = simulate(s)
    ue0, ue1 = out.network.ues
    assert [x.txid for x in ue0.samples] == [x.txid for x in ue1.samples]
    zone = {str(rr.name): rr.rdata for rr in s.zone}
    for x in out.samples:
        assert x.answers and x.answers[0].rdata == zone[x.qname]
    assert {x.qname for x in ue0.samples}.isdisjoint({x.qname for x in ue1.samples})


def test_upstream_failures_end_as_timeouts():
    s = make_scenario(count=6, edge=replace(EdgeSpec(), upstream_failure_rate=1.0, pending_timeout=SECOND),
                      workload=replace(make_scenario().workload, query_count=6, timeout=2 * SECOND))
    out = simulate(s)
    c = out.network.controller.counters
    assert all(x.timed_out for x in out.samples)
    assert c["queries_extracted"] == 6 == c["responses_injected"] + c["timeouts"]
    assert run_scenario(s).timeouts == 6


def test_negative_answers_cached():
    domains = ("example.com", "missing.example")
    s = make_scenario(domains=domains, count=6, zone=default_zone(domains[:1]))
    out = simulate(s)
    st_ = run_scenario(s)
    assert [x.rcode for x in out.samples] == [0, 3] * 3
    assert (st_.cache_misses, st_.cache_hits, st_.negative_hits) == (2, 2, 2)


def _non_dns(out):
    return ([ue.echo_frames for ue in out.network.ues], out.network.echo.received)


def test_interception_is_a_no_op_for_other_traffic():
    base = with_workload(make_scenario(count=30), background=25, ue_count=2)
    intercepted = simulate(base)
    removed = simulate(replace(base, flows=base.flow_table().without_controller_rules().rules,
                               controller_enabled=False))
    assert intercepted.network.controller.counters["queries_extracted"] == 30
    assert removed.network.controller.counters["queries_extracted"] == 0
    frames, received = _non_dns(intercepted)
    assert sum(map(len, frames)) == 2 * 26
    assert (frames, received) == _non_dns(removed)


def test_remote_dns_unchanged_with_or_without_controller():
    s = with_workload(make_scenario("google", resolver="google", count=30), background=10)
    on = simulate(s)
    off = simulate(replace(s, controller_enabled=False))
    assert [x.latency for x in on.samples] == [x.latency for x in off.samples]
    assert _non_dns(on) == _non_dns(off)
    assert on.network.switch.counters["packet_in"] == 0


def test_mean_is_gap_invariant():
    means = {run_scenario(with_workload(make_scenario(count=50), gap=g)).mean_ms
             for g in (0, MS, 7 * MS, 123_457)}
    assert len(means) == 1


def test_fresh_series_mean_non_increasing():
    stats, _ = run_series(make_scenario(), (10, 30, 100, 300))
    means = [x.mean_ms for x in stats]
    assert means == sorted(means, reverse=True)
    assert [x.cache_misses for x in stats] == [10] * 4


def test_shared_series_carries_the_cache():
    stats, traces = run_series(replace(make_scenario(domains=("a.x", "b.x", "c.x")), shared_cache=True),
                               (2, 5, 10))
    assert [x.cache_misses for x in stats] == [2, 1, 0]
    assert [len(x.latencies) for x in stats] == [2, 5, 10] and len(traces) == 1


def test_ttl_expiry_mid_run_causes_new_misses():
    domains = ("a.x",)
    s = make_scenario(domains=domains, count=5, zone=default_zone(domains, ttl=1))
    s = with_workload(s, gap=600 * MS)
    # each query arrives 600 ms + rtt after the last; entry lives 1 s
    assert run_scenario(s).cache_misses == 3
