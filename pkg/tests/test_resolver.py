import random

import pytest

from edgedns.dnswire import CNAME, A, Name, Question, ResourceRecord
from edgedns.errors import UpstreamTimeout
from edgedns.netsim.core import MS, SECOND
from edgedns.resolver import DnsCache, EdgeResolver, UpstreamModel, Zone


def q(name, qtype=A):
    return Question(Name.from_text(name), qtype)


def zone():
    return Zone([
        ResourceRecord("example.com", A, 60, "198.51.100.1"),
        ResourceRecord("short.example", A, 2, "198.51.100.2"),
        ResourceRecord("www.example.com", CNAME, 300, "example.com"),
        ResourceRecord("loop.a", CNAME, 300, "loop.b"),
        ResourceRecord("loop.b", CNAME, 300, "loop.a"),
    ])


def resolver(**kw):
    return EdgeResolver(UpstreamModel(20 * MS, zone()), processing=MS // 2, rng=random.Random(0), **kw)


def test_zone_answers_and_cname_chase():
    z = zone()
    answers, nx = z.answer(q("www.example.com"))
    assert not nx and [rr.rtype for rr in answers] == [CNAME, A]
    assert z.answer(q("missing.example")) == ([], True)
    assert z.answer(q("example.com", 28)) == ([], False)  # NODATA
    answers, _ = z.answer(q("loop.a"))
    assert len(answers) == 8  # chain capped


def test_miss_then_hit():
    r = resolver()
    cold = r.resolve(q("example.com"), 0)
    assert cold.source == "upstream" and cold.completes_at == 20 * MS + MS // 2
    warm = r.resolve(q("EXAMPLE.com"), cold.completes_at)
    assert warm.source == "cache" and warm.completes_at == cold.completes_at + MS // 2
    assert (r.counters["hits"], r.counters["misses"]) == (1, 1)


def test_entry_not_visible_before_upstream_answer_returns():
    r = resolver()
    cold = r.resolve(q("example.com"), 0)
    assert r.resolve(q("example.com"), cold.completes_at - 1).source == "upstream"


def test_served_ttl_counts_down():
    r = resolver()
    first = r.resolve(q("example.com"), 0)
    later = r.resolve(q("example.com"), first.completes_at + 10 * SECOND)
    assert later.answers[0].ttl == 50


def test_ttl_expiry():
    r = resolver()
    t = r.resolve(q("short.example"), 0).completes_at
    assert r.resolve(q("short.example"), t + 2 * SECOND - 1).source == "cache"
    assert r.resolve(q("short.example"), t + 2 * SECOND).source == "upstream"


def test_negative_caching():
    r = resolver(negative_ttl=5 * SECOND)
    first = r.resolve(q("nope.example"), 0)
    assert first.nonexistent and first.answers == ()
    again = r.resolve(q("nope.example"), first.completes_at)
    assert again.source == "negative" and again.nonexistent
    assert r.resolve(q("nope.example"), first.completes_at + 5 * SECOND).source == "upstream"


def test_lru_eviction():
    c = DnsCache(capacity=2)
    rr = [ResourceRecord("a", A, 100, "1.1.1.1")]
    c.insert(("a", 1), rr, 0)
    c.insert(("b", 1), rr, 0)
    c.lookup(("a", 1), 1)  # touch a, so b is least recent
    c.insert(("c", 1), rr, 0)
    assert ("a", 1) in c and ("b", 1) not in c and c.evictions == 1


def test_capacity_validated():
    with pytest.raises(ValueError):
        DnsCache(capacity=0)


def test_upstream_failure_and_jitter():
    m = UpstreamModel(10 * MS, jitter=MS, failure_rate=1.0)
    with pytest.raises(UpstreamTimeout):
        m.sample(random.Random(1))
    m = UpstreamModel(10 * MS, jitter=MS)
    rng = random.Random(1)
    draws = [m.sample(rng) for _ in range(200)]
    assert all(9 * MS <= d <= 11 * MS for d in draws) and len(set(draws)) > 1
    with pytest.raises(ValueError):
        UpstreamModel(-1)
    with pytest.raises(ValueError):
        UpstreamModel(1, failure_rate=1.5)


def test_upstream_timeout_counted_and_not_cached():
    r = EdgeResolver(UpstreamModel(MS, zone(), failure_rate=1.0), rng=random.Random(0))
    with pytest.raises(UpstreamTimeout):
        r.resolve(q("example.com"), 0)
    assert r.counters["upstream_timeouts"] == 1 and len(r.cache) == 0
