"""Caching edge resolver with a simulated upstream.

Times are integer nanoseconds on the simulation clock.  Nothing here reads a
wall clock, so resolution is a pure function of (state, question, now, rng).
"""

import math
from collections import Counter, OrderedDict
from dataclasses import dataclass, field

from .dnswire import CNAME, IN, Name
from .errors import UpstreamTimeout
from .netsim.core import MS, SECOND

MAX_CNAME_CHAIN = 8


class Zone:
    """Static name -> records map standing in for the whole DNS hierarchy."""

    def __init__(self, records=()):
        self._records = {}
        for rr in records:
            self.add(rr)

    def add(self, rr):
        self._records.setdefault(rr.name.key(), []).append(rr)

    def __contains__(self, name):
        key = name.key() if isinstance(name, Name) else Name.from_text(name).key()
        return key in self._records

    def __iter__(self):
        for rrs in self._records.values():
            yield from rrs

    def __len__(self):
        return sum(len(v) for v in self._records.values())

    def answer(self, question):
        """Return ``(answers, nonexistent)`` for ``question``.

        CNAMEs are chased inside the zone.  A name with no records of the
        asked type yields an empty, existing answer (NODATA).
        """
        if question.qclass != IN:
            return [], False
        key = question.qname.key()
        if key not in self._records:
            return [], True
        answers = []
        for _ in range(MAX_CNAME_CHAIN):
            rrs = self._records.get(key, [])
            direct = [rr for rr in rrs if rr.rtype == question.qtype]
            if direct:
                answers.extend(direct)
                break
            alias = next((rr for rr in rrs if rr.rtype == CNAME), None)
            if alias is None:
                break
            answers.append(alias)
            key = alias.rdata.key()
        return answers, False


@dataclass
class UpstreamModel:
    """Remote path: fixed RTT with optional uniform jitter and loss."""

    rtt: int
    zone: Zone = field(default_factory=Zone)
    jitter: int = 0
    failure_rate: float = 0.0

    def __post_init__(self):
        if self.rtt < 0 or self.jitter < 0:
            raise ValueError("rtt and jitter must be >= 0")
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ValueError("failure_rate must lie in [0, 1]")

    def sample(self, rng):
        """Draw one round trip; raises UpstreamTimeout on a sampled loss."""
        if self.failure_rate and rng.random() < self.failure_rate:
            raise UpstreamTimeout("upstream did not answer")
        if self.jitter:
            return max(0, self.rtt + rng.randint(-self.jitter, self.jitter))
        return self.rtt


@dataclass
class CacheEntry:
    key: tuple
    answers: tuple
    inserted_at: int
    expires_at: int
    nonexistent: bool = False

    def remaining_ttl(self, now):
        return math.ceil((self.expires_at - now) / SECOND)


class DnsCache:
    """TTL-bounded LRU cache keyed by ``(lowercased qname, qtype)``.

    An entry is visible for ``inserted_at <= t < expires_at``.
    """

    def __init__(self, capacity=10_000, negative_ttl=30 * SECOND):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.negative_ttl = negative_ttl
        self._entries = OrderedDict()
        self.evictions = 0

    def insert(self, key, answers, now, nonexistent=False):
        answers = tuple(answers)
        if answers:
            expires = now + min(rr.ttl for rr in answers) * SECOND
        else:
            expires = now + self.negative_ttl
        entry = CacheEntry(key, answers, now, expires, nonexistent)
        self._entries[key] = entry
        self._entries.move_to_end(key)
        while len(self._entries) > self.capacity:
            self._entries.popitem(last=False)
            self.evictions += 1
        return entry

    def lookup(self, key, now):
        entry = self._entries.get(key)
        if entry is None:
            return None
        if now >= entry.expires_at:
            del self._entries[key]
            return None
        if now < entry.inserted_at:
            return None
        self._entries.move_to_end(key)
        return entry

    def __contains__(self, key):
        return key in self._entries

    def __len__(self):
        return len(self._entries)


@dataclass
class Resolution:
    answers: tuple
    nonexistent: bool
    source: str  # "cache" | "negative" | "upstream"
    completes_at: int


class EdgeResolver:
    def __init__(self, upstream, processing=MS // 2, capacity=10_000,
                 negative_ttl=30 * SECOND, rng=None):
        self.upstream = upstream
        self.processing = processing
        self.cache = DnsCache(capacity, negative_ttl)
        self.rng = rng
        self.counters = Counter()
        self.log = []  # (now, "cache" | "negative" | "upstream") per resolve

    def resolve(self, question, now):
        key = question.key()
        entry = self.cache.lookup(key, now)
        if entry is not None:
            source = "cache" if entry.answers else "negative"
            self.counters["hits" if entry.answers else "negative_hits"] += 1
            self.log.append((now, source))
            ttl = entry.remaining_ttl(now)
            answers = tuple(rr.with_ttl(ttl) for rr in entry.answers)
            return Resolution(answers, entry.nonexistent, source, now + self.processing)

        self.counters["misses"] += 1
        self.log.append((now, "upstream"))
        try:
            rtt = self.upstream.sample(self.rng)
        except UpstreamTimeout:
            self.counters["upstream_timeouts"] += 1
            raise
        answers, nonexistent = self.upstream.zone.answer(question)
        completes_at = now + self.processing + rtt
        # visible to later lookups from the moment the answer comes back
        self.cache.insert(key, answers, completes_at, nonexistent)
        return Resolution(tuple(answers), nonexistent, "upstream", completes_at)
