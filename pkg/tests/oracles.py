"""Independent reference implementations used only by the tests."""


def naive_checksum(data):
    """RFC 1071 checksum, byte-pair loop with end-around carry at every step."""
    data = bytes(data)
    if len(data) % 2:
        data += b"\x00"
    acc = 0
    for i in range(0, len(data), 2):
        acc += (data[i] << 8) | data[i + 1]
        acc = (acc & 0xFFFF) + (acc >> 16)
    return (~acc) & 0xFFFF


def brute_force_classify(rules, headers):
    """Highest-priority matching rule by exhaustive scan; None when nothing matches."""
    best = None
    for rule in rules:
        ok = True
        for field in ("in_port", "ip_protocol", "src_addr", "dst_addr", "src_port", "dst_port"):
            want = getattr(rule.match, field)
            if want is not None and getattr(headers, field) != want:
                ok = False
                break
        if ok and (best is None or rule.priority > best.priority):
            best = rule
    return None if best is None else best.action


def edge_warm_ns(n, e):
    """Closed form for a cache hit: UE -> gNB -> switch -> controller -> edge and back."""
    return 2 * n.radio + 2 * n.fronthaul + 4 * n.controller + 2 * n.edge_link + e.processing


def edge_cold_ns(n, e):
    return edge_warm_ns(n, e) + e.upstream_rtt


def remote_ns(n, server):
    return 2 * (n.radio + n.fronthaul + n.n3 + server.latency) + server.processing
