"""Internet (RFC 1071) ones'-complement checksums."""

import struct

IPPROTO_UDP = 17


def ones_complement_sum(data):
    """16-bit ones'-complement sum of ``data``, zero-padded to even length."""
    if len(data) % 2:
        data = bytes(data) + b"\x00"
    total = sum(struct.unpack("!%dH" % (len(data) // 2), data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def internet_checksum(data):
    return ~ones_complement_sum(data) & 0xFFFF


def pseudo_header(src, dst, protocol, length):
    # src/dst are 4-byte packed addresses
    return src + dst + struct.pack("!BBH", 0, protocol, length)


def udp_checksum(src, dst, segment):
    """Checksum for a UDP segment whose checksum field is zeroed.

    A computed value of zero is transmitted as 0xFFFF.
    """
    csum = internet_checksum(pseudo_header(src, dst, IPPROTO_UDP, len(segment)) + segment)
    return csum or 0xFFFF
