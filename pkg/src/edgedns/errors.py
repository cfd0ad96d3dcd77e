"""Exception hierarchy shared by the codecs, flow engine, resolver and bench."""


class EdgeDnsError(Exception):
    """Base class for every error raised by this package."""


# --- wire codecs -----------------------------------------------------------

class DecodeError(EdgeDnsError, ValueError):
    """Bytes could not be interpreted as the requested structure."""


class Truncated(DecodeError):
    pass


class TruncatedFrame(Truncated):
    """GTP-U frame shorter than its mandatory header or declared length."""


class LengthMismatch(DecodeError):
    """A declared length disagrees with the bytes actually present."""


class UnsupportedVersion(DecodeError):
    pass


class MalformedExtension(DecodeError):
    pass


class BadChecksum(DecodeError):
    pass


class NotIpv4(DecodeError):
    pass


class NotUdp(DecodeError):
    """Inner protocol is not UDP; the frame is forwarded as-is."""


class Fragmented(DecodeError):
    pass


class CompressionLoop(DecodeError):
    pass


class MultipleQuestions(DecodeError):
    pass


class EncodeError(EdgeDnsError, ValueError):
    pass


class InvalidExtensionLength(EncodeError):
    pass


class PayloadTooLarge(EncodeError):
    pass


class NameTooLong(EncodeError):
    pass


# --- flow engine -----------------------------------------------------------

class DuplicatePriorityConflict(EdgeDnsError):
    pass


class NoMatch(EdgeDnsError):
    pass


class NoControllerRegistered(EdgeDnsError):
    pass


class UnknownPort(EdgeDnsError, KeyError):
    pass


# --- controller (handled internally, surfaced as counters) -----------------

class NotAQuery(EdgeDnsError):
    pass


class UndecodableDns(EdgeDnsError):
    pass


class NoPendingMatch(EdgeDnsError):
    pass


class NoDownlinkTeid(EdgeDnsError):
    pass


class RelayPortsExhausted(EdgeDnsError):
    pass


# --- resolver / bench ------------------------------------------------------

class UpstreamTimeout(EdgeDnsError):
    pass


class ConfigError(EdgeDnsError):
    """Invalid scenario configuration.

    ``problems`` holds ``(line, field, message)`` tuples; ``line`` is None when
    the offending field is missing from the file altogether.
    """

    def __init__(self, problems, path=None):
        self.problems = list(problems)
        self.path = path
        super().__init__(self._render())

    def _render(self):
        where = self.path or "<config>"
        lines = []
        for line, field, msg in self.problems:
            loc = f"{where}:{line}" if line is not None else where
            lines.append(f"{loc}: {field}: {msg}")
        return "\n".join(lines)


class Infeasible(EdgeDnsError):
    pass
