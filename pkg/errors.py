"""Exception hierarchy shared by the library, the CLI and the services.

Every error carries a short machine ``kind`` (sent verbatim as ``ERR <kind>``
on the line protocol and as ``error_class`` in JSON) and the CLI exit code.
"""
from __future__ import annotations


class ScoreError(Exception):
    kind = "error"
    exit_code = 2

    def __init__(self, message="", **extra):
        super().__init__(message)
        self.message = message
        self.extra = extra

    def as_dict(self):
        return {"error": self.message, "error_class": self.kind, **self.extra}


class UsageError(ScoreError):
    kind = "usage"
    exit_code = 1


class ConfigError(ScoreError):
    kind = "config"

    def __init__(self, message="", problems=None):
        super().__init__(message)
        self.problems = list(problems or [])


class DataFormatError(ScoreError):
    """A record file line that does not follow its grammar."""

    kind = "parse"

    def __init__(self, message, *, path="", line_no=0):
        where = f"{path or '<input>'}:{line_no}" if line_no else (path or "<input>")
        super().__init__(f"{where}: {message}", path=path, line_no=line_no)
        self.path = path
        self.line_no = line_no


class ValidationError(ScoreError):
    kind = "validation"

    def __init__(self, message, *, subject=None):
        super().__init__(message)
        self.subject = subject


class InvalidInputError(ScoreError, ValueError):
    kind = "invalid_input"


class UnknownNodeError(ScoreError):
    kind = "unknown_node"

    def __init__(self, node_id):
        super().__init__(f"unknown node {node_id}", node_id=node_id)
        self.node_id = node_id


class NoPathError(ScoreError):
    kind = "no_path"
    exit_code = 3

    def __init__(self, src, dst):
        super().__init__(f"no path from {src} to {dst}", src=src, dst=dst)
        self.src = src
        self.dst = dst


class NotOnPlanError(ScoreError):
    kind = "not_on_plan"


PACKET_ERROR_KINDS = (
    "malformed_header",
    "bad_coordinate",
    "irr_out_of_range",
    "missing_field",
    "bad_value",
)


class PacketError(ScoreError):
    """A sensor line rejected by the packet grammar at ``offset``."""

    def __init__(self, kind, offset, detail="", callsign=None):
        if kind not in PACKET_ERROR_KINDS:
            raise ValueError(f"unknown packet error kind {kind!r}")
        text = f"{kind} at offset {offset}"
        if detail:
            text += f": {detail}"
        super().__init__(text, offset=offset)
        self.kind = kind
        self.offset = offset
        self.callsign = callsign
