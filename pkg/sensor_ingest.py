"""APRS-style sensor report lines -> irradiance observations.

Line grammar (one packet per line)::

    <callsign>>SCORE:!<DDMM.mm><N|S>/<DDDMM.mm><E|W>#IRR=<decimal>,T=<decimal>

The callsign is 3-9 characters: uppercase letters and digits, optionally
followed by a ``-`` SSID of one or two characters. ``T`` is hours since the
start of the year.
"""
from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field

import telemetry
from errors import InvalidInputError, PacketError
from fusion_store import IngestOutcome, IrradianceObservation
from network_model import nearest_node
from records import fmt_float

logger = logging.getLogger("score")

HEADER = ">SCORE:!"
UNKNOWN_CALLSIGN = "?"

_CALLSIGN_RE = re.compile(r"[A-Z0-9]+(?:-[A-Z0-9]{1,2})?")
_DECIMAL_RE = re.compile(r"[0-9]+(?:\.[0-9]+)?")
_DIGITS = frozenset("0123456789")


@dataclass(frozen=True)
class SensorPacket:
    callsign: str
    lat: float
    lon: float
    irr: float
    t_meas: float

    def __post_init__(self):
        if not valid_callsign(self.callsign):
            raise InvalidInputError(f"invalid callsign {self.callsign!r}")
        if not (-90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0):
            raise InvalidInputError(f"coordinates ({self.lat}, {self.lon}) out of range")
        if not 0.0 <= self.irr <= 1.0:
            raise InvalidInputError(f"irr must be in [0, 1], got {self.irr!r}")
        if not (math.isfinite(self.t_meas) and self.t_meas >= 0):
            raise InvalidInputError(f"t_meas must be >= 0, got {self.t_meas!r}")


def valid_callsign(callsign):
    return 3 <= len(callsign) <= 9 and _CALLSIGN_RE.fullmatch(callsign) is not None


class _Cursor:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.callsign = None

    def fail(self, kind, detail="", offset=None):
        return PacketError(kind, self.pos if offset is None else offset, detail, callsign=self.callsign)

    def at_end(self):
        return self.pos >= len(self.text)

    def expect_literal(self, literal, kind):
        for ch in literal:
            if self.at_end():
                raise self.fail("missing_field", f"expected {literal!r}")
            if self.text[self.pos] != ch:
                raise self.fail(kind, f"expected {literal!r}")
            self.pos += 1

    def digits(self, count, what):
        start = self.pos
        for _ in range(count):
            if self.at_end():
                raise self.fail("missing_field", f"truncated {what}")
            if self.text[self.pos] not in _DIGITS:
                raise self.fail("bad_coordinate", f"non-digit in {what}")
            self.pos += 1
        return int(self.text[start:self.pos])

    def coordinate(self, deg_digits, hemispheres, max_deg, what):
        start = self.pos
        degrees = self.digits(deg_digits, f"{what} degrees")
        minutes_at = self.pos
        whole = self.digits(2, f"{what} minutes")
        self.expect_literal(".", "bad_coordinate")
        hundredths = self.digits(2, f"{what} minutes")
        if self.at_end():
            raise self.fail("missing_field", f"missing {what} hemisphere")
        hemisphere = self.text[self.pos]
        if hemisphere not in hemispheres:
            raise self.fail("bad_coordinate", f"bad {what} hemisphere {hemisphere!r}")
        self.pos += 1
        if whole >= 60:
            raise self.fail("bad_coordinate", f"{what} minutes >= 60", offset=minutes_at)
        if degrees > max_deg or (degrees == max_deg and (whole or hundredths)):
            raise self.fail("bad_coordinate", f"{what} beyond {max_deg} degrees", offset=start)
        value = degrees + (whole + hundredths / 100.0) / 60.0
        return -value if hemisphere == hemispheres[1] else value

    def decimal(self, what):
        if self.at_end():
            raise self.fail("missing_field", f"missing {what} value")
        m = _DECIMAL_RE.match(self.text, self.pos)
        if m is None:
            raise self.fail("bad_value", f"{what} is not a decimal")
        value = float(m.group(0))
        if not math.isfinite(value):
            raise self.fail("bad_value", f"{what} is not finite")
        start = self.pos
        self.pos = m.end()
        return value, start


def parse_sensor_packet(line):
    """Parse one report line; raises PacketError naming the byte offset."""
    text = line.rstrip("\r\n")
    cur = _Cursor(text)
    gt = text.find(">")
    callsign = text[:gt] if gt > 0 else ""
    if not valid_callsign(callsign):
        raise cur.fail("malformed_header", "missing or invalid callsign")
    cur.callsign = callsign
    cur.pos = gt
    cur.expect_literal(HEADER, "malformed_header")

    lat = cur.coordinate(2, "NS", 90, "latitude")
    cur.expect_literal("/", "bad_coordinate")
    lon = cur.coordinate(3, "EW", 180, "longitude")

    cur.expect_literal("#IRR=", "missing_field")
    irr, irr_at = cur.decimal("IRR")
    if irr > 1.0:
        raise cur.fail("irr_out_of_range", f"IRR={irr} exceeds 1", offset=irr_at)
    cur.expect_literal(",T=", "missing_field")
    t_meas, _ = cur.decimal("T")
    if not cur.at_end():
        raise cur.fail("bad_value", "trailing data after T")
    return SensorPacket(callsign=callsign, lat=lat, lon=lon, irr=irr, t_meas=t_meas)


def _format_coordinate(value, deg_digits, hemispheres):
    hundredths = round(abs(value) * 6000)
    degrees, minute_hundredths = divmod(hundredths, 6000)
    hemisphere = hemispheres[1] if value < 0 else hemispheres[0]
    return f"{degrees:0{deg_digits}d}{minute_hundredths // 100:02d}.{minute_hundredths % 100:02d}{hemisphere}"


def format_sensor_packet(packet):
    return (
        f"{packet.callsign}{HEADER}"
        f"{_format_coordinate(packet.lat, 2, 'NS')}/{_format_coordinate(packet.lon, 3, 'EW')}"
        f"#IRR={fmt_float(packet.irr)},T={fmt_float(packet.t_meas)}"
    )


@dataclass
class IngestReport:
    accepted: int = 0
    superseded: int = 0
    rejected: int = 0
    errors: Counter = field(default_factory=Counter)
    lines: int = 0
    partial: bool = False

    def as_dict(self):
        return {
            "accepted": self.accepted,
            "superseded": self.superseded,
            "rejected": self.rejected,
            "errors": dict(sorted(self.errors.items())),
            "lines": self.lines,
            "partial": self.partial,
        }


def _as_text(line):
    if isinstance(line, bytes):
        return line.decode("utf-8", errors="replace")
    return line


def ingest_line(line, network, store, health=None):
    """Parse and store one line. Returns the IngestOutcome; raises PacketError."""
    try:
        packet = parse_sensor_packet(_as_text(line))
    except PacketError as exc:
        telemetry.metrics.inc("score_packets_rejected_total", kind=exc.kind)
        if health is not None:
            health.record_rejected(exc.callsign or UNKNOWN_CALLSIGN, exc)
        raise
    node_id = nearest_node(network, packet.lat, packet.lon)
    obs = IrradianceObservation(node_id=node_id, r_on=packet.irr, t_meas=packet.t_meas, source=packet.callsign)
    outcome = store.ingest_observation(obs)
    telemetry.metrics.inc("score_observations_total", result=outcome.value)
    if health is not None:
        health.record_ingested(packet.callsign, outcome)
    return outcome


def ingest_stream(source, network, store, health=None):
    """Feed every line of ``source`` into the store; bad lines are counted, never fatal."""
    report = IngestReport()
    try:
        for raw in source:
            text = _as_text(raw).strip()
            if not text:
                continue
            report.lines += 1
            try:
                outcome = ingest_line(text, network, store, health)
            except PacketError as exc:
                report.rejected += 1
                report.errors[exc.kind] += 1
                logger.debug("Rejected sensor line %r: %s", text[:120], exc)
                continue
            if outcome is IngestOutcome.ACCEPTED:
                report.accepted += 1
            else:
                report.superseded += 1
    except OSError as exc:
        report.partial = True
        logger.error("Sensor stream failed after %s lines: %s", report.lines, exc)
    if report.rejected:
        logger.warning(
            "Ingest: %s accepted, %s superseded, %s rejected (%s)",
            report.accepted, report.superseded, report.rejected,
            ", ".join(f"{k}={v}" for k, v in sorted(report.errors.items())),
        )
    else:
        logger.info("Ingest: %s accepted, %s superseded", report.accepted, report.superseded)
    return report
