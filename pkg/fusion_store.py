"""Online/offline irradiance fusion with temporal decay and calibration."""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from types import MappingProxyType

import numpy as np

from errors import InvalidInputError, UnknownNodeError, ValidationError
from records import fmt_float, iter_records, read_records

logger = logging.getLogger("score")

# Gaussian decay denominator in hours^2; the weight is exp(-dt^2 / denominator).
DEFAULT_DECAY_DENOMINATOR = 100000.0
CALIBRATION_MIN = 0.5
CALIBRATION_MAX = 2.0
HOURS_PER_DAY = 24.0


class IngestOutcome(str, Enum):
    ACCEPTED = "accepted"
    SUPERSEDED = "superseded"


@dataclass(frozen=True)
class IrradianceObservation:
    node_id: int
    r_on: float
    t_meas: float
    source: str = ""

    def __post_init__(self):
        if not (isinstance(self.r_on, (int, float)) and 0.0 <= self.r_on <= 1.0):
            raise InvalidInputError(f"r_on must be in [0, 1], got {self.r_on!r}")
        if not (isinstance(self.t_meas, (int, float)) and math.isfinite(self.t_meas) and self.t_meas >= 0):
            raise InvalidInputError(f"t_meas must be a finite value >= 0, got {self.t_meas!r}")


@dataclass(frozen=True)
class CalibrationOutcome:
    factor: float
    applied: bool


def _clamp(value, low, high):
    return min(high, max(low, value))


def temporal_weight(t_curr, t_meas, denominator=DEFAULT_DECAY_DENOMINATOR):
    """Trust in an online reading taken at ``t_meas`` when asked at ``t_curr``."""
    if not (t_meas >= 0 and t_curr >= t_meas):
        raise InvalidInputError(f"need t_curr >= t_meas >= 0, got t_curr={t_curr!r} t_meas={t_meas!r}")
    elapsed = t_curr - t_meas
    return math.exp(-(elapsed * elapsed) / denominator)


def fuse(r_on, r_off, t_curr, t_meas, denominator=DEFAULT_DECAY_DENOMINATOR):
    for name, value in (("r_on", r_on), ("r_off", r_off)):
        if not 0.0 <= value <= 1.0:
            raise InvalidInputError(f"{name} must be in [0, 1], got {value!r}")
    a = temporal_weight(t_curr, t_meas, denominator)
    return r_on * a + r_off * (1.0 - a)


class OfflineTable:
    """Per-node hour-of-day breakpoints, interpolated linearly around the clock."""

    def __init__(self, breakpoints):
        table = {}
        for node_id, points in breakpoints.items():
            ordered = sorted(points)
            hours = [h for h, _ in ordered]
            if len(set(hours)) != len(hours):
                raise ValidationError(f"offline table: duplicate hour for node {node_id}", subject=node_id)
            for hour, r_off in ordered:
                if not 0.0 <= hour < HOURS_PER_DAY:
                    raise ValidationError(f"offline table: node {node_id} hour {hour} outside [0, 24)", subject=node_id)
                if not 0.0 <= r_off <= 1.0:
                    raise ValidationError(f"offline table: node {node_id} r_off {r_off} outside [0, 1]", subject=node_id)
            if not ordered:
                raise ValidationError(f"offline table: node {node_id} has no breakpoints", subject=node_id)
            table[node_id] = (
                np.array(hours, dtype=float),
                np.array([r for _, r in ordered], dtype=float),
            )
        self._table = MappingProxyType(table)

    def __contains__(self, node_id):
        return node_id in self._table

    def node_ids(self):
        return set(self._table)

    def breakpoints(self, node_id):
        hours, values = self._lookup(node_id)
        return list(zip(hours.tolist(), values.tolist()))

    def _lookup(self, node_id):
        try:
            return self._table[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def at(self, node_id, t_curr):
        hours, values = self._lookup(node_id)
        hour_of_day = float(t_curr) % HOURS_PER_DAY
        return float(np.interp(hour_of_day, hours, values, period=HOURS_PER_DAY))


def offline_irradiance(table, node_id, t_curr):
    return table.at(node_id, t_curr)


@dataclass(frozen=True)
class FusionSnapshot:
    """Immutable view of the store; every query of one request reads one snapshot."""

    offline: OfflineTable
    observations: MappingProxyType
    calibration_factor: float = 1.0
    decay_denominator: float = DEFAULT_DECAY_DENOMINATOR

    def snapshot(self):
        return self

    def raw_node_irradiance(self, node_id, t_curr):
        """Fused value before calibration."""
        r_off = self.offline.at(node_id, t_curr)
        obs = self.observations.get(node_id)
        if obs is None or obs.t_meas > t_curr:
            return r_off
        return fuse(obs.r_on, r_off, t_curr, obs.t_meas, self.decay_denominator)

    def node_irradiance(self, node_id, t_curr):
        return _clamp(self.calibration_factor * self.raw_node_irradiance(node_id, t_curr), 0.0, 1.0)

    def edge_irradiance(self, edge, t_curr):
        return (self.node_irradiance(edge.from_id, t_curr) + self.node_irradiance(edge.to_id, t_curr)) / 2.0


class FusionStore:
    """Latest observation per node plus the offline table.

    Writers are serialized by a lock and publish a fresh immutable state, so a
    reader sees either the state before or after any single write.
    """

    def __init__(self, offline, *, calibration_factor=1.0, decay_denominator=DEFAULT_DECAY_DENOMINATOR):
        if not decay_denominator > 0:
            raise ValidationError(f"decay_denominator must be > 0, got {decay_denominator!r}")
        self.offline = offline
        self.decay_denominator = float(decay_denominator)
        self._lock = threading.Lock()
        self._state = FusionSnapshot(
            offline=offline,
            observations=MappingProxyType({}),
            calibration_factor=_clamp(float(calibration_factor), CALIBRATION_MIN, CALIBRATION_MAX),
            decay_denominator=self.decay_denominator,
        )

    def snapshot(self):
        return self._state

    @property
    def calibration_factor(self):
        return self._state.calibration_factor

    def observations(self):
        return dict(self._state.observations)

    def node_irradiance(self, node_id, t_curr):
        return self._state.node_irradiance(node_id, t_curr)

    def edge_irradiance(self, edge, t_curr):
        return self._state.edge_irradiance(edge, t_curr)

    def ingest_observation(self, obs):
        if obs.node_id not in self.offline:
            raise UnknownNodeError(obs.node_id)
        with self._lock:
            state = self._state
            current = state.observations.get(obs.node_id)
            if current is not None and obs.t_meas < current.t_meas:
                return IngestOutcome.SUPERSEDED
            observations = dict(state.observations)
            observations[obs.node_id] = obs
            self._state = FusionSnapshot(
                offline=state.offline,
                observations=MappingProxyType(observations),
                calibration_factor=state.calibration_factor,
                decay_denominator=state.decay_denominator,
            )
        return IngestOutcome.ACCEPTED

    def calibrate(self, r_predicted, r_measured):
        if not 0.0 <= r_predicted <= 1.0:
            raise InvalidInputError(f"r_predicted must be in [0, 1], got {r_predicted!r}")
        if not 0.0 <= r_measured <= 1.0:
            raise InvalidInputError(f"r_measured must be in [0, 1], got {r_measured!r}")
        if r_predicted == 0:
            logger.info("Calibration skipped: predicted irradiance is 0")
            return CalibrationOutcome(self.calibration_factor, applied=False)
        factor = _clamp(r_measured / r_predicted, CALIBRATION_MIN, CALIBRATION_MAX)
        with self._lock:
            state = self._state
            self._state = FusionSnapshot(
                offline=state.offline,
                observations=state.observations,
                calibration_factor=factor,
                decay_denominator=state.decay_denominator,
            )
        logger.info("Calibration factor %.4f -> %.4f", state.calibration_factor, factor)
        return CalibrationOutcome(factor, applied=True)

    def calibrate_from_sensor(self, node_id, r_measured, t_curr):
        """Compare the vehicle's light sensor with the uncalibrated prediction at its node."""
        predicted = _clamp(self._state.raw_node_irradiance(node_id, t_curr), 0.0, 1.0)
        return self.calibrate(predicted, r_measured)


def node_irradiance(store, node_id, t_curr):
    return store.snapshot().node_irradiance(node_id, t_curr)


def edge_irradiance(store, edge, t_curr):
    return store.snapshot().edge_irradiance(edge, t_curr)


def ingest_observation(store, obs):
    return store.ingest_observation(obs)


def calibrate(store, r_predicted, r_measured):
    return store.calibrate(r_predicted, r_measured)


# -- files -----------------------------------------------------------------

def offline_table_from_records(records):
    breakpoints = {}
    for rec in records:
        if rec.tag != "O":
            continue
        if len(rec.fields) != 3:
            raise rec.error("expected O <node_id> <hour_of_day> <r_off>")
        node_id = rec.int_field(0, "node id")
        hour = rec.float_field(1, "hour_of_day")
        r_off = rec.float_field(2, "r_off")
        points = breakpoints.setdefault(node_id, [])
        if any(h == hour for h, _ in points):
            raise ValidationError(
                f"{rec.path or '<input>'}:{rec.line_no}: duplicate hour {hour} for node {node_id}",
                subject=node_id,
            )
        points.append((hour, r_off))
    return OfflineTable(breakpoints)


def load_offline_table(path):
    table = offline_table_from_records(read_records(path, tags=("O",)))
    logger.info("Loaded offline irradiance table %s for %s nodes", path, len(table.node_ids()))
    return table


def validate_offline_table(table, network):
    missing = sorted(set(network.nodes) - table.node_ids())
    if missing:
        shown = ", ".join(str(n) for n in missing[:10])
        raise ValidationError(f"offline table has no breakpoints for nodes: {shown}", subject=missing)
    return table


def observations_from_records(records):
    observations = []
    for rec in records:
        if rec.tag != "B":
            continue
        if len(rec.fields) != 4:
            raise rec.error("expected B <node_id> <r_on> <t_meas> <source>")
        try:
            observations.append(IrradianceObservation(
                node_id=rec.int_field(0, "node id"),
                r_on=rec.float_field(1, "r_on"),
                t_meas=rec.float_field(2, "t_meas"),
                source=rec.fields[3],
            ))
        except InvalidInputError as exc:
            raise rec.error(str(exc)) from None
    return observations


def load_observations(path):
    return observations_from_records(read_records(path, tags=("B",)))


def dump_observations(store):
    lines = []
    observations = store.snapshot().observations
    for node_id in sorted(observations):
        obs = observations[node_id]
        lines.append(f"B {obs.node_id} {fmt_float(obs.r_on)} {fmt_float(obs.t_meas)} {obs.source or '-'}")
    return "\n".join(lines) + ("\n" if lines else "")


def hours_from_year_start(moment=None):
    moment = moment or datetime.now(timezone.utc)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    moment = moment.astimezone(timezone.utc)
    year_start = datetime(moment.year, 1, 1, tzinfo=timezone.utc)
    return (moment - year_start).total_seconds() / 3600.0
