"""Loaded data plus the fusion store, shared by the CLI, TCP and HTTP surfaces."""
from __future__ import annotations

import logging
import math
import threading
import time
from typing import NamedTuple

import telemetry
from errors import ConfigError, InvalidInputError, ScoreError, UsageError, ValidationError
from fusion_store import (
    FusionStore,
    hours_from_year_start,
    validate_offline_table,
    observations_from_records,
    offline_table_from_records,
)
from network_model import lots_from_records, network_from_records, vehicle_spec_from_records
from parking import ParkingQuery, rank_parking
from records import read_records
from routing import WeightConfig, plan_for_nodes, shortest_route, weight_matrix
from routing import replan as replan_route
from sensor_health import SensorHealthTracker
from sensor_ingest import ingest_line, ingest_stream

logger = logging.getLogger("score")

QUERY_USAGE = {
    "ROUTE": "ROUTE <src> <dst> <t>",
    "PARK": "PARK <lat> <lon> <t>",
    "IRR": "IRR <node> <t>",
    "CALIBRATE": "CALIBRATE <node> <r_measured> <t>",
    "REPLAN": "REPLAN <current> <computed_at> <t> <node> [<node> ...]",
}


class LoadedData(NamedTuple):
    network: object
    offline: object
    spec: object
    lots: list
    observations: list


def _file_records(path, tags):
    if not path:
        return []
    try:
        return read_records(path, tags=tags)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def _merge_lots(embedded, extra):
    lots = {}
    for lot in list(embedded) + list(extra):
        if lot.id in lots:
            raise ValidationError(f"duplicate parking lot id {lot.id}", subject=lot.id)
        lots[lot.id] = lot
    return [lots[k] for k in sorted(lots)]


def load_data_files(cfg, *, need_network=True, need_offline=True):
    """Read every configured data file, then merge in the config's inline records."""
    network_records = _file_records(cfg.network_path, ("N", "E", "P")) + cfg.records("N", "E", "P")
    network = None
    if need_network or any(rec.tag == "N" for rec in network_records):
        network = network_from_records(network_records)
        logger.info(
            "Network: %s nodes, %s edges, %s embedded lots",
            len(network.nodes), len(network.edges), len(network.lots),
        )

    offline_records = _file_records(cfg.offline_path, ("O",)) + cfg.records("O")
    offline = None
    if need_offline or offline_records:
        offline = offline_table_from_records(offline_records)

    spec = vehicle_spec_from_records(_file_records(cfg.spec_path, ("V",)) + cfg.records("V"))

    lot_records = _file_records(cfg.lots_path, ("P",))
    if network is None:
        lot_records += cfg.records("P")
    lots = _merge_lots(network.lots if network is not None else (), lots_from_records(lot_records, network))

    observations = observations_from_records(_file_records(cfg.observations_path, ("B",)) + cfg.records("B"))
    return LoadedData(network, offline, spec, lots, observations)


def _check_time(t_curr):
    if not (isinstance(t_curr, (int, float)) and math.isfinite(t_curr) and t_curr >= 0):
        raise InvalidInputError(f"time must be a finite number of hours >= 0, got {t_curr!r}")
    return float(t_curr)


def format_route_answer(plan):
    return " ".join(str(n) for n in plan.nodes) + f" {float(plan.total_weight)!r}"


def format_replan_answer(plan):
    """Route answer followed by the time the returned route was computed."""
    return format_route_answer(plan) + f" {float(plan.computed_at)!r}"


def format_park_answer(choice):
    return f"{choice.lot.id} {float(choice.score)!r}"


def format_calibration_answer(outcome):
    answer = f"OK {float(outcome.factor)!r}"
    return answer if outcome.applied else answer + " noop"


class ScoreRuntime:
    """One network, one fusion store and the query settings of an AppConfig."""

    def __init__(self, cfg, network, store, spec, lots, *, health=None, clock=None):
        self.cfg = cfg
        self.network = network
        self.store = store
        self.spec = spec
        self.lots = list(lots)
        self.weights = WeightConfig(alpha=cfg.alpha, beta=cfg.beta, floor_wh=cfg.floor_wh)
        self.health = health or SensorHealthTracker(
            telemetry, threshold=cfg.sensor_degraded_threshold, capacity=cfg.max_tracked_sensors,
        )
        self.clock = clock or hours_from_year_start
        self.started_at = time.time()
        self._ingest_lock = threading.Lock()

    def now(self):
        return self.clock()

    def require_loaded(self, network=True, store=True):
        if network and self.network is None:
            raise ConfigError("no road network loaded")
        if store and self.store is None:
            raise ConfigError("no offline irradiance table loaded")

    def _query(self, command, fn):
        try:
            result = fn()
        except ScoreError as exc:
            telemetry.metrics.inc("score_queries_total", command=command, result=exc.kind)
            raise
        telemetry.metrics.inc("score_queries_total", command=command, result="ok")
        return result

    # -- queries -----------------------------------------------------------

    def route(self, src, dst, t_curr):
        def run():
            self.require_loaded()
            return shortest_route(self.network, self.store, self.spec, self.weights, src, dst, _check_time(t_curr))
        return self._query("route", run)

    def park(self, lat, lon, t_curr, *, p_irr=None, p_dist=None):
        """Ranked parking choices, best first."""
        def run():
            q = ParkingQuery(
                dest_lat=lat,
                dest_lon=lon,
                p_irr=self.cfg.p_irr if p_irr is None else p_irr,
                p_dist=self.cfg.p_dist if p_dist is None else p_dist,
                epsilon_m=self.cfg.epsilon_m,
            )
            return rank_parking(self.network, self.store, self.lots, q, _check_time(t_curr))
        return self._query("park", run)

    def irradiance(self, node_id, t_curr):
        def run():
            self.require_loaded()
            self.network.node(node_id)
            return self.store.node_irradiance(node_id, _check_time(t_curr))
        return self._query("irradiance", run)

    def matrix(self, t_curr):
        def run():
            self.require_loaded()
            return weight_matrix(self.network, self.store, self.spec, self.weights, _check_time(t_curr))
        return self._query("matrix", run)

    def replan(self, route_nodes, computed_at, current_node, t_curr):
        """Re-route a vehicle following ``route_nodes`` (computed at ``computed_at``).

        The route is recomputed from ``current_node`` only once
        ``replan_interval_h`` hours have passed; before that the given route
        comes back unchanged.
        """
        def run():
            self.require_loaded()
            started, now = _check_time(computed_at), _check_time(t_curr)
            if now < started:
                raise InvalidInputError(f"t={now!r} is before the route was computed ({started!r})")
            plan = plan_for_nodes(self.network, self.store, self.spec, self.weights, route_nodes, started)
            return replan_route(
                plan, self.network, self.store, self.spec, self.weights,
                current_node, now, self.cfg.replan_interval_h,
            )
        return self._query("replan", run)

    def calibrate(self, node_id, r_measured, t_curr):
        def run():
            self.require_loaded()
            self.network.node(node_id)
            return self.store.calibrate_from_sensor(node_id, r_measured, _check_time(t_curr))
        outcome = self._query("calibrate", run)
        telemetry.metrics.inc("score_calibrations_total", applied=str(outcome.applied).lower())
        if outcome.applied:
            telemetry.emit_event("calibration_updated", {
                "node_id": node_id,
                "r_measured": r_measured,
                "factor": outcome.factor,
                "t_curr": t_curr,
            })
        return outcome

    # -- ingest ------------------------------------------------------------

    def ingest(self, line):
        self.require_loaded()
        with self._ingest_lock:
            return ingest_line(line, self.network, self.store, self.health)

    def ingest_ack(self, line):
        """``OK accepted`` / ``OK superseded`` / ``ERR <kind>`` for one sensor line."""
        try:
            outcome = self.ingest(line)
        except ScoreError as exc:
            return f"ERR {exc.kind}"
        return f"OK {outcome.value}"

    def ingest_lines(self, lines):
        self.require_loaded()
        with self._ingest_lock:
            return ingest_stream(lines, self.network, self.store, self.health)

    # -- line protocol -----------------------------------------------------

    def handle_query_line(self, line):
        """Answer one query line; returns None for a blank line."""
        parts = line.split()
        if not parts:
            return None
        try:
            return self._dispatch(parts[0].upper(), parts[1:])
        except ScoreError as exc:
            logger.debug("Query %r failed: %s", line.strip()[:120], exc)
            return f"ERR {exc.kind}"

    def _dispatch(self, command, args):
        if command == "ROUTE":
            src, dst, t = _parse_args(command, args, int, int, float)
            return format_route_answer(self.route(src, dst, t))
        if command == "PARK":
            lat, lon, t = _parse_args(command, args, float, float, float)
            return format_park_answer(self.park(lat, lon, t)[0])
        if command == "IRR":
            node_id, t = _parse_args(command, args, int, float)
            return repr(float(self.irradiance(node_id, t)))
        if command == "CALIBRATE":
            node_id, r_measured, t = _parse_args(command, args, int, float, float)
            return format_calibration_answer(self.calibrate(node_id, r_measured, t))
        if command == "REPLAN":
            if len(args) < 4:
                raise UsageError(f"usage: {QUERY_USAGE[command]}")
            values = _parse_args(command, args, int, float, float, *([int] * (len(args) - 3)))
            current, computed_at, t, route_nodes = values[0], values[1], values[2], values[3:]
            return format_replan_answer(self.replan(route_nodes, computed_at, current, t))
        raise UsageError(f"unknown command {command!r}")

    def status(self):
        return {
            "status": "ok",
            "nodes": len(self.network.nodes) if self.network is not None else 0,
            "edges": len(self.network.edges) if self.network is not None else 0,
            "lots": len(self.lots),
            "observations": len(self.store.snapshot().observations) if self.store is not None else 0,
            "calibration_factor": self.store.calibration_factor if self.store is not None else 1.0,
            "uptime_sec": round(time.time() - self.started_at, 1),
        }


def _parse_args(command, args, *types):
    if len(args) != len(types):
        raise UsageError(f"usage: {QUERY_USAGE[command]}")
    try:
        values = [kind(raw) for kind, raw in zip(types, args)]
    except ValueError:
        raise UsageError(f"usage: {QUERY_USAGE[command]}") from None
    if any(isinstance(v, float) and not math.isfinite(v) for v in values):
        raise UsageError(f"usage: {QUERY_USAGE[command]}")
    return values


def build_runtime(cfg, *, need_network=True, need_offline=True, clock=None):
    data = load_data_files(cfg, need_network=need_network, need_offline=need_offline)
    store = None
    if data.offline is not None:
        if data.network is not None:
            validate_offline_table(data.offline, data.network)
        store = FusionStore(data.offline, decay_denominator=cfg.decay_denominator)
        for obs in data.observations:
            store.ingest_observation(obs)
        if data.observations:
            logger.info("Preloaded %s observations", len(data.observations))
    return ScoreRuntime(cfg, data.network, store, data.spec, data.lots, clock=clock)
