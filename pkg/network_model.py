"""Road network graph, parking lots and vehicle specification."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace
from types import MappingProxyType

import numpy as np

from errors import UnknownNodeError, ValidationError
from records import fmt_float, iter_records, read_records

logger = logging.getLogger("score")

EARTH_RADIUS_M = 6_371_008.8
DEFAULT_SPEED_KMH = 50.0


@dataclass(frozen=True)
class Node:
    id: int
    lat: float
    lon: float
    label: str = ""


@dataclass(frozen=True)
class Edge:
    from_id: int
    to_id: int
    length_m: float
    speed_kmh: float = DEFAULT_SPEED_KMH

    @property
    def key(self):
        return (self.from_id, self.to_id)


@dataclass(frozen=True)
class ParkingLot:
    id: int
    node_id: int
    lat: float
    lon: float
    irradiance: float | None = None  # static override; None means "ask the fusion store"


@dataclass(frozen=True)
class VehicleSpec:
    motor_power_w: float = 11000.0
    panel_area_m2: float = 1.452
    panel_efficiency: float = 0.18
    max_incident_wm2: float = 957.0
    cruise_power_w: float = 5500.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise ValidationError(f"vehicle spec {f.name} must be > 0, got {value!r}", subject=f.name)
        if self.panel_efficiency >= 1:
            raise ValidationError(
                f"vehicle spec panel_efficiency must be in (0, 1), got {self.panel_efficiency!r}",
                subject="panel_efficiency",
            )


@dataclass(frozen=True)
class RoadNetwork:
    """Immutable directed road graph; build it with ``RoadNetwork.build``."""

    nodes: MappingProxyType
    edges: MappingProxyType
    adjacency: MappingProxyType
    lots: tuple = ()
    _coords: tuple = field(default=(), repr=False, compare=False)

    @classmethod
    def build(cls, nodes, edges, lots=()):
        nodes = list(nodes)
        edges = list(edges)
        node_map = {}
        for node in nodes:
            if node.id in node_map:
                raise ValidationError(f"duplicate node id {node.id}", subject=node.id)
            _validate_node(node)
            node_map[node.id] = node
        if not node_map:
            raise ValidationError("empty network: no nodes defined")

        edge_map = {}
        for edge in edges:
            _validate_edge(edge, node_map)
            if edge.key in edge_map:
                raise ValidationError(f"duplicate edge {edge.from_id}->{edge.to_id}", subject=edge.key)
            edge_map[edge.key] = edge

        adjacency = {node_id: [] for node_id in node_map}
        for key in sorted(edge_map):
            adjacency[key[0]].append(edge_map[key])

        lot_ids = set()
        for lot in lots:
            _validate_lot(lot, node_map)
            if lot.id in lot_ids:
                raise ValidationError(f"duplicate parking lot id {lot.id}", subject=lot.id)
            lot_ids.add(lot.id)

        ordered = sorted(node_map)
        coords = (
            np.array(ordered, dtype=np.int64),
            np.array([node_map[i].lat for i in ordered], dtype=float),
            np.array([node_map[i].lon for i in ordered], dtype=float),
        )
        return cls(
            nodes=MappingProxyType(node_map),
            edges=MappingProxyType(edge_map),
            adjacency=MappingProxyType({k: tuple(v) for k, v in adjacency.items()}),
            lots=tuple(sorted(lots, key=lambda l: l.id)),
            _coords=coords,
        )

    def node(self, node_id):
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def edge(self, from_id, to_id):
        try:
            return self.edges[(from_id, to_id)]
        except KeyError:
            raise ValidationError(f"no edge {from_id}->{to_id}", subject=(from_id, to_id)) from None

    def out_edges(self, node_id):
        try:
            return self.adjacency[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def __contains__(self, node_id):
        return node_id in self.nodes


def _validate_node(node):
    if not isinstance(node.id, int) or node.id <= 0:
        raise ValidationError(f"node id must be a positive integer, got {node.id!r}", subject=node.id)
    if not -90.0 <= node.lat <= 90.0:
        raise ValidationError(f"node {node.id}: latitude {node.lat} out of range", subject=node.id)
    if not -180.0 <= node.lon <= 180.0:
        raise ValidationError(f"node {node.id}: longitude {node.lon} out of range", subject=node.id)


def _validate_edge(edge, node_map):
    label = f"edge {edge.from_id}->{edge.to_id}"
    if edge.from_id == edge.to_id:
        raise ValidationError(f"{label}: self loop", subject=edge.key)
    for endpoint in (edge.from_id, edge.to_id):
        if endpoint not in node_map:
            raise ValidationError(f"{label}: dangling endpoint {endpoint}", subject=edge.key)
    if not edge.length_m > 0:
        raise ValidationError(f"{label}: non-positive length {edge.length_m}", subject=edge.key)
    if not edge.speed_kmh > 0:
        raise ValidationError(f"{label}: non-positive speed {edge.speed_kmh}", subject=edge.key)


def _validate_lot(lot, node_map):
    if lot.id <= 0:
        raise ValidationError(f"parking lot id must be positive, got {lot.id}", subject=lot.id)
    if node_map is not None and lot.node_id not in node_map:
        raise ValidationError(f"parking lot {lot.id}: dangling node {lot.node_id}", subject=lot.id)
    if not (-90.0 <= lot.lat <= 90.0 and -180.0 <= lot.lon <= 180.0):
        raise ValidationError(f"parking lot {lot.id}: coordinates out of range", subject=lot.id)
    if lot.irradiance is not None and not 0.0 <= lot.irradiance <= 1.0:
        raise ValidationError(f"parking lot {lot.id}: irradiance {lot.irradiance} outside [0, 1]", subject=lot.id)


# -- records ---------------------------------------------------------------

def node_from_record(rec):
    node_id = rec.int_field(0, "node id")
    lat = rec.float_field(1, "lat")
    lon = rec.float_field(2, "lon")
    label = " ".join(rec.fields[3:])
    return Node(node_id, lat, lon, label)


def edge_from_record(rec):
    if len(rec.fields) > 4:
        raise rec.error("too many fields")
    return Edge(
        rec.int_field(0, "from id"),
        rec.int_field(1, "to id"),
        rec.float_field(2, "length_m"),
        rec.float_field(3, "speed_kmh", default=DEFAULT_SPEED_KMH),
    )


def lot_from_record(rec):
    if len(rec.fields) > 5:
        raise rec.error("too many fields")
    irradiance = rec.float_field(4, "irradiance") if len(rec.fields) == 5 else None
    return ParkingLot(
        rec.int_field(0, "lot id"),
        rec.int_field(1, "node id"),
        rec.float_field(2, "lat"),
        rec.float_field(3, "lon"),
        irradiance,
    )


def network_from_records(records):
    nodes, edges, lots = [], [], []
    for rec in records:
        if rec.tag == "N":
            nodes.append(node_from_record(rec))
        elif rec.tag == "E":
            edges.append(edge_from_record(rec))
        elif rec.tag == "P":
            lots.append(lot_from_record(rec))
    return RoadNetwork.build(nodes, edges, lots)


def load_network(path):
    """Load and validate a network file (N/E/P records)."""
    records = read_records(path, tags=("N", "E", "P"))
    network = network_from_records(records)
    logger.info(
        "Loaded network %s: %s nodes, %s edges, %s lots",
        path, len(network.nodes), len(network.edges), len(network.lots),
    )
    return network


def parse_network(text, *, path="<text>"):
    return network_from_records(iter_records(text.splitlines(), path=path, tags=("N", "E", "P")))


def dump_network(network):
    lines = []
    for node_id in sorted(network.nodes):
        node = network.nodes[node_id]
        parts = ["N", str(node.id), fmt_float(node.lat), fmt_float(node.lon)]
        if node.label:
            parts.append(node.label)
        lines.append(" ".join(parts))
    for key in sorted(network.edges):
        edge = network.edges[key]
        lines.append(f"E {edge.from_id} {edge.to_id} {fmt_float(edge.length_m)} {fmt_float(edge.speed_kmh)}")
    for lot in network.lots:
        lines.append(_format_lot(lot))
    return "\n".join(lines) + "\n"


def _format_lot(lot):
    line = f"P {lot.id} {lot.node_id} {fmt_float(lot.lat)} {fmt_float(lot.lon)}"
    if lot.irradiance is not None:
        line += f" {fmt_float(lot.irradiance)}"
    return line


def lots_from_records(records, network=None):
    """Parking lots from P records; node ids are only checked when a network is given."""
    lots = [lot_from_record(rec) for rec in records if rec.tag == "P"]
    node_map = network.nodes if network is not None else None
    seen = set()
    for lot in lots:
        _validate_lot(lot, node_map)
        if lot.id in seen:
            raise ValidationError(f"duplicate parking lot id {lot.id}", subject=lot.id)
        seen.add(lot.id)
    return sorted(lots, key=lambda l: l.id)


def load_lots(path, network=None):
    lots = lots_from_records(read_records(path, tags=("P",)), network)
    logger.info("Loaded %s parking lots from %s", len(lots), path)
    return lots


_SPEC_KEYS = {f.name for f in fields(VehicleSpec)}


def vehicle_spec_from_records(records, base=None):
    """Vehicle constants from V records; later keys override earlier ones."""
    spec = base or VehicleSpec()
    for rec in records:
        if rec.tag != "V":
            continue
        values = {}
        for item in rec.fields:
            key, sep, raw = item.partition("=")
            if not sep:
                raise rec.error(f"expected key=value, got {item!r}")
            if key not in _SPEC_KEYS:
                raise rec.error(f"unknown vehicle spec key {key!r}")
            try:
                values[key] = float(raw)
            except ValueError:
                raise rec.error(f"{key} is not a number: {raw!r}") from None
        try:
            spec = replace(spec, **values)
        except ValidationError as exc:
            raise ValidationError(f"{rec.path or '<input>'}:{rec.line_no}: {exc.message}", subject=exc.subject) from None
    return spec


def load_vehicle_spec(path):
    return vehicle_spec_from_records(read_records(path, tags=("V",)))


# -- geometry --------------------------------------------------------------

def great_circle_m(lat1, lon1, lat2, lon2):
    """Haversine distance in meters; works on scalars and numpy arrays."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(lon2) - np.radians(lon1)
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def nearest_node(network, lat, lon):
    """Id of the node closest to (lat, lon); ties go to the smallest id."""
    ids, lats, lons = network._coords
    distances = great_circle_m(lats, lons, lat, lon)
    return int(ids[int(np.argmin(distances))])
