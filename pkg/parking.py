"""Parking lot ranking by irradiation-to-distance ratio."""
from __future__ import annotations

import math
from dataclasses import dataclass

from errors import InvalidInputError, ValidationError
from network_model import great_circle_m


@dataclass(frozen=True)
class ParkingQuery:
    dest_lat: float
    dest_lon: float
    p_irr: float = 1.0
    p_dist: float = 1.0
    epsilon_m: float = 1.0

    def __post_init__(self):
        if not (-90.0 <= self.dest_lat <= 90.0 and -180.0 <= self.dest_lon <= 180.0):
            raise InvalidInputError(f"destination ({self.dest_lat}, {self.dest_lon}) out of range")
        for name in ("p_irr", "p_dist"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be >= 0, got {value!r}", subject=name)
        if self.p_irr + self.p_dist <= 0:
            raise ValidationError("p_irr + p_dist must be > 0", subject="p_irr")
        if not (math.isfinite(self.epsilon_m) and self.epsilon_m > 0):
            raise ValidationError(f"epsilon_m must be > 0, got {self.epsilon_m!r}", subject="epsilon_m")


@dataclass(frozen=True)
class ParkingChoice:
    lot: object
    score: float
    irradiance_used: float
    distance_m: float


def parking_score(q, irr, dist_m):
    if not 0.0 <= irr <= 1.0:
        raise InvalidInputError(f"irradiance must be in [0, 1], got {irr!r}")
    if not dist_m >= 0:
        raise InvalidInputError(f"distance must be >= 0, got {dist_m!r}")
    return irr ** q.p_irr / max(dist_m, q.epsilon_m) ** q.p_dist


def rank_parking(network, store, lots, q, t_curr):
    """Every lot scored and ordered best first (ties: smaller lot id)."""
    lots = list(lots)
    if not lots:
        raise InvalidInputError("no parking lots to choose from")
    snapshot = store.snapshot() if store is not None else None
    choices = []
    for lot in lots:
        if lot.irradiance is not None:
            irr = lot.irradiance
        else:
            if snapshot is None:
                raise InvalidInputError(f"lot {lot.id} has no static irradiance and no fusion store is loaded")
            if network is not None:
                network.node(lot.node_id)
            irr = snapshot.node_irradiance(lot.node_id, t_curr)
        distance = float(great_circle_m(q.dest_lat, q.dest_lon, lot.lat, lot.lon))
        choices.append(ParkingChoice(lot=lot, score=parking_score(q, irr, distance), irradiance_used=irr, distance_m=distance))
    choices.sort(key=lambda c: (-c.score, c.lot.id))
    return choices


def select_parking(network, store, lots, q, t_curr):
    return rank_parking(network, store, lots, q, t_curr)[0]
