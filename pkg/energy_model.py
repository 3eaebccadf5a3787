"""Solar harvest and per-edge traversal energy for a vehicle."""
from __future__ import annotations

from dataclasses import dataclass

from errors import InvalidInputError

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class EdgeEnergy:
    from_id: int
    to_id: int
    irradiance: float
    travel_time_s: float
    consumed_wh: float
    harvested_wh: float
    net_wh: float

    @property
    def edge_key(self):
        return (self.from_id, self.to_id)


@dataclass(frozen=True)
class EnergyTotals:
    travel_time_s: float
    consumed_wh: float
    harvested_wh: float
    net_wh: float


def _check_irradiance(r):
    if not 0.0 <= r <= 1.0:
        raise InvalidInputError(f"irradiance must be in [0, 1], got {r!r}")


def harvest_power(spec, r):
    """Panel output in watts at normalized irradiance ``r``."""
    _check_irradiance(r)
    return r * spec.max_incident_wm2 * spec.panel_area_m2 * spec.panel_efficiency


def travel_time_s(edge):
    if not (edge.length_m > 0 and edge.speed_kmh > 0):
        raise InvalidInputError(f"edge {edge.from_id}->{edge.to_id} needs positive length and speed")
    return edge.length_m / (edge.speed_kmh / 3.6)


def edge_energy(spec, edge, r):
    _check_irradiance(r)
    seconds = travel_time_s(edge)
    hours = seconds / SECONDS_PER_HOUR
    consumed = spec.cruise_power_w * hours
    harvested = harvest_power(spec, r) * hours
    return EdgeEnergy(
        from_id=edge.from_id,
        to_id=edge.to_id,
        irradiance=r,
        travel_time_s=seconds,
        consumed_wh=consumed,
        harvested_wh=harvested,
        net_wh=consumed - harvested,
    )


def route_energy_totals(ledger):
    return EnergyTotals(
        travel_time_s=sum(e.travel_time_s for e in ledger),
        consumed_wh=sum(e.consumed_wh for e in ledger),
        harvested_wh=sum(e.harvested_wh for e in ledger),
        net_wh=sum(e.net_wh for e in ledger),
    )
