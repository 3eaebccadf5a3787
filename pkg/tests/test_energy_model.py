import pytest
from hypothesis import given
from hypothesis import strategies as st

from energy_model import edge_energy, harvest_power, route_energy_totals, travel_time_s
from errors import InvalidInputError
from network_model import Edge, VehicleSpec

SPEC = VehicleSpec()

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_harvest_power_constants():
    assert harvest_power(SPEC, 0.0) == 0.0
    assert harvest_power(SPEC, 1.0) == pytest.approx(957 * 1.452 * 0.18, rel=1e-9)
    assert harvest_power(SPEC, 1.0) == pytest.approx(250.12, abs=0.01)
    assert harvest_power(SPEC, 0.5) == pytest.approx(125.06, abs=0.01)


def test_harvest_power_rejects_out_of_range():
    with pytest.raises(InvalidInputError):
        harvest_power(SPEC, 1.01)
    with pytest.raises(InvalidInputError):
        harvest_power(SPEC, -0.1)


def test_edge_energy_in_shade():
    energy = edge_energy(SPEC, Edge(1, 2, 1000.0, 50.0), 0.0)
    assert energy.travel_time_s == pytest.approx(72.0)
    assert energy.consumed_wh == pytest.approx(110.0)
    assert energy.harvested_wh == 0.0
    assert energy.net_wh == pytest.approx(110.0)
    assert energy.edge_key == (1, 2)


def test_edge_energy_in_full_sun():
    energy = edge_energy(SPEC, Edge(1, 2, 1000.0, 50.0), 1.0)
    assert energy.harvested_wh == pytest.approx(5.002, abs=1e-3)
    assert energy.net_wh == pytest.approx(104.998, abs=1e-3)
    assert energy.net_wh == pytest.approx(energy.consumed_wh - energy.harvested_wh)


def test_zero_length_edge_is_invalid():
    with pytest.raises(InvalidInputError):
        travel_time_s(Edge(1, 2, 0.0))


def test_route_energy_totals_sums_ledger():
    ledger = [
        edge_energy(SPEC, Edge(1, 2, 1000.0), 0.0),
        edge_energy(SPEC, Edge(2, 3, 500.0, 25.0), 1.0),
    ]
    totals = route_energy_totals(ledger)
    assert totals.travel_time_s == pytest.approx(72.0 + 72.0)
    assert totals.consumed_wh == pytest.approx(220.0)
    assert totals.net_wh == pytest.approx(sum(e.net_wh for e in ledger))
    assert route_energy_totals([]).net_wh == 0


@given(unit, unit)
def test_harvest_power_is_linear_and_monotone_in_irradiance(r1, r2):
    full = harvest_power(SPEC, 1.0)
    assert harvest_power(SPEC, r1) == pytest.approx(r1 * full, rel=1e-12, abs=1e-12)
    lo, hi = sorted((r1, r2))
    assert harvest_power(SPEC, lo) <= harvest_power(SPEC, hi)


@given(unit, unit, st.floats(min_value=1.0, max_value=5000.0), st.floats(min_value=5.0, max_value=130.0))
def test_net_energy_does_not_rise_with_irradiance(r1, r2, length, speed):
    edge = Edge(1, 2, length, speed)
    lo, hi = sorted((r1, r2))
    assert edge_energy(SPEC, edge, hi).net_wh <= edge_energy(SPEC, edge, lo).net_wh


@given(unit, st.floats(min_value=1.0, max_value=5000.0), st.integers(min_value=2, max_value=20))
def test_energy_scales_with_edge_length(r, length, factor):
    short = edge_energy(SPEC, Edge(1, 2, length), r)
    long = edge_energy(SPEC, Edge(1, 2, length * factor), r)
    assert long.consumed_wh == pytest.approx(factor * short.consumed_wh, rel=1e-9)
    assert long.harvested_wh == pytest.approx(factor * short.harvested_wh, rel=1e-9, abs=1e-12)
