import pytest

import config
import telemetry
from errors import ConfigError, ValidationError
from fusion_store import FusionStore, IrradianceObservation
from runtime import build_runtime, format_route_answer, load_data_files

from tests.conftest import FLAT_OFFLINE, FOUR_NODE_NET

LOTS = "P 10 1 48.000 11.000 0.9\nP 11 4 48.010 11.010 0.2\n"


@pytest.fixture
def events(monkeypatch):
    seen = []
    monkeypatch.setattr(telemetry, "emit_event", lambda event, payload: seen.append((event, payload)))
    return seen


def test_route_query_answers(make_runtime):
    rt = make_runtime(alpha=1.0, beta=0.0)
    assert rt.handle_query_line("ROUTE 1 4 8") == "1 2 4 2.0"
    assert rt.handle_query_line("route 1 4 8\r\n") == "1 2 4 2.0"
    assert rt.handle_query_line("ROUTE 1 1 8") == "1 0.0"
    assert rt.handle_query_line("ROUTE 4 1 8") == "ERR no_path"
    assert rt.handle_query_line("ROUTE 1 99 8") == "ERR unknown_node"
    assert telemetry.metrics.value("score_queries_total", command="route", result="ok") == 3
    assert telemetry.metrics.value("score_queries_total", command="route", result="no_path") == 1


@pytest.mark.parametrize("line", [
    "PARK 48 11",
    "ROUTE 1 2",
    "ROUTE one 2 3",
    "ROUTE 1 2 nan",
    "IRR 1 inf",
    "CALIBRATE 1 0.5",
    "HELLO",
])
def test_malformed_queries_are_usage_errors(make_runtime, line):
    assert make_runtime().handle_query_line(line) == "ERR usage"


def test_blank_query_gets_no_answer(make_runtime):
    assert make_runtime().handle_query_line("   ") is None


def test_negative_time_is_invalid(make_runtime):
    assert make_runtime().handle_query_line("ROUTE 1 4 -1") == "ERR invalid_input"


def test_park_query(make_runtime):
    rt = make_runtime(FOUR_NODE_NET + LOTS)
    assert rt.handle_query_line("PARK 48.0 11.0 12") == "10 0.9"
    ranked = rt.park(48.0, 11.0, 12.0, p_irr=0)
    assert [c.lot.id for c in ranked] == [10, 11]
    assert make_runtime().handle_query_line("PARK 48.0 11.0 12") == "ERR invalid_input"


def test_irradiance_query(make_runtime):
    rt = make_runtime()
    assert rt.handle_query_line("IRR 2 12") == "0.5"
    assert rt.handle_query_line("IRR 99 12") == "ERR unknown_node"
    rt.store.ingest_observation(IrradianceObservation(2, 1.0, 12.0))
    assert rt.handle_query_line("IRR 2 12") == "1.0"


def test_calibrate_query(make_runtime, events):
    rt = make_runtime()
    assert rt.handle_query_line("CALIBRATE 1 0.25 12") == "OK 0.5"
    assert rt.store.calibration_factor == 0.5
    assert [e for e, _ in events] == ["calibration_updated"]
    assert telemetry.metrics.value("score_calibrations_total", applied="true") == 1
    assert rt.handle_query_line("CALIBRATE 1 1.5 12") == "ERR invalid_input"

    dark = make_runtime(offline_text=FLAT_OFFLINE.replace("0.5", "0"))
    assert dark.handle_query_line("CALIBRATE 1 0.7 12") == "OK 1.0 noop"
    assert telemetry.metrics.value("score_calibrations_total", applied="false") == 1
    assert len(events) == 1


def test_replan_query_waits_for_the_interval(make_runtime, events):
    rt = make_runtime(alpha=1.0, beta=0.0)
    # following the direct road 1->4 (length 5) since t=8
    assert rt.handle_query_line("REPLAN 1 8 8.1 1 4") == "1 4 5.0 8.0"
    assert events == []
    assert rt.handle_query_line("REPLAN 1 8 8.5 1 4") == "1 2 4 2.0 8.5"
    assert [e for e, _ in events] == ["route_replanned"]
    assert events[0][1]["previous"] == [1, 4]
    assert telemetry.metrics.value("score_queries_total", command="replan", result="ok") == 2


def test_replan_interval_comes_from_config(make_runtime):
    rt = make_runtime(alpha=1.0, beta=0.0, replan_interval_h=1.0)
    assert rt.handle_query_line("REPLAN 1 8 8.5 1 4") == "1 4 5.0 8.0"
    assert rt.handle_query_line("REPLAN 1 8 9 1 4") == "1 2 4 2.0 9.0"
    # already at node 2 of the current route: only the tail is recomputed
    assert rt.handle_query_line("REPLAN 2 8 9 1 2 4") == "2 4 1.0 9.0"


@pytest.mark.parametrize("line, reply", [
    ("REPLAN 3 8 9 1 4", "ERR not_on_plan"),
    ("REPLAN 1 8 9 1 9", "ERR unknown_node"),
    ("REPLAN 2 8 9 2 1", "ERR invalid_input"),
    ("REPLAN 1 9 8 1 4", "ERR invalid_input"),
    ("REPLAN 1 8 9", "ERR usage"),
    ("REPLAN 1 8 9 1 x", "ERR usage"),
])
def test_replan_query_errors(make_runtime, line, reply):
    assert make_runtime().handle_query_line(line) == reply


def test_ingest_ack(make_runtime):
    rt = make_runtime()
    assert rt.ingest_ack("DL1ABC>SCORE:!4800.00N/01100.00E#IRR=0.9,T=10") == "OK accepted"
    assert rt.ingest_ack("DL1ABC>SCORE:!4800.00N/01100.00E#IRR=0.1,T=9") == "OK superseded"
    assert rt.ingest_ack("garbage") == "ERR malformed_header"
    assert rt.store.observations()[1].r_on == 0.9
    assert rt.health.snapshot()["DL1ABC"]["superseded"] == 1


def test_status(make_runtime):
    status = make_runtime(FOUR_NODE_NET + LOTS).status()
    assert status["nodes"] == 4
    assert status["edges"] == 5
    assert status["lots"] == 2
    assert status["calibration_factor"] == 1.0


def test_observations_file_is_preloaded(make_runtime, write_file):
    rt = make_runtime(observations_path=write_file("b.txt", "B 3 0.75 11.5 T9ABC\n"))
    assert rt.store.observations()[3].source == "T9ABC"
    assert rt.store.node_irradiance(3, 11.5) == 0.75


def test_lots_file_merges_with_network_lots(make_runtime, write_file):
    rt = make_runtime(FOUR_NODE_NET + LOTS, lots_path=write_file("lots.txt", "P 12 2 48.0 11.01 0.5\n"))
    assert [lot.id for lot in rt.lots] == [10, 11, 12]
    with pytest.raises(ValidationError, match="duplicate parking lot id 10"):
        make_runtime(FOUR_NODE_NET + LOTS, lots_path=write_file("dup.txt", "P 10 2 48.0 11.01\n"))


def test_park_only_runtime_without_network(write_file):
    cfg = config.load_config(None, {"lots_path": write_file("lots.txt", LOTS)}, environ={})
    rt = build_runtime(config.validate_config(cfg, required=()), need_network=False, need_offline=False)
    assert rt.network is None and rt.store is None
    assert rt.handle_query_line("PARK 48.0 11.0 12") == "10 0.9"
    assert rt.handle_query_line("ROUTE 1 4 8") == "ERR config"
    with pytest.raises(ConfigError):
        rt.require_loaded()


def test_load_data_files_reads_vehicle_spec(write_file):
    cfg = config.load_config(None, {
        "network_path": write_file("n.txt", FOUR_NODE_NET),
        "offline_path": write_file("o.txt", FLAT_OFFLINE),
        "spec_path": write_file("v.txt", "V panel_area_m2=2.0\n"),
    }, environ={})
    data = load_data_files(cfg)
    assert data.spec.panel_area_m2 == 2.0
    assert isinstance(FusionStore(data.offline), FusionStore)


def test_route_answer_format(make_runtime):
    rt = make_runtime(alpha=1.0, beta=0.0)
    assert format_route_answer(rt.route(1, 2, 0.0)) == "1 2 1.0"
