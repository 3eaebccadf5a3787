import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import telemetry
from errors import PACKET_ERROR_KINDS, PacketError
from fusion_store import FusionStore, IngestOutcome, OfflineTable
from network_model import parse_network
from sensor_ingest import (
    SensorPacket,
    format_sensor_packet,
    ingest_line,
    ingest_stream,
    parse_sensor_packet,
)

EXAMPLE = "T9ABC>SCORE:!4351.90N/01824.40E#IRR=0.83,T=4407.50"
RESOLUTION_DEG = 1 / 6000

NET = """\
N 1 43.865 18.40667
N 2 43.900 18.50000
N 3 -33.850 -151.20000
"""


def _store(network):
    return FusionStore(OfflineTable({n: [(0.0, 0.1)] for n in network.nodes}))


def _line(callsign, lat, lon, irr, t):
    return format_sensor_packet(SensorPacket(callsign, lat, lon, irr, t))


def test_parse_example_packet():
    packet = parse_sensor_packet(EXAMPLE)
    assert packet.callsign == "T9ABC"
    assert packet.lat == pytest.approx(43.865)
    assert packet.lon == pytest.approx(18.406667, abs=1e-6)
    assert packet.irr == 0.83
    assert packet.t_meas == 4407.5


def test_southern_western_hemispheres_are_negative():
    packet = parse_sensor_packet("VK2XYZ-12>SCORE:!3351.00S/15112.00W#IRR=0,T=12")
    assert packet.lat == pytest.approx(-33.85)
    assert packet.lon == pytest.approx(-151.2)
    assert packet.callsign == "VK2XYZ-12"


def test_irr_above_one_names_its_offset():
    line = "T9ABC>SCORE:!4351.90N/01824.40E#IRR=1.20,T=1.0"
    with pytest.raises(PacketError) as exc:
        parse_sensor_packet(line)
    assert exc.value.kind == "irr_out_of_range"
    assert exc.value.offset == line.index("1.20")
    assert exc.value.callsign == "T9ABC"


@pytest.mark.parametrize("line, kind, offset", [
    ("garbage", "malformed_header", 0),
    ("", "malformed_header", 0),
    ("ab>SCORE:!4351.90N/01824.40E#IRR=0.5,T=1", "malformed_header", 0),
    ("T9ABC>APRS:!4351.90N/01824.40E#IRR=0.5,T=1", "malformed_header", 6),
    ("T9ABC>SCORE:!4351.90X/01824.40E#IRR=0.5,T=1", "bad_coordinate", 20),
    ("T9ABC>SCORE:!4361.90N/01824.40E#IRR=0.5,T=1", "bad_coordinate", 15),
    ("T9ABC>SCORE:!9100.00N/01824.40E#IRR=0.5,T=1", "bad_coordinate", 13),
    ("T9ABC>SCORE:!43a1.90N/01824.40E#IRR=0.5,T=1", "bad_coordinate", 15),
    ("T9ABC>SCORE:!4351.90N/18100.00E#IRR=0.5,T=1", "bad_coordinate", 22),
    ("T9ABC>SCORE:!4351.9", "missing_field", 19),
    ("T9ABC>SCORE:!4351.90N/01824.40E", "missing_field", 31),
    ("T9ABC>SCORE:!4351.90N/01824.40E,T=1", "missing_field", 31),
    ("T9ABC>SCORE:!4351.90N/01824.40E#IRR=0.5", "missing_field", 39),
    ("T9ABC>SCORE:!4351.90N/01824.40E#IRR=,T=1", "bad_value", 36),
    ("T9ABC>SCORE:!4351.90N/01824.40E#IRR=0.5,T=-1", "bad_value", 42),
    ("T9ABC>SCORE:!4351.90N/01824.40E#IRR=0.5,T=1 extra", "bad_value", 43),
])
def test_error_kinds_and_offsets(line, kind, offset):
    with pytest.raises(PacketError) as exc:
        parse_sensor_packet(line)
    assert exc.value.kind == kind
    assert exc.value.offset == offset


def test_trailing_newline_is_ignored():
    assert parse_sensor_packet(EXAMPLE + "\r\n") == parse_sensor_packet(EXAMPLE)


packets = st.builds(
    SensorPacket,
    callsign=st.from_regex(r"[A-Z0-9]{3,6}(-[A-Z0-9]{1,2})?", fullmatch=True),
    lat=st.floats(min_value=-90, max_value=90),
    lon=st.floats(min_value=-180, max_value=180),
    irr=st.floats(min_value=0, max_value=1),
    t_meas=st.floats(min_value=0, max_value=1e6),
)


@given(packets)
def test_format_then_parse_round_trip(packet):
    parsed = parse_sensor_packet(format_sensor_packet(packet))
    assert parsed.callsign == packet.callsign
    assert abs(parsed.lat - packet.lat) <= RESOLUTION_DEG
    assert abs(parsed.lon - packet.lon) <= RESOLUTION_DEG
    assert parsed.irr == packet.irr
    assert parsed.t_meas == packet.t_meas


def _check_fuzz_line(text):
    try:
        packet = parse_sensor_packet(text)
    except PacketError as exc:
        assert exc.kind in PACKET_ERROR_KINDS
        assert 0 <= exc.offset <= len(text)
        return False
    again = parse_sensor_packet(format_sensor_packet(packet))
    assert abs(again.lat - packet.lat) <= RESOLUTION_DEG
    assert abs(again.lon - packet.lon) <= RESOLUTION_DEG
    assert (again.callsign, again.irr, again.t_meas) == (packet.callsign, packet.irr, packet.t_meas)
    return True


def test_random_bytes_never_crash_the_parser():
    rng = random.Random(7)
    for _ in range(100_000):
        raw = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 60)))
        _check_fuzz_line(raw.decode("utf-8", errors="replace"))


def test_mutated_valid_lines_never_crash_the_parser():
    rng = random.Random(21)
    base = EXAMPLE.encode("ascii")
    accepted = 0
    for _ in range(100_000):
        raw = bytearray(base)
        pos = rng.randrange(len(raw))
        op = rng.random()
        if op < 0.6:
            raw[pos] = rng.randrange(256)
        elif op < 0.8:
            del raw[pos]
        else:
            raw.insert(pos, rng.randrange(256))
        accepted += _check_fuzz_line(bytes(raw).decode("utf-8", errors="replace"))
    assert accepted > 0


def test_ingest_three_distinct_nodes():
    network = parse_network(NET)
    store = _store(network)
    lines = [
        EXAMPLE,
        _line("DL1ABC", 43.9, 18.5, 0.4, 4400),
        _line("VK2XYZ-1", -33.85, -151.2, 0.9, 4401),
    ]
    report = ingest_stream(lines, network, store)
    assert (report.accepted, report.superseded, report.rejected) == (3, 0, 0)
    assert set(store.observations()) == {1, 2, 3}
    assert store.observations()[1].source == "T9ABC"
    assert telemetry.metrics.value("score_observations_total", result="accepted") == 3


def test_ingest_older_line_is_superseded():
    network = parse_network(NET)
    store = _store(network)
    report = ingest_stream([
        _line("DL1ABC", 43.9, 18.5, 0.4, 4400),
        _line("DL1ABC", 43.9, 18.5, 0.9, 4300),
    ], network, store)
    assert (report.accepted, report.superseded) == (1, 1)
    assert store.observations()[2].r_on == 0.4


def test_malformed_lines_are_skipped():
    network = parse_network(NET)
    valid = [_line("DL1ABC", 43.9, 18.5, i / 10, 4400 + i) for i in range(4)] + [EXAMPLE]
    mixed = valid[:2] + ["garbage"] + valid[2:4] + ["T9ABC>SCORE:!4351.90N/01824.40E#IRR=1.5,T=1"] + valid[4:]

    store = _store(network)
    report = ingest_stream(mixed, network, store)
    assert report.rejected == 2
    assert report.accepted == 5
    assert report.errors == {"malformed_header": 1, "irr_out_of_range": 1}
    assert report.lines == 7

    oracle = _store(network)
    ingest_stream(valid, network, oracle)
    assert store.observations() == oracle.observations()
    assert telemetry.metrics.value("score_packets_rejected_total", kind="malformed_header") == 1


def test_blank_lines_and_bytes_are_accepted():
    network = parse_network(NET)
    store = _store(network)
    report = ingest_stream([b"", (EXAMPLE + "\n").encode("ascii"), "   \n"], network, store)
    assert report.lines == 1
    assert report.accepted == 1


def test_io_failure_gives_partial_report():
    network = parse_network(NET)

    def flaky():
        yield EXAMPLE
        raise OSError("link dropped")

    report = ingest_stream(flaky(), network, _store(network))
    assert report.partial is True
    assert report.accepted == 1
    assert report.as_dict()["partial"] is True


def test_ingest_line_outcome_and_error():
    network = parse_network(NET)
    store = _store(network)
    assert ingest_line(EXAMPLE, network, store) is IngestOutcome.ACCEPTED
    assert ingest_line(EXAMPLE, network, store) is IngestOutcome.ACCEPTED
    with pytest.raises(PacketError):
        ingest_line("nope", network, store)


def test_ingest_is_deterministic():
    network = parse_network(NET)
    rng = random.Random(4)
    lines = [
        _line("DL1ABC", rng.choice((43.865, 43.9, -33.85)), rng.choice((18.5, -151.2)), rng.random(), rng.randint(0, 99))
        for _ in range(50)
    ]
    a, b = _store(network), _store(network)
    assert ingest_stream(lines, network, a).as_dict() == ingest_stream(lines, network, b).as_dict()
    assert a.observations() == b.observations()
