import pytest

from rfrepo.errors import NoOverlap, UnknownFormat
from rfrepo.ingest import (
    CalibrationProfile,
    FileFormat,
    RawSweep,
    detect_format,
    ingest_into,
    journey_key_id,
    normalize_sweep,
    parse_sweep_file,
    parse_zrf_line,
    zrf_line,
)
from rfrepo.model import DeviceKind, GeoPoint, LwwStamp
from rfrepo.state import NodeRole, ReplicaState
from rfrepo.model import Campaign

from conftest import DATA_DIR, build_record

NO_CAL = CalibrationProfile()


def raw(start_hz=470_000_000, step_hz=100_000, powers=(-90.0,), kind=DeviceKind.RFE,
        serial="DEV-1", ts=1_500_000_000_000, lat=0.0, lon=0.0):
    return RawSweep(kind, serial, ts, GeoPoint(lat, lon), start_hz, step_hz, tuple(powers))


class TestDetectFormat:
    def test_rfe_magic(self):
        assert detect_format(b"#RFE,470000000,100000,80\n") == FileFormat.RFE

    def test_a32_magic(self):
        assert detect_format(b"A32 1500000000000 0.0 0.0") == FileFormat.ASCII32

    def test_rftrack_brace(self):
        assert detect_format(b'  {"t": 1}') == FileFormat.RFTRACK

    def test_zrf_magic(self):
        assert detect_format(b"ZRF1,aabb") == FileFormat.ZRF

    def test_garbage(self):
        with pytest.raises(UnknownFormat):
            detect_format(b"GARBAGE")

    def test_too_short(self):
        with pytest.raises(UnknownFormat):
            detect_format(b"A3")


class TestParseRfe:
    def test_single_sweep(self):
        content = (
            b"#RFE,470000000,100000,3\n"
            b"2017-01-01T00:00:00Z,52.205300,0.119000,-90.0,-60.0,-95.0\n"
        )
        sweeps, errors = parse_sweep_file(FileFormat.RFE, content)
        assert errors == []
        assert len(sweeps) == 1
        s = sweeps[0]
        assert s.powers_dbm == (-90.0, -60.0, -95.0)
        assert s.timestamp_ms == 1483228800000
        assert s.device_serial == "RFE-UNKNOWN"
        assert s.location.lat_deg == pytest.approx(52.2053)

    def test_bin_count_mismatch(self):
        content = b"#RFE,470000000,100000,3\n2017-01-01T00:00:00Z,52.2,0.1,-90.0,-60.0\n"
        sweeps, errors = parse_sweep_file(FileFormat.RFE, content)
        assert sweeps == []
        assert len(errors) == 1
        assert errors[0].line == 2
        assert errors[0].reason == "BinCountMismatch"

    def test_serial_header(self):
        content = b"#RFE,470000000,100000,1\n#SER,MY-DEV\n2017-01-01T00:00:00Z,0.0,0.0,-90.0\n"
        sweeps, _ = parse_sweep_file(FileFormat.RFE, content)
        assert sweeps[0].device_serial == "MY-DEV"

    def test_empty_file(self):
        sweeps, errors = parse_sweep_file(FileFormat.RFE, b"")
        assert sweeps == [] and errors == []

    def test_power_out_of_range_rejected(self):
        content = b"#RFE,470000000,100000,1\n2017-01-01T00:00:00Z,0.0,0.0,12.0\n" \
                  b"2017-01-01T00:00:01Z,0.0,0.0,-200.0\n"
        sweeps, errors = parse_sweep_file(FileFormat.RFE, content)
        assert len(sweeps) == 1
        assert [e.reason for e in errors] == ["PowerOutOfRange"]


class TestParseAscii32:
    def test_valid_line(self):
        powers = " ".join(str(-100 + i) for i in range(32))
        content = f"A32 1500000000123 -1.95 30.06 868000000 18750 {powers}\n".encode()
        sweeps, errors = parse_sweep_file(FileFormat.ASCII32, content)
        assert errors == []
        assert len(sweeps) == 1
        s = sweeps[0]
        assert len(s.powers_dbm) == 32
        assert s.timestamp_ms == 1500000000123  # verbatim milliseconds
        assert s.device_serial == "A32-UNKNOWN"

    def test_token_count(self):
        content = ("A32 1 0.0 0.0 868000000 18750 " + " ".join(["-90"] * 31)).encode()
        sweeps, errors = parse_sweep_file(FileFormat.ASCII32, content)
        assert sweeps == []
        assert errors[0].reason == "TokenCount"


class TestParseRftrack:
    def test_valid_object(self):
        line = (
            '{"t": 1510000000000, "lat": 13.73, "lon": 100.52, "ser": "RFT-7",'
            ' "f0": 606000000, "bw": 8000000, "bins": [-90.0, -60.0]}'
        )
        sweeps, errors = parse_sweep_file(FileFormat.RFTRACK, line.encode())
        assert errors == []
        assert sweeps[0].step_hz == 4_000_000  # bw / len(bins)

    def test_bad_json_and_missing_key(self):
        content = b'{"t": 1\n{"t": 1, "lat": 0, "lon": 0, "ser": "S", "f0": 1, "bins": [1]}\n'
        sweeps, errors = parse_sweep_file(FileFormat.RFTRACK, content)
        assert sweeps == []
        assert [e.reason for e in errors] == ["BadJson", "MissingKey"]

    def test_indivisible_bw(self):
        line = '{"t":1,"lat":0,"lon":0,"ser":"S","f0":606000000,"bw":8000001,"bins":[-90,-60]}'
        _, errors = parse_sweep_file(FileFormat.RFTRACK, line.encode())
        assert errors[0].reason == "BadBinWidth"


class TestNormalize:
    def test_identity_on_canonical_grid(self):
        r = raw(powers=(-90.0, -60.0, -95.0))
        rec = normalize_sweep(r, NO_CAL)
        assert rec.powers_dbm == (-90.0, -60.0, -95.0)
        assert rec.span.low_hz == 470_000_000
        assert rec.span.high_hz == 470_300_000

    def test_additive_offset(self):
        r = raw(powers=(-90.0, -60.0))
        rec = normalize_sweep(r, CalibrationProfile({DeviceKind.RFE: 3.0}))
        assert rec.powers_dbm == (-87.0, -57.0)

    def test_offset_only_applies_to_matching_kind(self):
        r = raw(powers=(-90.0,))
        rec = normalize_sweep(r, CalibrationProfile({DeviceKind.ASCII32: 3.0}))
        assert rec.powers_dbm == (-90.0,)

    def test_wide_source_bin_fans_out(self):
        # single 200 kHz bin centered 470.1 MHz covers both canonical centers
        r = raw(step_hz=200_000, powers=(-60.0,))
        rec = normalize_sweep(r, NO_CAL)
        assert rec.powers_dbm == (-60.0, -60.0)
        assert rec.span.low_hz == 470_000_000
        assert rec.span.high_hz == 470_200_000

    def test_edge_bins_without_center_dropped(self):
        # span [470.08, 470.22) MHz: canonical centers 470.05 out, 470.15 in
        r = raw(start_hz=470_080_000, step_hz=140_000, powers=(-70.0,))
        rec = normalize_sweep(r, NO_CAL)
        assert rec.span.low_hz == 470_100_000
        assert rec.span.high_hz == 470_200_000
        assert rec.powers_dbm == (-70.0,)

    def test_no_overlap(self):
        # [470.06, 470.10) MHz contains no canonical center
        r = raw(start_hz=470_060_000, step_hz=40_000, powers=(-70.0,))
        with pytest.raises(NoOverlap):
            normalize_sweep(r, NO_CAL)

    def test_tie_goes_to_lower_frequency(self):
        # step 150 kHz from 470.0: canonical center 470.15 MHz sits exactly on
        # the raw boundary between bins 0 and 1
        r = raw(step_hz=150_000, powers=(-80.0, -40.0))
        rec = normalize_sweep(r, NO_CAL)
        assert rec.powers_dbm[0] == -80.0  # center 470.05 -> bin 0
        assert rec.powers_dbm[1] == -80.0  # center 470.15 -> tie -> bin 0
        assert rec.powers_dbm[2] == -40.0  # center 470.25 -> bin 1

    def test_calibration_linearity(self):
        r = raw(powers=(-90.0, -61.2, -45.7))
        with_a = normalize_sweep(r, CalibrationProfile({DeviceKind.RFE: 1.5}))
        with_b = normalize_sweep(r, CalibrationProfile({DeviceKind.RFE: 4.0}))
        shifted = tuple(p + (4.0 - 1.5) for p in with_a.powers_dbm)
        assert shifted == pytest.approx(with_b.powers_dbm)

    def test_quantizes_to_one_decimal(self):
        r = raw(powers=(-90.25,))
        rec = normalize_sweep(r, NO_CAL)
        assert rec.powers_dbm == (-90.2,)


class TestZrfRoundTrip:
    def test_line_round_trip(self):
        rec = build_record(powers=[-93.4, -60.1, 0.0], lat=52.2053, lon=0.119, serial="DEV-9")
        parsed = parse_zrf_line(zrf_line(rec))
        assert parsed == rec
        assert parsed.record_id == rec.record_id

    def test_altitude_round_trip(self):
        rec = build_record()
        line = zrf_line(rec)
        assert ",-," in line  # absent altitude

    def test_tampered_line_rejected(self):
        rec = build_record()
        line = zrf_line(rec).replace("-90.0", "-80.0")
        with pytest.raises(ValueError):
            parse_zrf_line(line)


def fresh_state(node="n1"):
    state = ReplicaState(node_id=node, role=NodeRole.REGIONAL)
    state.campaigns["c1"] = Campaign(
        campaign_id="c1", name="test", owner="o", region=None, journeys=set(),
        meta_version=LwwStamp(0, node),
    )
    return state


class TestIngestInto:
    def _ingest(self, state, content, stamp_ms=1):
        return ingest_into(
            state, "c1", content, NO_CAL, "acct", LwwStamp(stamp_ms, state.node_id)
        )

    def test_fresh_file(self):
        state = fresh_state()
        content = (DATA_DIR / "golden.rfe").read_bytes()
        report, new, touched = self._ingest(state, content)
        assert report.accepted == 52
        assert report.duplicates == 0
        assert len(report.errors) == 3
        assert len(new) == 52
        assert touched == [journey_key_id("c1", "RFE-0042")]

    def test_idempotent(self):
        state = fresh_state()
        content = (DATA_DIR / "golden.rfe").read_bytes()
        self._ingest(state, content)
        report, new, touched = self._ingest(state, content, stamp_ms=2)
        assert report.accepted == 0
        assert report.duplicates == 52
        assert new == [] and touched == []
        assert len(state.records) == 52

    def test_journey_grouping_and_order(self):
        state = fresh_state()
        self._ingest(state, (DATA_DIR / "golden.rfe").read_bytes())
        jid = journey_key_id("c1", "RFE-0042")
        journey = state.journeys[jid]
        assert len(journey.record_ids) == 52
        stamps = [state.records[r].timestamp_ms for r in journey.record_ids]
        assert stamps == sorted(stamps)

    def test_unknown_format(self):
        state = fresh_state()
        with pytest.raises(UnknownFormat):
            self._ingest(state, b"GARBAGE CONTENT")

    def test_zrf_reingest_bypasses_calibration(self):
        state = fresh_state()
        rec = build_record(powers=[-90.0])
        line = zrf_line(rec) + "\n"
        report, _, _ = ingest_into(
            state, "c1", line.encode(),
            CalibrationProfile({DeviceKind.RFE: 5.0}), "acct", LwwStamp(1, "n1"),
        )
        assert report.accepted == 1
        assert state.records[rec.record_id].powers_dbm == (-90.0,)
