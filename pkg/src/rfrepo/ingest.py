"""Device file parsing and normalization onto the canonical 100 kHz grid.

Four line-oriented formats are accepted: the three device formats (RFE,
ASCII32, RFTRACK) plus ZRF, the repository's own canonical export, which
re-ingests bit-exactly. A malformed line never aborts a file; it becomes a
structured LineError and parsing continues.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .errors import NoOverlap, UnknownFormat
from .model import (
    CANONICAL_BIN_HZ,
    POWER_MAX_DBM,
    POWER_MIN_DBM,
    DeviceKind,
    FrequencySpan,
    GeoPoint,
    Journey,
    LwwStamp,
    SweepRecord,
    fmt_alt,
    fmt_dbm,
    fmt_deg,
    make_record,
    valid_serial,
)
from .state import ReplicaState


class FileFormat(str, Enum):
    RFE = "RFE"
    ASCII32 = "ASCII32"
    RFTRACK = "RFTRACK"
    ZRF = "ZRF"


@dataclass(frozen=True)
class RawSweep:
    """A sweep on the device's native grid, before normalization."""

    device_kind: DeviceKind
    device_serial: str
    timestamp_ms: int
    location: GeoPoint
    start_hz: int
    step_hz: int
    powers_dbm: tuple[float, ...]
    source_line: int = 0

    def __post_init__(self):
        if self.step_hz <= 0:
            raise ValueError(f"step must be positive, got {self.step_hz}")
        if not self.powers_dbm:
            raise ValueError("raw sweep has no power bins")

    @property
    def end_hz(self) -> int:
        return self.start_hz + len(self.powers_dbm) * self.step_hz


@dataclass(frozen=True)
class CalibrationProfile:
    """Additive per-device-kind dB correction; defaults to zero everywhere."""

    offsets_db: dict = field(default_factory=dict)

    def __post_init__(self):
        for kind, off in self.offsets_db.items():
            if not -30.0 <= off <= 30.0:
                raise ValueError(f"calibration offset for {kind} out of [-30, 30]: {off}")

    def offset_for(self, kind: DeviceKind) -> float:
        return self.offsets_db.get(kind, 0.0)


@dataclass(frozen=True)
class LineError:
    line: int
    reason: str
    detail: str = ""


@dataclass
class IngestReport:
    accepted: int = 0
    duplicates: int = 0
    errors: list[LineError] = field(default_factory=list)


# ---------------------------------------------------------------------------
# format detection

def detect_format(first_bytes: bytes) -> FileFormat:
    if len(first_bytes) < 4:
        raise UnknownFormat("file too short to identify")
    if first_bytes.startswith(b"#RFE"):
        return FileFormat.RFE
    if first_bytes.startswith(b"ZRF1"):
        return FileFormat.ZRF
    stripped = first_bytes.lstrip()
    if stripped.split(None, 1) and stripped.split(None, 1)[0] == b"A32":
        return FileFormat.ASCII32
    if stripped[:1] == b"{":
        return FileFormat.RFTRACK
    raise UnknownFormat("unsupported upload content")


# ---------------------------------------------------------------------------
# per-format parsers

def _parse_iso_utc_ms(text: str) -> int:
    t = text
    if t.endswith("Z") or t.endswith("z"):
        t = t[:-1] + "+00:00"
    dt = datetime.fromisoformat(t)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)


def _check_powers(powers, lineno: int) -> LineError | None:
    for p in powers:
        if not POWER_MIN_DBM <= p <= POWER_MAX_DBM:
            return LineError(lineno, "PowerOutOfRange", f"{p} dBm")
    return None


def _parse_rfe(content: str):
    sweeps: list[RawSweep] = []
    errors: list[LineError] = []
    serial = "RFE-UNKNOWN"
    grid: tuple[int, int, int] | None = None  # (start_hz, step_hz, nbins)
    for lineno, line in enumerate(content.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#RFE"):
            parts = line.split(",")
            try:
                grid = (int(parts[1]), int(parts[2]), int(parts[3]))
                if grid[1] <= 0 or grid[2] <= 0:
                    raise ValueError
            except (IndexError, ValueError):
                errors.append(LineError(lineno, "BadHeader", line))
                grid = None
            continue
        if line.startswith("#SER"):
            _, _, ser = line.partition(",")
            if valid_serial(ser):
                serial = ser
            else:
                errors.append(LineError(lineno, "BadSerial", ser))
            continue
        if line.startswith("#"):
            continue
        if grid is None:
            errors.append(LineError(lineno, "NoHeader", "data line before #RFE header"))
            continue
        parts = line.split(",")
        if len(parts) != 3 + grid[2]:
            errors.append(LineError(lineno, "BinCountMismatch", f"expected {grid[2]} powers"))
            continue
        try:
            ts = _parse_iso_utc_ms(parts[0])
        except ValueError:
            errors.append(LineError(lineno, "BadTimestamp", parts[0]))
            continue
        try:
            loc = GeoPoint(float(parts[1]), float(parts[2]))
            powers = tuple(float(p) for p in parts[3:])
        except ValueError as exc:
            errors.append(LineError(lineno, "BadNumber", str(exc)))
            continue
        bad = _check_powers(powers, lineno)
        if bad:
            errors.append(bad)
            continue
        sweeps.append(
            RawSweep(DeviceKind.RFE, serial, ts, loc, grid[0], grid[1], powers, lineno)
        )
    return sweeps, errors


_A32_TOKENS = 6 + 32


def _parse_ascii32(content: str):
    sweeps: list[RawSweep] = []
    errors: list[LineError] = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] != "A32":
            errors.append(LineError(lineno, "BadLine", "missing A32 tag"))
            continue
        if len(tokens) != _A32_TOKENS:
            errors.append(LineError(lineno, "TokenCount", f"expected {_A32_TOKENS}, got {len(tokens)}"))
            continue
        try:
            ts = int(tokens[1])
            loc = GeoPoint(float(tokens[2]), float(tokens[3]))
            start = int(tokens[4])
            step = int(tokens[5])
            powers = tuple(float(int(t)) for t in tokens[6:])
            if step <= 0:
                raise ValueError("step must be positive")
        except ValueError as exc:
            errors.append(LineError(lineno, "BadNumber", str(exc)))
            continue
        bad = _check_powers(powers, lineno)
        if bad:
            errors.append(bad)
            continue
        sweeps.append(RawSweep(DeviceKind.ASCII32, "A32-UNKNOWN", ts, loc, start, step, powers, lineno))
    return sweeps, errors


_RFTRACK_KEYS = ("t", "lat", "lon", "ser", "f0", "bw", "bins")


def _parse_rftrack(content: str):
    sweeps: list[RawSweep] = []
    errors: list[LineError] = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            errors.append(LineError(lineno, "BadJson", line[:40]))
            continue
        missing = [k for k in _RFTRACK_KEYS if k not in obj]
        if missing:
            errors.append(LineError(lineno, "MissingKey", ",".join(missing)))
            continue
        try:
            bins = tuple(float(b) for b in obj["bins"])
            if not bins:
                raise ValueError("empty bins")
            f0 = int(obj["f0"])
            bw = int(obj["bw"])
            if bw <= 0 or bw % len(bins):
                errors.append(LineError(lineno, "BadBinWidth", f"bw {bw} not divisible by {len(bins)} bins"))
                continue
            ser = str(obj["ser"])
            if not valid_serial(ser):
                errors.append(LineError(lineno, "BadSerial", ser))
                continue
            loc = GeoPoint(float(obj["lat"]), float(obj["lon"]))
            ts = int(obj["t"])
        except (ValueError, TypeError) as exc:
            errors.append(LineError(lineno, "BadNumber", str(exc)))
            continue
        bad = _check_powers(bins, lineno)
        if bad:
            errors.append(bad)
            continue
        sweeps.append(RawSweep(DeviceKind.RFTRACK, ser, ts, loc, f0, bw // len(bins), bins, lineno))
    return sweeps, errors


def parse_sweep_file(kind: FileFormat, content: bytes):
    """Parse every well-formed sweep plus a LineError per malformed line."""
    text = content.decode("utf-8", errors="replace")
    if kind == FileFormat.RFE:
        return _parse_rfe(text)
    if kind == FileFormat.ASCII32:
        return _parse_ascii32(text)
    if kind == FileFormat.RFTRACK:
        return _parse_rftrack(text)
    raise UnknownFormat(f"no raw-sweep parser for {kind}")


# ---------------------------------------------------------------------------
# ZRF canonical lines

def zrf_line(rec: SweepRecord) -> str:
    powers = ";".join(fmt_dbm(p) for p in rec.powers_dbm)
    return ",".join(
        (
            "ZRF1",
            rec.record_id.hex(),
            rec.device_kind.value,
            rec.device_serial,
            str(rec.timestamp_ms),
            fmt_deg(rec.location.lat_deg),
            fmt_deg(rec.location.lon_deg),
            fmt_alt(rec.location.alt_m),
            str(rec.span.low_hz),
            str(rec.span.high_hz),
            str(rec.bin_width_hz),
            powers,
        )
    )


def parse_zrf_line(line: str) -> SweepRecord:
    parts = line.strip().split(",")
    if len(parts) != 12 or parts[0] != "ZRF1":
        raise ValueError(f"malformed ZRF line: {line[:40]!r}")
    (_, rid_hex, kind, serial, ts, lat, lon, alt, low, high, width, powers) = parts
    loc = GeoPoint(float(lat), float(lon), None if alt == "-" else float(alt))
    span = FrequencySpan(int(low), int(high))
    power_vals = tuple(float(p) for p in powers.split(";"))
    rec = make_record(DeviceKind(kind), serial, int(ts), loc, span, int(width), power_vals)
    if rec.record_id != bytes.fromhex(rid_hex):
        raise ValueError(f"record id mismatch on load: {rid_hex[:12]}")
    return rec


def parse_zrf(content: str):
    records: list[SweepRecord] = []
    errors: list[LineError] = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(parse_zrf_line(line))
        except ValueError as exc:
            errors.append(LineError(lineno, "BadRecord", str(exc)))
    return records, errors


# ---------------------------------------------------------------------------
# normalization

def normalize_sweep(raw: RawSweep, calibration: CalibrationProfile) -> SweepRecord:
    """Resample onto the canonical grid: each canonical bin takes the raw bin
    whose center is nearest the canonical bin center (ties to the lower
    frequency), plus the per-device-kind calibration offset. Canonical bins
    whose centers fall outside the raw span are dropped."""
    offset = calibration.offset_for(raw.device_kind)
    raw_low, raw_high = raw.start_hz, raw.end_hz
    grid_low = (raw_low // CANONICAL_BIN_HZ) * CANONICAL_BIN_HZ
    grid_high = -(-raw_high // CANONICAL_BIN_HZ) * CANONICAL_BIN_HZ

    powers: list[float] = []
    out_low = None
    for bin_low in range(grid_low, grid_high, CANONICAL_BIN_HZ):
        center = bin_low + CANONICAL_BIN_HZ // 2
        if center < raw_low or center >= raw_high:
            continue
        off_hz = center - raw_low
        i = off_hz // raw.step_hz
        if off_hz > 0 and off_hz % raw.step_hz == 0:
            i -= 1  # equidistant between two raw centers: lower frequency wins
        powers.append(raw.powers_dbm[i] + offset)
        if out_low is None:
            out_low = bin_low
    if out_low is None:
        raise NoOverlap(f"raw span [{raw_low}, {raw_high}) contains no canonical bin center")

    span = FrequencySpan(out_low, out_low + len(powers) * CANONICAL_BIN_HZ)
    return make_record(
        raw.device_kind,
        raw.device_serial,
        raw.timestamp_ms,
        raw.location,
        span,
        CANONICAL_BIN_HZ,
        powers,
    )


# ---------------------------------------------------------------------------
# store-level ingestion

def journey_key_id(campaign_id: str, device_serial: str) -> str:
    """Deterministic journey id per (campaign, device): ingesting the same
    device's files on two nodes extends one shared journey after sync."""
    return str(uuid.uuid5(uuid.NAMESPACE_URL, f"rfrepo:journey:{campaign_id}:{device_serial}"))


def ingest_into(
    replica: ReplicaState,
    campaign_id: str,
    content: bytes,
    calibration: CalibrationProfile,
    collector: str,
    stamp: LwwStamp,
) -> tuple[IngestReport, list[SweepRecord], list[str]]:
    """Parse, normalize, deduplicate and append; returns the report, the newly
    added records, and the ids of journeys whose membership changed (both for
    the caller's persistence log). The campaign stamp is bumped only when
    something actually changed, so re-ingesting a file is a state-level no-op."""
    camp = replica.campaigns[campaign_id]
    kind = detect_format(content[:64])

    report = IngestReport()
    new_records: list[SweepRecord] = []
    if kind == FileFormat.ZRF:
        records, errors = parse_zrf(content.decode("utf-8", errors="replace"))
        report.errors.extend(errors)
    else:
        raws, errors = parse_sweep_file(kind, content)
        report.errors.extend(errors)
        records = []
        for raw in raws:
            try:
                records.append(normalize_sweep(raw, calibration))
            except (NoOverlap, ValueError) as exc:
                report.errors.append(LineError(raw.source_line, "NormalizeFailed", str(exc)))

    touched: list[str] = []
    for rec in records:
        if replica.add_record(rec):
            report.accepted += 1
            new_records.append(rec)
        else:
            report.duplicates += 1
        jid = journey_key_id(campaign_id, rec.device_serial)
        journey = replica.journeys.get(jid)
        if journey is None:
            journey = Journey(
                journey_id=jid,
                campaign_id=campaign_id,
                collector=collector,
                device_serial=rec.device_serial,
            )
            replica.journeys[jid] = journey
            camp.journeys.add(jid)
            if jid not in touched:
                touched.append(jid)
        if rec.record_id not in journey.record_ids:
            journey.merge_ids([rec.record_id], replica.timestamp_of)
            if jid not in touched:
                touched.append(jid)
    if touched:
        camp.meta_version = stamp
    return report, new_records, touched
