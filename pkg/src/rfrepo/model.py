"""Canonical domain types, content addressing, and channel-plan arithmetic.

Everything here is an immutable value; operations are pure functions. The
canonical text forms (used for record hashing, the ZRF file format, and the
sync wire payloads) live here so every module renders numbers identically:
integers in plain decimal, dBm with exactly 1 fractional digit, degrees with
exactly 6, comma field separators, no whitespace.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidPolygon, NotInPlan

CANONICAL_BIN_HZ = 100_000

POWER_MIN_DBM = -150.0
POWER_MAX_DBM = 30.0


class DeviceKind(str, Enum):
    RFE = "RFE"
    ASCII32 = "ASCII32"
    RFTRACK = "RFTRACK"


# ---------------------------------------------------------------------------
# canonical number rendering

def fmt_dbm(v: float) -> str:
    s = f"{v:.1f}"
    return "0.0" if s == "-0.0" else s


def fmt_deg(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def fmt_alt(v: float | None) -> str:
    if v is None:
        return "-"
    s = f"{v:.1f}"
    return "0.0" if s == "-0.0" else s


def quant_dbm(v: float) -> float:
    """Quantize to the canonical 1-decimal grid (the stored value IS the
    canonical value, so text round-trips are exact)."""
    f = float(f"{v:.1f}")
    return 0.0 if f == 0.0 else f


def quant_deg(v: float) -> float:
    f = float(f"{v:.6f}")
    return 0.0 if f == 0.0 else f


def quant_alt(v: float | None) -> float | None:
    if v is None:
        return None
    f = float(f"{v:.1f}")
    return 0.0 if f == 0.0 else f


# ---------------------------------------------------------------------------
# core value types

@dataclass(frozen=True, order=True)
class LwwStamp:
    """Last-writer-wins stamp; totally ordered by (wall_ms, node_id)."""

    wall_ms: int
    node_id: str

    def text(self) -> str:
        return f"{self.wall_ms},{self.node_id}"


@dataclass(frozen=True)
class FrequencySpan:
    """Half-open interval [low_hz, high_hz)."""

    low_hz: int
    high_hz: int

    def __post_init__(self):
        if self.low_hz <= 0 or self.high_hz <= 0:
            raise ValueError(f"frequency bounds must be positive: {self}")
        if self.low_hz >= self.high_hz:
            raise ValueError(f"empty frequency span: {self}")

    def width_hz(self) -> int:
        return self.high_hz - self.low_hz

    def contains(self, freq_hz: int) -> bool:
        return self.low_hz <= freq_hz < self.high_hz

    def overlaps(self, other: "FrequencySpan") -> bool:
        return self.low_hz < other.high_hz and other.low_hz < self.high_hz


@dataclass(frozen=True)
class GeoPoint:
    lat_deg: float
    lon_deg: float
    alt_m: float | None = None

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat_deg}")
        if not -180.0 <= self.lon_deg < 180.0:
            raise ValueError(f"longitude out of range: {self.lon_deg}")


@dataclass(frozen=True)
class SweepRecord:
    """One geo-tagged, time-stamped power spectrum on the canonical bin grid.

    Content-addressed and immutable; ``record_id`` is the SHA-256 of the
    canonical serialization of the remaining fields. ``derived`` marks records
    produced by journey edits and takes no part in identity or equality.
    """

    record_id: bytes
    device_kind: DeviceKind
    device_serial: str
    timestamp_ms: int
    location: GeoPoint
    span: FrequencySpan
    bin_width_hz: int
    powers_dbm: tuple[float, ...]
    derived: bool = field(default=False, compare=False)

    def bin_center_hz(self, i: int) -> int:
        return self.span.low_hz + i * self.bin_width_hz + self.bin_width_hz // 2

    @property
    def hex_id(self) -> str:
        return self.record_id.hex()


SERIAL_ALLOWED = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._:-")


def valid_serial(serial: str) -> bool:
    return bool(serial) and all(c in SERIAL_ALLOWED for c in serial)


def canonical_record_text(
    device_kind: DeviceKind,
    device_serial: str,
    timestamp_ms: int,
    location: GeoPoint,
    span: FrequencySpan,
    bin_width_hz: int,
    powers_dbm: tuple[float, ...],
) -> str:
    powers = ";".join(fmt_dbm(p) for p in powers_dbm)
    return ",".join(
        (
            device_kind.value,
            device_serial,
            str(timestamp_ms),
            fmt_deg(location.lat_deg),
            fmt_deg(location.lon_deg),
            fmt_alt(location.alt_m),
            str(span.low_hz),
            str(span.high_hz),
            str(bin_width_hz),
            powers,
        )
    )


def compute_record_id(
    device_kind: DeviceKind,
    device_serial: str,
    timestamp_ms: int,
    location: GeoPoint,
    span: FrequencySpan,
    bin_width_hz: int,
    powers_dbm: tuple[float, ...],
) -> bytes:
    text = canonical_record_text(
        device_kind, device_serial, timestamp_ms, location, span, bin_width_hz, powers_dbm
    )
    return hashlib.sha256(text.encode("utf-8")).digest()


def make_record(
    device_kind: DeviceKind,
    device_serial: str,
    timestamp_ms: int,
    location: GeoPoint,
    span: FrequencySpan,
    bin_width_hz: int,
    powers_dbm,
    derived: bool = False,
) -> SweepRecord:
    """Quantize fields to the canonical grid, validate, and compute the id."""
    if not valid_serial(device_serial):
        raise ValueError(f"invalid device serial: {device_serial!r}")
    loc = GeoPoint(quant_deg(location.lat_deg), quant_deg(location.lon_deg), quant_alt(location.alt_m))
    powers = tuple(quant_dbm(p) for p in powers_dbm)
    _validate_record_shape(span, bin_width_hz, powers)
    rid = compute_record_id(device_kind, device_serial, timestamp_ms, loc, span, bin_width_hz, powers)
    return SweepRecord(
        record_id=rid,
        device_kind=device_kind,
        device_serial=device_serial,
        timestamp_ms=timestamp_ms,
        location=loc,
        span=span,
        bin_width_hz=bin_width_hz,
        powers_dbm=powers,
        derived=derived,
    )


def _validate_record_shape(span: FrequencySpan, bin_width_hz: int, powers: tuple[float, ...]):
    if bin_width_hz != CANONICAL_BIN_HZ:
        raise ValueError(f"bin width {bin_width_hz} is not the canonical {CANONICAL_BIN_HZ} Hz")
    if span.low_hz % CANONICAL_BIN_HZ or span.high_hz % CANONICAL_BIN_HZ:
        raise ValueError(f"span {span} not aligned to the canonical grid")
    if span.width_hz() // bin_width_hz != len(powers) or span.width_hz() % bin_width_hz:
        raise ValueError(
            f"bin count mismatch: span holds {span.width_hz() // bin_width_hz} bins, got {len(powers)}"
        )
    for p in powers:
        if not POWER_MIN_DBM <= p <= POWER_MAX_DBM:
            raise ValueError(f"power {p} dBm outside [{POWER_MIN_DBM}, {POWER_MAX_DBM}]")


def verify_record(rec: SweepRecord) -> None:
    """Check the content-address invariant; raises ValueError on mismatch."""
    _validate_record_shape(rec.span, rec.bin_width_hz, rec.powers_dbm)
    expect = compute_record_id(
        rec.device_kind,
        rec.device_serial,
        rec.timestamp_ms,
        rec.location,
        rec.span,
        rec.bin_width_hz,
        rec.powers_dbm,
    )
    if expect != rec.record_id:
        raise ValueError(f"record id mismatch for {rec.record_id.hex()[:12]}")


# ---------------------------------------------------------------------------
# channel plans

@dataclass(frozen=True)
class ChannelPlan:
    """Uniform channelization: channel i covers
    [base + (i-first)*width, base + (i-first+1)*width) for i in [first, first+count)."""

    name: str
    base_hz: int
    channel_width_hz: int
    first_index: int
    count: int

    def __post_init__(self):
        if self.base_hz <= 0 or self.channel_width_hz <= 0 or self.count <= 0:
            raise ValueError(f"invalid channel plan: {self}")

    @property
    def end_hz(self) -> int:
        return self.base_hz + self.count * self.channel_width_hz

    def indices(self) -> range:
        return range(self.first_index, self.first_index + self.count)


def channel_of(freq_hz: int, plan: ChannelPlan) -> int:
    if not plan.base_hz <= freq_hz < plan.end_hz:
        raise NotInPlan(f"{freq_hz} Hz outside plan {plan.name}")
    return plan.first_index + (freq_hz - plan.base_hz) // plan.channel_width_hz


def channel_span(index: int, plan: ChannelPlan) -> FrequencySpan:
    if index not in plan.indices():
        raise NotInPlan(f"channel {index} outside plan {plan.name}")
    low = plan.base_hz + (index - plan.first_index) * plan.channel_width_hz
    return FrequencySpan(low, low + plan.channel_width_hz)


BUILTIN_PLANS = {
    "UHF-8MHz": ChannelPlan("UHF-8MHz", 470_000_000, 8_000_000, 21, 40),
    "ISM-868": ChannelPlan("ISM-868", 868_000_000, 100_000, 0, 6),
}


# ---------------------------------------------------------------------------
# organizational units

@dataclass
class Journey:
    """Time-ordered list of records from one collector run of one device.

    Order is (timestamp_ms, record_id): near-duplicate sweeps may legitimately
    share a timestamp, so the id breaks the tie deterministically.
    """

    journey_id: str
    campaign_id: str
    collector: str
    device_serial: str
    derived: bool = False
    ops: tuple[str, ...] = ()
    record_ids: list[bytes] = field(default_factory=list)

    def merge_ids(self, other_ids, timestamp_of) -> None:
        mine = set(self.record_ids)
        combined = list(self.record_ids) + [r for r in other_ids if r not in mine]
        combined.sort(key=lambda rid: (timestamp_of(rid), rid))
        self.record_ids = combined


@dataclass
class Campaign:
    campaign_id: str
    name: str
    owner: str
    region: tuple[GeoPoint, ...] | None
    journeys: set[str]
    meta_version: LwwStamp

    def __post_init__(self):
        if self.region is not None:
            validate_ring(self.region)


def validate_ring(ring) -> tuple[GeoPoint, ...]:
    """A closed ring: first point repeated last, at least 3 distinct vertices."""
    pts = tuple(ring)
    if len(pts) < 4:
        raise InvalidPolygon(f"ring needs >= 3 vertices plus the closing point, got {len(pts)}")
    first, last = pts[0], pts[-1]
    if (first.lat_deg, first.lon_deg) != (last.lat_deg, last.lon_deg):
        raise InvalidPolygon("ring is not explicitly closed (first != last)")
    return pts


def ring_text(ring) -> str:
    return ";".join(f"{fmt_deg(p.lat_deg)}:{fmt_deg(p.lon_deg)}" for p in ring)


def parse_ring(text: str) -> tuple[GeoPoint, ...]:
    pts = []
    for part in text.split(";"):
        lat_s, _, lon_s = part.partition(":")
        if not lon_s:
            raise InvalidPolygon(f"bad ring vertex: {part!r}")
        pts.append(GeoPoint(float(lat_s), float(lon_s)))
    return validate_ring(pts)
