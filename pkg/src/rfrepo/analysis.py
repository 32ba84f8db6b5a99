"""Occupancy computation, white-space reporting, and journey editing.

All operations are pure. Power aggregation across records happens in the
linear milliwatt domain (dB averaging underestimates energy); the per-channel
statistic of a single sweep is max-over-bins so narrowband carriers are not
diluted across the 80 bins of an 8 MHz channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyJourney, EmptySamples, InvalidBBox, InvalidWindow
from .model import (
    ChannelPlan,
    GeoPoint,
    SweepRecord,
    channel_span,
    make_record,
    quant_deg,
    validate_ring,
)

EARTH_RADIUS_M = 6_371_000.0

DEFAULT_THRESHOLD_DBM = -85.0
DEFAULT_MAX_DUTY = 0.1
DEFAULT_MIN_SAMPLES = 10


class ChannelStatus(str, Enum):
    FREE = "FREE"
    OCCUPIED = "OCCUPIED"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class OccupancyCell:
    cell_x: int
    cell_y: int
    channel: int
    duty_cycle: float
    sample_count: int


@dataclass(frozen=True)
class ChannelReportEntry:
    channel: int
    duty_cycle: float
    sample_count: int
    status: ChannelStatus


@dataclass(frozen=True)
class WhiteSpaceReport:
    region: str
    plan: str
    threshold_dbm: float
    max_duty: float
    min_samples: int
    entries: tuple[ChannelReportEntry, ...]


@dataclass(frozen=True)
class BBox:
    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float

    def __post_init__(self):
        if self.min_lat >= self.max_lat or self.min_lon >= self.max_lon:
            raise InvalidBBox(f"degenerate bbox: {self}")

    def contains(self, p: GeoPoint) -> bool:
        # half-open on the top/right edge, like everything else here
        return self.min_lat <= p.lat_deg < self.max_lat and self.min_lon <= p.lon_deg < self.max_lon


# ---------------------------------------------------------------------------
# geometry

def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance on a 6371 km sphere."""
    lat1, lon1 = math.radians(a.lat_deg), math.radians(a.lon_deg)
    lat2, lon2 = math.radians(b.lat_deg), math.radians(b.lon_deg)
    s = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


def _on_segment(px, py, ax, ay, bx, by) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if cross != 0.0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def point_in_ring(p: GeoPoint, ring) -> bool:
    """Even-odd rule; points exactly on an edge or vertex count as inside."""
    verts = [(v.lon_deg, v.lat_deg) for v in ring]
    px, py = p.lon_deg, p.lat_deg
    for (ax, ay), (bx, by) in zip(verts, verts[1:]):
        if _on_segment(px, py, ax, ay, bx, by):
            return True
    inside = False
    for (ax, ay), (bx, by) in zip(verts, verts[1:]):
        if (ay > py) != (by > py):
            x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < x_cross:
                inside = not inside
    return inside


# ---------------------------------------------------------------------------
# journey edits

def trim_time(records: list[SweepRecord], t0_ms: int, t1_ms: int) -> list[SweepRecord]:
    """Keep records with timestamp in the half-open window [t0, t1)."""
    if t0_ms >= t1_ms:
        raise InvalidWindow(f"[{t0_ms}, {t1_ms})")
    return [r for r in records if t0_ms <= r.timestamp_ms < t1_ms]


def clip_to_polygon(records: list[SweepRecord], ring) -> list[SweepRecord]:
    verts = validate_ring(ring)
    return [r for r in records if point_in_ring(r.location, verts)]


def _mw_mean_dbm(values) -> float:
    mw = sum(10.0 ** (v / 10.0) for v in values) / len(values)
    return 10.0 * math.log10(mw)


def _collapse_run(run: list[SweepRecord]) -> SweepRecord:
    if len(run) == 1:
        return run[0]
    first = run[0]
    lat = quant_deg(sum(r.location.lat_deg for r in run) / len(run))
    lon = quant_deg(sum(r.location.lon_deg for r in run) / len(run))
    alts = [r.location.alt_m for r in run]
    alt = sum(alts) / len(alts) if all(a is not None for a in alts) else None
    powers = [
        _mw_mean_dbm([r.powers_dbm[i] for r in run]) for i in range(len(first.powers_dbm))
    ]
    return make_record(
        first.device_kind,
        first.device_serial,
        first.timestamp_ms,
        GeoPoint(lat, lon, alt),
        first.span,
        first.bin_width_hz,
        powers,
        derived=True,
    )


def resample_by_distance(records: list[SweepRecord], step_m: float) -> list[SweepRecord]:
    """Collapse every maximal run of consecutive records whose cumulative
    in-run distance stays below step_m into one derived record (mean location,
    first timestamp, per-bin linear-domain mean). Runs also break when the
    device grid changes, so per-bin aggregation stays well defined."""
    if not records:
        raise EmptyJourney("cannot resample an empty journey")
    if step_m <= 0:
        raise ValueError(f"step_m must be positive, got {step_m}")
    out: list[SweepRecord] = []
    run: list[SweepRecord] = [records[0]]
    run_dist = 0.0
    for rec in records[1:]:
        hop = haversine_m(run[-1].location, rec.location)
        same_grid = rec.span == run[0].span and rec.bin_width_hz == run[0].bin_width_hz
        if run_dist + hop >= step_m or not same_grid:
            out.append(_collapse_run(run))
            run = [rec]
            run_dist = 0.0
        else:
            run.append(rec)
            run_dist += hop
    out.append(_collapse_run(run))
    return out


# ---------------------------------------------------------------------------
# occupancy statistics

def channel_power(record: SweepRecord, plan: ChannelPlan) -> dict[int, float]:
    """Max dBm per channel over bins whose centers fall inside the channel;
    channels covering no bin are absent."""
    powers: dict[int, float] = {}
    for i, p in enumerate(record.powers_dbm):
        center = record.bin_center_hz(i)
        if not plan.base_hz <= center < plan.end_hz:
            continue
        ch = plan.first_index + (center - plan.base_hz) // plan.channel_width_hz
        if ch not in powers or p > powers[ch]:
            powers[ch] = p
    return powers


def duty_cycle(channel_samples: list[float], threshold_dbm: float) -> float:
    """Fraction of samples at or above the threshold."""
    if not channel_samples:
        raise EmptySamples("duty cycle of zero samples is undefined")
    occupied = sum(1 for s in channel_samples if s >= threshold_dbm)
    return occupied / len(channel_samples)


def occupancy_grid(
    records,
    bbox: BBox,
    cell_deg: float,
    plan: ChannelPlan,
    threshold_dbm: float,
) -> list[OccupancyCell]:
    if cell_deg <= 0:
        raise InvalidBBox(f"cell_deg must be positive, got {cell_deg}")
    samples: dict[tuple[int, int, int], list[float]] = {}
    for rec in records:
        if not bbox.contains(rec.location):
            continue
        cx = math.floor((rec.location.lon_deg - bbox.min_lon) / cell_deg)
        cy = math.floor((rec.location.lat_deg - bbox.min_lat) / cell_deg)
        for ch, power in channel_power(rec, plan).items():
            samples.setdefault((cx, cy, ch), []).append(power)
    cells = [
        OccupancyCell(cx, cy, ch, duty_cycle(vals, threshold_dbm), len(vals))
        for (cx, cy, ch), vals in samples.items()
    ]
    cells.sort(key=lambda c: (c.cell_x, c.cell_y, c.channel))
    return cells


def _region_samples(records, region, plan: ChannelPlan) -> dict[int, list[float]]:
    if isinstance(region, BBox):
        keep = region.contains
    else:
        verts = validate_ring(region)
        keep = lambda p: point_in_ring(p, verts)  # noqa: E731
    samples: dict[int, list[float]] = {}
    for rec in records:
        if not keep(rec.location):
            continue
        for ch, power in channel_power(rec, plan).items():
            samples.setdefault(ch, []).append(power)
    return samples


def white_space_report(
    records,
    region,
    plan: ChannelPlan,
    threshold_dbm: float = DEFAULT_THRESHOLD_DBM,
    max_duty: float = DEFAULT_MAX_DUTY,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> WhiteSpaceReport:
    """Region-level FREE/OCCUPIED/UNKNOWN classification listing every channel
    in the plan. Unsampled channels are UNKNOWN, never FREE."""
    if not 0.0 <= max_duty <= 1.0:
        raise ValueError(f"max_duty must be in [0, 1], got {max_duty}")
    samples = _region_samples(records, region, plan)
    entries = []
    for ch in plan.indices():
        vals = samples.get(ch, [])
        if len(vals) < min_samples:
            status = ChannelStatus.UNKNOWN
            duty = duty_cycle(vals, threshold_dbm) if vals else 0.0
        else:
            duty = duty_cycle(vals, threshold_dbm)
            status = ChannelStatus.FREE if duty <= max_duty else ChannelStatus.OCCUPIED
        entries.append(ChannelReportEntry(ch, duty, len(vals), status))
    region_desc = "bbox" if isinstance(region, BBox) else "polygon"
    return WhiteSpaceReport(
        region=region_desc,
        plan=plan.name,
        threshold_dbm=threshold_dbm,
        max_duty=max_duty,
        min_samples=min_samples,
        entries=tuple(entries),
    )


def threshold_sweep(records, region, plan: ChannelPlan, thresholds: list[float]):
    """Duty per channel for each threshold of a strictly ascending list;
    within a channel duty is non-increasing across the list."""
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly ascending")
    samples = _region_samples(records, region, plan)
    curves = []
    for thr in thresholds:
        per_channel = {
            ch: (duty_cycle(vals, thr), len(vals)) for ch, vals in samples.items() if vals
        }
        curves.append((thr, per_channel))
    return curves


# ---------------------------------------------------------------------------
# exports

def report_table(report: WhiteSpaceReport, plan: ChannelPlan) -> str:
    lines = ["channel,low_hz,high_hz,duty,samples,status"]
    for e in report.entries:
        span = channel_span(e.channel, plan)
        lines.append(
            f"{e.channel},{span.low_hz},{span.high_hz},{e.duty_cycle:.6f},{e.sample_count},{e.status.value}"
        )
    return "\n".join(lines) + "\n"


def grid_geojson(cells: list[OccupancyCell], bbox: BBox, cell_deg: float) -> dict:
    """One Polygon feature per occupancy cell (lon/lat rings)."""
    features = []
    for c in cells:
        lon0 = bbox.min_lon + c.cell_x * cell_deg
        lat0 = bbox.min_lat + c.cell_y * cell_deg
        ring = [
            [lon0, lat0],
            [lon0 + cell_deg, lat0],
            [lon0 + cell_deg, lat0 + cell_deg],
            [lon0, lat0 + cell_deg],
            [lon0, lat0],
        ]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {
                    "channel": c.channel,
                    "duty_cycle": c.duty_cycle,
                    "sample_count": c.sample_count,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def ring_geojson_coords(ring) -> list[list[float]]:
    return [[p.lon_deg, p.lat_deg] for p in ring]
