"""Brute-force reference implementations the real code is checked against.

These deliberately avoid the production code paths: channel powers come from
scanning every bin against every channel span, grids from per-record loops
with no shared bucketing, and run segmentation from re-summed prefix
distances.
"""

import math

from rfrepo.analysis import haversine_m
from rfrepo.model import channel_span


def oracle_channel_samples(rec, plan):
    """Per-channel max power by scanning all bins for each channel."""
    per = {}
    for ch in plan.indices():
        span = channel_span(ch, plan)
        best = None
        for i in range(len(rec.powers_dbm)):
            center = rec.span.low_hz + i * rec.bin_width_hz + rec.bin_width_hz // 2
            if span.low_hz <= center < span.high_hz:
                p = rec.powers_dbm[i]
                if best is None or p > best:
                    best = p
        if best is not None:
            per[ch] = best
    return per


def oracle_occupancy(records, bbox, cell_deg, plan, threshold_dbm):
    """(cell_x, cell_y, channel) -> (duty, samples) by nested loops."""
    counts = {}
    for rec in records:
        p = rec.location
        in_box = (
            bbox.min_lat <= p.lat_deg < bbox.max_lat
            and bbox.min_lon <= p.lon_deg < bbox.max_lon
        )
        if not in_box:
            continue
        cx = math.floor((p.lon_deg - bbox.min_lon) / cell_deg)
        cy = math.floor((p.lat_deg - bbox.min_lat) / cell_deg)
        for ch, power in oracle_channel_samples(rec, plan).items():
            occ, n = counts.get((cx, cy, ch), (0, 0))
            counts[(cx, cy, ch)] = (occ + (1 if power >= threshold_dbm else 0), n + 1)
    return {key: (occ / n, n) for key, (occ, n) in counts.items()}


def oracle_region_duty(records, keep, plan, threshold_dbm):
    """channel -> (duty, samples) over records selected by `keep`."""
    counts = {}
    for rec in records:
        if not keep(rec.location):
            continue
        for ch, power in oracle_channel_samples(rec, plan).items():
            occ, n = counts.get(ch, (0, 0))
            counts[ch] = (occ + (1 if power >= threshold_dbm else 0), n + 1)
    return {ch: (occ / n, n) for ch, (occ, n) in counts.items()}


def oracle_runs(records, step_m):
    """Run segmentation by re-summing hop distances from each run start."""
    runs = []
    start = 0
    n = len(records)
    while start < n:
        end = start
        while end + 1 < n:
            nxt = records[end + 1]
            if nxt.span != records[start].span or nxt.bin_width_hz != records[start].bin_width_hz:
                break
            total = sum(
                haversine_m(records[i].location, records[i + 1].location)
                for i in range(start, end + 1)
            )
            if total >= step_m:
                break
            end += 1
        runs.append(list(range(start, end + 1)))
        start = end + 1
    return runs


def oracle_mw_mean_dbm(values):
    """Direct evaluation of the linear-milliwatt mean."""
    mw = [10.0 ** (v / 10.0) for v in values]
    return 10.0 * math.log10(sum(mw) / len(mw))
