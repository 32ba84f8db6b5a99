from pathlib import Path

import pytest

from rfrepo.model import (
    BUILTIN_PLANS,
    CANONICAL_BIN_HZ,
    DeviceKind,
    FrequencySpan,
    GeoPoint,
    make_record,
)

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def uhf_plan():
    return BUILTIN_PLANS["UHF-8MHz"]


@pytest.fixture
def ism_plan():
    return BUILTIN_PLANS["ISM-868"]


def build_record(
    low_hz=470_000_000,
    bins=1,
    power=-90.0,
    powers=None,
    lat=0.0,
    lon=0.0,
    ts=1_500_000_000_000,
    serial="TEST-1",
    kind=DeviceKind.RFE,
    derived=False,
):
    """One canonical-grid record; `power` fills all bins unless `powers` given."""
    values = powers if powers is not None else [power] * bins
    span = FrequencySpan(low_hz, low_hz + len(values) * CANONICAL_BIN_HZ)
    return make_record(
        kind, serial, ts, GeoPoint(lat, lon), span, CANONICAL_BIN_HZ, values, derived=derived
    )


def square_ring(min_lat=0.0, min_lon=0.0, size=1.0):
    return (
        GeoPoint(min_lat, min_lon),
        GeoPoint(min_lat, min_lon + size),
        GeoPoint(min_lat + size, min_lon + size),
        GeoPoint(min_lat + size, min_lon),
        GeoPoint(min_lat, min_lon),
    )
