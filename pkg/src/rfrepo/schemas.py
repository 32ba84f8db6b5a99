"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field

from .analysis import WhiteSpaceReport
from .ingest import IngestReport
from .model import Campaign, Journey, channel_span
from .repository import EditedJourney
from .state import Claim


class AccountCreate(BaseModel):
    name: str
    role: str = "COLLECTOR"


class AccountOut(BaseModel):
    account_id: str
    name: str
    role: str
    token: str | None = None


class CampaignCreate(BaseModel):
    name: str
    region: list[list[float]] | None = None  # [[lat, lon], ...] closed ring


class CampaignOut(BaseModel):
    campaign_id: str
    name: str
    owner: str
    region: list[list[float]] | None
    journeys: list[str]

    @classmethod
    def from_domain(cls, c: Campaign) -> "CampaignOut":
        region = [[p.lat_deg, p.lon_deg] for p in c.region] if c.region else None
        return cls(
            campaign_id=c.campaign_id,
            name=c.name,
            owner=c.owner,
            region=region,
            journeys=sorted(c.journeys),
        )


class LineErrorOut(BaseModel):
    line: int
    reason: str
    detail: str = ""


class IngestReportOut(BaseModel):
    accepted: int
    duplicates: int
    errors: list[LineErrorOut]

    @classmethod
    def from_domain(cls, r: IngestReport) -> "IngestReportOut":
        return cls(
            accepted=r.accepted,
            duplicates=r.duplicates,
            errors=[LineErrorOut(line=e.line, reason=e.reason, detail=e.detail) for e in r.errors],
        )


class JourneyOut(BaseModel):
    journey_id: str
    campaign_id: str
    collector: str
    device_serial: str
    derived: bool
    operations: list[str]
    record_ids: list[str]

    @classmethod
    def from_domain(cls, j: Journey) -> "JourneyOut":
        return cls(
            journey_id=j.journey_id,
            campaign_id=j.campaign_id,
            collector=j.collector,
            device_serial=j.device_serial,
            derived=j.derived,
            operations=list(j.ops),
            record_ids=[r.hex() for r in j.record_ids],
        )


class EditRequest(BaseModel):
    op: str = Field(pattern="^(TrimTime|ClipPolygon|ResampleDistance)$")
    t0_ms: int | None = None
    t1_ms: int | None = None
    ring: list[list[float]] | None = None
    step_m: float | None = None
    preview: bool = False


class RecordSummaryOut(BaseModel):
    record_id: str
    timestamp_ms: int
    lat_deg: float
    lon_deg: float
    derived: bool

    @classmethod
    def from_domain(cls, r) -> "RecordSummaryOut":
        return cls(
            record_id=r.record_id.hex(),
            timestamp_ms=r.timestamp_ms,
            lat_deg=r.location.lat_deg,
            lon_deg=r.location.lon_deg,
            derived=r.derived,
        )


class EditedJourneyOut(BaseModel):
    journey_id: str
    source_journey_id: str
    operations: list[str]
    record_ids: list[str]
    records: list[RecordSummaryOut]

    @classmethod
    def from_domain(cls, e: EditedJourney, records) -> "EditedJourneyOut":
        return cls(
            journey_id=e.journey_id,
            source_journey_id=e.source_journey_id,
            operations=list(e.operations),
            record_ids=[r.hex() for r in e.record_ids],
            records=[RecordSummaryOut.from_domain(r) for r in records],
        )


class ChannelEntryOut(BaseModel):
    channel: int
    low_hz: int
    high_hz: int
    duty_cycle: float
    sample_count: int
    status: str


class WhiteSpaceReportOut(BaseModel):
    region: str
    plan: str
    threshold_dbm: float
    max_duty: float
    min_samples: int
    channels: list[ChannelEntryOut]

    @classmethod
    def from_domain(cls, r: WhiteSpaceReport, plan) -> "WhiteSpaceReportOut":
        channels = []
        for e in r.entries:
            span = channel_span(e.channel, plan)
            channels.append(
                ChannelEntryOut(
                    channel=e.channel,
                    low_hz=span.low_hz,
                    high_hz=span.high_hz,
                    duty_cycle=e.duty_cycle,
                    sample_count=e.sample_count,
                    status=e.status.value,
                )
            )
        return cls(
            region=r.region,
            plan=r.plan,
            threshold_dbm=r.threshold_dbm,
            max_duty=r.max_duty,
            min_samples=r.min_samples,
            channels=channels,
        )


class ThresholdPointOut(BaseModel):
    channel: int
    duty_cycle: float
    sample_count: int


class ThresholdCurveOut(BaseModel):
    threshold_dbm: float
    channels: list[ThresholdPointOut]


class ClaimCreate(BaseModel):
    low_hz: int
    high_hz: int
    t0_ms: int
    t1_ms: int
    region: list[list[float]]  # [[lat, lon], ...] closed ring


class ClaimOut(BaseModel):
    claim_id: str
    claimant: str
    low_hz: int
    high_hz: int
    t0_ms: int
    t1_ms: int
    state: str
    submitted_ms: int
    submitted_node: str
    decided_by: str | None
    region: list[list[float]]

    @classmethod
    def from_domain(cls, c: Claim) -> "ClaimOut":
        return cls(
            claim_id=c.claim_id,
            claimant=c.claimant,
            low_hz=c.span.low_hz,
            high_hz=c.span.high_hz,
            t0_ms=c.t0_ms,
            t1_ms=c.t1_ms,
            state=c.state.value,
            submitted_ms=c.submitted.wall_ms,
            submitted_node=c.submitted.node_id,
            decided_by=c.decided_by,
            region=[[p.lat_deg, p.lon_deg] for p in c.region],
        )


class ClaimConflictsOut(BaseModel):
    conflicts: list[ClaimOut]


class HealthOut(BaseModel):
    status: str
    node_id: str
    role: str
    records: int
    campaigns: int
    claims: int
    log_offset: int
