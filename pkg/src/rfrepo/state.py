"""Mergeable per-node state: record set, campaigns, journeys, claims.

The canonical text forms for campaigns, journeys and claims live here; the
store log and the sync wire both reuse them verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from urllib.parse import quote, unquote

from .errors import HashMismatch
from .model import (
    Campaign,
    FrequencySpan,
    GeoPoint,
    Journey,
    LwwStamp,
    SweepRecord,
    parse_ring,
    ring_text,
)


class NodeRole(str, Enum):
    REGIONAL = "REGIONAL"
    CENTRAL = "CENTRAL"


class ClaimState(str, Enum):
    PROPOSED = "PROPOSED"
    CONTESTED = "CONTESTED"
    GRANTED = "GRANTED"
    DENIED = "DENIED"


TERMINAL_CLAIM_STATES = {ClaimState.GRANTED, ClaimState.DENIED}


class ClaimEvent(str, Enum):
    SUBMIT = "SUBMIT"
    CONTEST = "CONTEST"
    CENTRAL_GRANT = "CENTRAL_GRANT"
    CENTRAL_DENY = "CENTRAL_DENY"


@dataclass(frozen=True)
class Claim:
    """A spectrum-usage assertion under negotiation.

    ``submitted`` never changes; ``stamp`` is refreshed on every transition so
    anti-entropy carries decisions outward. GRANTED/DENIED may only ever be
    stamped by a CENTRAL node.
    """

    claim_id: str
    claimant: str
    span: FrequencySpan
    region: tuple[GeoPoint, ...]
    t0_ms: int
    t1_ms: int
    state: ClaimState
    submitted: LwwStamp
    stamp: LwwStamp
    decided_by: str | None = None

    def __post_init__(self):
        if self.t0_ms >= self.t1_ms:
            raise ValueError(f"empty claim window [{self.t0_ms}, {self.t1_ms})")


@dataclass
class ReplicaState:
    """Full mergeable state of one repository node.

    Records are a grow-only set keyed by record_id; campaign metadata is
    last-writer-wins with journey-set union; claims merge by stamp with
    terminal states dominating.
    """

    node_id: str
    role: NodeRole
    records: dict[bytes, SweepRecord] = field(default_factory=dict)
    campaigns: dict[str, Campaign] = field(default_factory=dict)
    journeys: dict[str, Journey] = field(default_factory=dict)
    claims: dict[str, Claim] = field(default_factory=dict)

    # -- record bookkeeping -------------------------------------------------

    def add_record(self, rec: SweepRecord) -> bool:
        """Insert into the grow-only set; False if already present."""
        existing = self.records.get(rec.record_id)
        if existing is not None:
            if existing != rec:
                raise HashMismatch(f"conflicting content for record {rec.record_id.hex()[:12]}")
            return False
        self.records[rec.record_id] = rec
        return True

    def timestamp_of(self, record_id: bytes) -> int:
        rec = self.records.get(record_id)
        # unresolved ids sort last until the record arrives
        return rec.timestamp_ms if rec is not None else 2**62

    def campaign_record_ids(self, campaign_id: str) -> set[bytes]:
        camp = self.campaigns.get(campaign_id)
        if camp is None:
            return set()
        ids: set[bytes] = set()
        for jid in camp.journeys:
            j = self.journeys.get(jid)
            if j is not None:
                ids.update(j.record_ids)
        return ids

    def upsert_journey(self, journey: Journey) -> Journey:
        """Union-merge a journey into the state and index it in its campaign."""
        existing = self.journeys.get(journey.journey_id)
        if existing is None:
            journey.record_ids = sorted(
                set(journey.record_ids), key=lambda r: (self.timestamp_of(r), r)
            )
            self.journeys[journey.journey_id] = journey
            existing = journey
        else:
            existing.merge_ids(journey.record_ids, self.timestamp_of)
            existing.derived = existing.derived or journey.derived
            if journey.ops and not existing.ops:
                existing.ops = journey.ops
        camp = self.campaigns.get(journey.campaign_id)
        if camp is not None:
            camp.journeys.add(journey.journey_id)
        return existing


# ---------------------------------------------------------------------------
# canonical text forms (shared by store log and sync offers)

def campaign_text(c: Campaign) -> str:
    region = ring_text(c.region) if c.region else "-"
    return ",".join(
        (
            c.campaign_id,
            str(c.meta_version.wall_ms),
            c.meta_version.node_id,
            c.owner,
            quote(c.name, safe=""),
            region,
        )
    )


def parse_campaign_text(text: str) -> Campaign:
    cid, wall, node, owner, name, region = text.split(",")
    ring = None if region == "-" else parse_ring(region)
    return Campaign(
        campaign_id=cid,
        name=unquote(name),
        owner=owner,
        region=ring,
        journeys=set(),
        meta_version=LwwStamp(int(wall), node),
    )


def journey_text(j: Journey) -> str:
    ids = ";".join(r.hex() for r in j.record_ids) if j.record_ids else "-"
    ops = quote(";".join(j.ops), safe="") if j.ops else "-"
    return ",".join(
        (
            j.campaign_id,
            j.journey_id,
            j.collector,
            j.device_serial,
            "1" if j.derived else "0",
            ops,
            ids,
        )
    )


def parse_journey_text(text: str) -> Journey:
    campaign_id, jid, collector, serial, derived, ops, ids = text.split(",")
    record_ids = [] if ids == "-" else [bytes.fromhex(h) for h in ids.split(";")]
    op_list = () if ops == "-" else tuple(unquote(ops).split(";"))
    return Journey(
        journey_id=jid,
        campaign_id=campaign_id,
        collector=collector,
        device_serial=serial,
        derived=derived == "1",
        ops=op_list,
        record_ids=record_ids,
    )


def claim_text(c: Claim) -> str:
    return ",".join(
        (
            c.claim_id,
            c.claimant,
            str(c.span.low_hz),
            str(c.span.high_hz),
            str(c.t0_ms),
            str(c.t1_ms),
            c.state.value,
            str(c.submitted.wall_ms),
            c.submitted.node_id,
            str(c.stamp.wall_ms),
            c.stamp.node_id,
            c.decided_by or "-",
            ring_text(c.region),
        )
    )


def parse_claim_text(text: str) -> Claim:
    parts = text.split(",")
    (cid, claimant, low, high, t0, t1, state, sub_wall, sub_node, wall, node, decided, region) = parts
    return Claim(
        claim_id=cid,
        claimant=claimant,
        span=FrequencySpan(int(low), int(high)),
        region=parse_ring(region),
        t0_ms=int(t0),
        t1_ms=int(t1),
        state=ClaimState(state),
        submitted=LwwStamp(int(sub_wall), sub_node),
        stamp=LwwStamp(int(wall), node),
        decided_by=None if decided == "-" else decided,
    )


def with_claim_state(
    claim: Claim, state: ClaimState, stamp: LwwStamp, decided_by: str | None = None
) -> Claim:
    return replace(claim, state=state, stamp=stamp, decided_by=decided_by or claim.decided_by)
