"""Digest-based anti-entropy and the spectrum-claim negotiation machinery.

The replica state is a join-semilattice: records are a grow-only set,
campaign metadata is last-writer-wins with journey-set union, and claims
merge with terminal (centrally decided) states dominating. No quorum
machinery: the only contested resource, spectrum claims, is arbitrated by
the single central node and the decisions flow back via the same digests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .analysis import point_in_ring
from .errors import HashMismatch, IdMismatch, IllegalTransition, NotCentral
from .ingest import parse_zrf_line, zrf_line
from .model import Campaign, Journey, LwwStamp, SweepRecord
from .state import (
    TERMINAL_CLAIM_STATES,
    Claim,
    ClaimEvent,
    ClaimState,
    NodeRole,
    ReplicaState,
    campaign_text,
    claim_text,
    journey_text,
    parse_campaign_text,
    parse_claim_text,
    parse_journey_text,
    with_claim_state,
)

BUCKET_COUNT = 256
_ZERO_BUCKET = (b"\x00" * 32, 0)


@dataclass
class Digest:
    """Constant-size summary of a replica: per-campaign 256-bucket XOR of
    record ids (bucket = first id byte) with per-bucket counts, campaign
    meta stamps, and claim (state, stamp) pairs. Zero buckets are omitted."""

    campaign_stamps: dict[str, LwwStamp] = field(default_factory=dict)
    buckets: dict[str, dict[int, tuple[bytes, int]]] = field(default_factory=dict)
    claim_stamps: dict[str, tuple[ClaimState, LwwStamp]] = field(default_factory=dict)


def make_digest(replica: ReplicaState) -> Digest:
    digest = Digest()
    for cid in replica.campaigns:
        camp = replica.campaigns[cid]
        digest.campaign_stamps[cid] = camp.meta_version
        acc: dict[int, tuple[int, int]] = {}
        for rid in replica.campaign_record_ids(cid):
            xor, count = acc.get(rid[0], (0, 0))
            acc[rid[0]] = (xor ^ int.from_bytes(rid, "big"), count + 1)
        digest.buckets[cid] = {
            b: (xor.to_bytes(32, "big"), count) for b, (xor, count) in acc.items()
        }
    for claim in replica.claims.values():
        digest.claim_stamps[claim.claim_id] = (claim.state, claim.stamp)
    return digest


def digest_text(digest: Digest) -> str:
    lines = []
    for cid in sorted(digest.campaign_stamps):
        stamp = digest.campaign_stamps[cid]
        lines.append(f"CAMPAIGN-STAMP,{cid},{stamp.wall_ms},{stamp.node_id}")
        for b in sorted(digest.buckets.get(cid, {})):
            xor, count = digest.buckets[cid][b]
            lines.append(f"BUCKET,{cid},{b},{count},{xor.hex()}")
    for claim_id in sorted(digest.claim_stamps):
        state, stamp = digest.claim_stamps[claim_id]
        lines.append(f"CLAIM-STAMP,{claim_id},{state.value},{stamp.wall_ms},{stamp.node_id}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_digest_text(text: str) -> Digest:
    digest = Digest()
    for line in text.splitlines():
        if not line:
            continue
        tag, _, rest = line.partition(",")
        if tag == "CAMPAIGN-STAMP":
            cid, wall, node = rest.split(",")
            digest.campaign_stamps[cid] = LwwStamp(int(wall), node)
            digest.buckets.setdefault(cid, {})
        elif tag == "BUCKET":
            cid, b, count, xor = rest.split(",")
            digest.buckets.setdefault(cid, {})[int(b)] = (bytes.fromhex(xor), int(count))
        elif tag == "CLAIM-STAMP":
            claim_id, st, wall, node = rest.split(",")
            digest.claim_stamps[claim_id] = (ClaimState(st), LwwStamp(int(wall), node))
        else:
            raise ValueError(f"unknown digest line: {line[:40]!r}")
    return digest


# ---------------------------------------------------------------------------
# merges

def merge_records(a: dict[bytes, SweepRecord], b: dict[bytes, SweepRecord]) -> dict[bytes, SweepRecord]:
    """Set union keyed by record_id; HashMismatch on conflicting content."""
    merged = dict(a)
    for rid, rec in b.items():
        existing = merged.get(rid)
        if existing is None:
            merged[rid] = rec
        elif existing != rec:
            raise HashMismatch(f"conflicting content for record {rid.hex()[:12]}")
    return merged


def merge_campaign_meta(a: Campaign, b: Campaign) -> Campaign:
    """Last-writer-wins on metadata; journey id sets union regardless."""
    if a.campaign_id != b.campaign_id:
        raise IdMismatch(f"{a.campaign_id} vs {b.campaign_id}")
    winner = b if b.meta_version >= a.meta_version else a
    return Campaign(
        campaign_id=winner.campaign_id,
        name=winner.name,
        owner=winner.owner,
        region=winner.region,
        journeys=a.journeys | b.journeys,
        meta_version=winner.meta_version,
    )


def merge_claims(a: Claim, b: Claim) -> Claim:
    """Terminal (centrally decided) states dominate; otherwise newest stamp."""
    if a.claim_id != b.claim_id:
        raise IdMismatch(f"{a.claim_id} vs {b.claim_id}")
    a_term = a.state in TERMINAL_CLAIM_STATES
    b_term = b.state in TERMINAL_CLAIM_STATES
    if a_term != b_term:
        return a if a_term else b
    return max(a, b, key=lambda c: (c.stamp, claim_text(c)))


# ---------------------------------------------------------------------------
# diff and exchange

@dataclass
class SyncOffer:
    records: list[SweepRecord] = field(default_factory=list)
    campaigns: list[tuple[Campaign, list[Journey]]] = field(default_factory=list)
    claims: list[Claim] = field(default_factory=list)


def compute_missing(remote: Digest, local: ReplicaState) -> SyncOffer:
    """Everything local that the remote digest does not account for. Bucket
    collisions over-offer; the receiver deduplicates. A campaign meta entry
    (with its journeys) rides along whenever any of its buckets differ, so
    record membership always accompanies the records themselves."""
    local_digest = make_digest(local)
    offer = SyncOffer()
    for cid, camp in local.campaigns.items():
        lb = local_digest.buckets.get(cid, {})
        rb = remote.buckets.get(cid, {})
        differing = {
            b for b in set(lb) | set(rb) if lb.get(b, _ZERO_BUCKET) != rb.get(b, _ZERO_BUCKET)
        }
        if differing:
            for rid in sorted(local.campaign_record_ids(cid)):
                if rid[0] in differing:
                    offer.records.append(local.records[rid])
        remote_stamp = remote.campaign_stamps.get(cid)
        if remote_stamp is None or camp.meta_version > remote_stamp or differing:
            journeys = [local.journeys[j] for j in sorted(camp.journeys) if j in local.journeys]
            offer.campaigns.append((camp, journeys))
    for claim in local.claims.values():
        remote_entry = remote.claim_stamps.get(claim.claim_id)
        if remote_entry is None or remote_entry != (claim.state, claim.stamp):
            offer.claims.append(claim)
    offer.claims.sort(key=lambda c: c.claim_id)
    return offer


def apply_offer(replica: ReplicaState, offer: SyncOffer) -> tuple[int, int]:
    """Merge an offer into the replica; returns (accepted, duplicate) record
    counts for the acknowledgement."""
    accepted = duplicates = 0
    for rec in offer.records:
        if replica.add_record(rec):
            accepted += 1
        else:
            duplicates += 1
    for camp, journeys in offer.campaigns:
        incoming = Campaign(
            campaign_id=camp.campaign_id,
            name=camp.name,
            owner=camp.owner,
            region=camp.region,
            journeys=set(camp.journeys),
            meta_version=camp.meta_version,
        )
        existing = replica.campaigns.get(camp.campaign_id)
        replica.campaigns[camp.campaign_id] = (
            incoming if existing is None else merge_campaign_meta(existing, incoming)
        )
        for j in journeys:
            replica.upsert_journey(
                Journey(
                    journey_id=j.journey_id,
                    campaign_id=j.campaign_id,
                    collector=j.collector,
                    device_serial=j.device_serial,
                    derived=j.derived,
                    ops=j.ops,
                    record_ids=list(j.record_ids),
                )
            )
    for claim in offer.claims:
        existing = replica.claims.get(claim.claim_id)
        replica.claims[claim.claim_id] = claim if existing is None else merge_claims(existing, claim)
    return accepted, duplicates


def apply_sync_round(initiator: ReplicaState, responder: ReplicaState):
    """One bidirectional anti-entropy round; after a lossless round both sides
    agree on records and campaign metadata."""
    initiator_digest = make_digest(initiator)
    responder_digest = make_digest(responder)
    apply_offer(initiator, compute_missing(initiator_digest, responder))
    apply_offer(responder, compute_missing(responder_digest, initiator))
    return initiator, responder


def offer_text(offer: SyncOffer) -> str:
    lines = []
    for rec in offer.records:
        lines.append(zrf_line(rec))
    for camp, journeys in offer.campaigns:
        lines.append("CAMPAIGN," + campaign_text(camp))
        for j in journeys:
            lines.append("JOURNEY," + journey_text(j))
    for claim in offer.claims:
        lines.append("CLAIM," + claim_text(claim))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_offer_text(text: str) -> SyncOffer:
    offer = SyncOffer()
    pending_journeys: dict[str, list[Journey]] = {}
    campaigns: dict[str, Campaign] = {}
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("ZRF1,"):
            offer.records.append(parse_zrf_line(line))
            continue
        tag, _, rest = line.partition(",")
        if tag == "CAMPAIGN":
            camp = parse_campaign_text(rest)
            campaigns[camp.campaign_id] = camp
        elif tag == "JOURNEY":
            j = parse_journey_text(rest)
            pending_journeys.setdefault(j.campaign_id, []).append(j)
        elif tag == "CLAIM":
            offer.claims.append(parse_claim_text(rest))
        else:
            raise ValueError(f"unknown offer line: {line[:40]!r}")
    for cid, camp in campaigns.items():
        journeys = pending_journeys.get(cid, [])
        camp.journeys.update(j.journey_id for j in journeys)
        offer.campaigns.append((camp, journeys))
    return offer


# ---------------------------------------------------------------------------
# claims: conflicts, arbitration, state machine

_ACTIVE_CLAIM_STATES = {ClaimState.PROPOSED, ClaimState.CONTESTED, ClaimState.GRANTED}


def _orient(ax, ay, bx, by, cx, cy) -> int:
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return 0 if v == 0 else (1 if v > 0 else -1)


def _between(ax, ay, bx, by, cx, cy) -> bool:
    return min(ax, bx) <= cx <= max(ax, bx) and min(ay, by) <= cy <= max(ay, by)


def _segments_intersect(p1, p2, p3, p4) -> bool:
    d1 = _orient(*p3, *p4, *p1)
    d2 = _orient(*p3, *p4, *p2)
    d3 = _orient(*p1, *p2, *p3)
    d4 = _orient(*p1, *p2, *p4)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0) and (
        (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0
    ):
        return True
    if d1 == 0 and _between(*p3, *p4, *p1):
        return True
    if d2 == 0 and _between(*p3, *p4, *p2):
        return True
    if d3 == 0 and _between(*p1, *p2, *p3):
        return True
    if d4 == 0 and _between(*p1, *p2, *p4):
        return True
    return False


def polygons_intersect(ring_a, ring_b) -> bool:
    if any(point_in_ring(v, ring_b) for v in ring_a[:-1]):
        return True
    if any(point_in_ring(v, ring_a) for v in ring_b[:-1]):
        return True
    edges_a = [((a.lon_deg, a.lat_deg), (b.lon_deg, b.lat_deg)) for a, b in zip(ring_a, ring_a[1:])]
    edges_b = [((a.lon_deg, a.lat_deg), (b.lon_deg, b.lat_deg)) for a, b in zip(ring_b, ring_b[1:])]
    return any(_segments_intersect(a1, a2, b1, b2) for a1, a2 in edges_a for b1, b2 in edges_b)


def claims_conflict(a: Claim, b: Claim) -> bool:
    if not a.span.overlaps(b.span):
        return False
    if not (a.t0_ms < b.t1_ms and b.t0_ms < a.t1_ms):
        return False
    return polygons_intersect(a.region, b.region)


def detect_claim_conflicts(claims: list[Claim]) -> list[tuple[Claim, Claim]]:
    """Conflicting pairs among PROPOSED/CONTESTED/GRANTED claims: spans,
    windows, and region polygons all overlap."""
    active = sorted(
        (c for c in claims if c.state in _ACTIVE_CLAIM_STATES), key=lambda c: c.claim_id
    )
    pairs = []
    for i, a in enumerate(active):
        for b in active[i + 1 :]:
            if claims_conflict(a, b):
                pairs.append((a, b))
    return pairs


def central_reconcile(replica: ReplicaState, stamp: LwwStamp) -> list[Claim]:
    """Arbitrate every pending claim: within each conflict component the
    earliest submission wins (ties by claim_id); claims conflicting with an
    already GRANTED claim are denied; terminal claims are never modified.
    Returns the claims whose state changed, already applied to the replica."""
    if replica.role != NodeRole.CENTRAL:
        raise NotCentral(f"reconcile invoked on {replica.role.value} node {replica.node_id}")
    claims = list(replica.claims.values())
    pairs = detect_claim_conflicts(claims)
    adjacency: dict[str, set[str]] = {}
    for a, b in pairs:
        adjacency.setdefault(a.claim_id, set()).add(b.claim_id)
        adjacency.setdefault(b.claim_id, set()).add(a.claim_id)

    by_id = {c.claim_id: c for c in claims}
    pending = {c.claim_id for c in claims if c.state in (ClaimState.PROPOSED, ClaimState.CONTESTED)}

    decided: list[Claim] = []

    def decide(claim_id: str, state: ClaimState):
        updated = with_claim_state(by_id[claim_id], state, stamp, decided_by=replica.node_id)
        replica.claims[claim_id] = updated
        decided.append(updated)

    visited: set[str] = set()
    for cid in sorted(adjacency):
        if cid in visited:
            continue
        component = []
        stack = [cid]
        while stack:
            cur = stack.pop()
            if cur in visited:
                continue
            visited.add(cur)
            component.append(cur)
            stack.extend(adjacency.get(cur, ()))
        members = [by_id[c] for c in component]
        if any(m.state == ClaimState.GRANTED for m in members):
            winner_id = None  # incumbent holds the resource
        else:
            winner = min(members, key=lambda c: (c.submitted.wall_ms, c.claim_id))
            winner_id = winner.claim_id
        for m in sorted(members, key=lambda c: c.claim_id):
            if m.claim_id not in pending:
                continue
            decide(m.claim_id, ClaimState.GRANTED if m.claim_id == winner_id else ClaimState.DENIED)

    for cid in sorted(pending):
        if cid not in adjacency:
            decide(cid, ClaimState.GRANTED)
    return decided


_LEGAL_EVENTS_ANY_ROLE = {
    (None, ClaimEvent.SUBMIT): ClaimState.PROPOSED,
    (ClaimState.PROPOSED, ClaimEvent.CONTEST): ClaimState.CONTESTED,
}
_LEGAL_EVENTS_CENTRAL = {
    (ClaimState.PROPOSED, ClaimEvent.CENTRAL_GRANT): ClaimState.GRANTED,
    (ClaimState.CONTESTED, ClaimEvent.CENTRAL_GRANT): ClaimState.GRANTED,
    (ClaimState.PROPOSED, ClaimEvent.CENTRAL_DENY): ClaimState.DENIED,
    (ClaimState.CONTESTED, ClaimEvent.CENTRAL_DENY): ClaimState.DENIED,
}


def next_claim_state(state: ClaimState | None, event: ClaimEvent, role: NodeRole) -> ClaimState:
    """The legal-transition table; raises IllegalTransition with the
    offending (state, event, role) triple."""
    nxt = _LEGAL_EVENTS_ANY_ROLE.get((state, event))
    if nxt is None and role == NodeRole.CENTRAL:
        nxt = _LEGAL_EVENTS_CENTRAL.get((state, event))
    if nxt is None:
        raise IllegalTransition(state, event, role)
    return nxt


def claim_transition(claim: Claim, event: ClaimEvent, actor_role: NodeRole, stamp: LwwStamp) -> Claim:
    new_state = next_claim_state(claim.state, event, actor_role)
    decided_by = stamp.node_id if new_state in TERMINAL_CLAIM_STATES else None
    return with_claim_state(claim, new_state, stamp, decided_by=decided_by)
