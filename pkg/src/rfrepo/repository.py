"""The repository node: single-writer state, persistence, and every operation
the HTTP service exposes.

All mutations funnel through one lock and append to the store log before
returning; query paths take the same lock only long enough to collect the
record lists they aggregate over. Parsing and normalization of uploads happen
outside the lock.
"""

from __future__ import annotations

import secrets
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

from . import analysis
from .analysis import BBox
from .config import NodeConfig
from .errors import (
    AuthError,
    CampaignNotFound,
    JourneyNotFound,
    NotCentral,
    RepoError,
)
from .ingest import CalibrationProfile, IngestReport, ingest_into, zrf_line
from .model import (
    Campaign,
    ChannelPlan,
    Journey,
    LwwStamp,
    SweepRecord,
    ring_text,
    validate_ring,
)
from .state import Claim, ClaimEvent, ClaimState, NodeRole, ReplicaState
from .store import (
    Account,
    AccountRole,
    StoreLog,
    account_entry,
    campaign_entry,
    claim_entry,
    hash_token,
    journey_entry,
    record_entry,
    recover_state,
    write_snapshot,
)
from .sync import (
    Digest,
    apply_offer,
    central_reconcile,
    claim_transition,
    claims_conflict,
    compute_missing,
    digest_text,
    make_digest,
    offer_text,
    parse_digest_text,
    parse_offer_text,
    polygons_intersect,
)


@dataclass
class EditedJourney:
    journey_id: str
    source_journey_id: str
    operations: tuple[str, ...]
    record_ids: list[bytes]


@dataclass
class SyncStats:
    attempts: int = 0
    failures: int = 0
    records_sent: int = 0
    records_received: int = 0
    last_error: str = ""


def _edit_op_token(op: str, params: dict) -> str:
    if op == "TrimTime":
        return f"TrimTime:{params['t0_ms']}:{params['t1_ms']}"
    if op == "ClipPolygon":
        return "ClipPolygon:" + quote(ring_text(params["ring"]), safe="")
    if op == "ResampleDistance":
        return f"ResampleDistance:{params['step_m']:g}"
    raise RepoError(f"unknown edit op: {op}")


class RepositoryNode:
    def __init__(self, config: NodeConfig):
        self.config = config
        self._lock = threading.RLock()
        self._last_wall_ms = 0
        self.store: StoreLog | None = None
        if config.data_dir:
            self.replica, self.accounts, self.store = recover_state(
                Path(config.data_dir), config.node_id, config.role
            )
        else:
            self.replica = ReplicaState(node_id=config.node_id, role=config.role)
            self.accounts: dict[str, Account] = {}
        self.plans = config.plans()
        self.calibration = CalibrationProfile(dict(config.calibration_db))
        self.sync_stats = SyncStats()
        if config.admin_token:
            self._ensure_admin(config.admin_token)

    # -- plumbing -----------------------------------------------------------

    def clock(self) -> LwwStamp:
        now = int(time.time() * 1000)
        with self._lock:
            self._last_wall_ms = max(now, self._last_wall_ms + 1)
            return LwwStamp(self._last_wall_ms, self.config.node_id)

    def _append(self, *entries: str) -> None:
        if self.store is None:
            return
        for entry in entries:
            offset = self.store.append(entry)
            if (offset + 1) % self.config.snapshot_interval == 0:
                write_snapshot(
                    Path(self.config.data_dir), self.replica, self.accounts, offset + 1
                )

    def plan(self, name: str) -> ChannelPlan:
        plan = self.plans.get(name)
        if plan is None:
            raise RepoError(f"unknown channel plan: {name}")
        return plan

    # -- accounts -----------------------------------------------------------

    def _ensure_admin(self, token: str) -> None:
        with self._lock:
            admin = self.accounts.get("acc-admin")
            if admin is not None and admin.verify(token):
                return
            salt = secrets.token_hex(8)
            account = Account(
                account_id="acc-admin",
                name="admin",
                salt=salt,
                token_hash=hash_token(salt, token),
                role=AccountRole.OPERATOR,
            )
            self.accounts[account.account_id] = account
            self._append(account_entry(account))

    def create_account(self, name: str, role: AccountRole) -> tuple[Account, str]:
        token = secrets.token_hex(16)
        salt = secrets.token_hex(8)
        account = Account(
            account_id=f"acc-{secrets.token_hex(8)}",
            name=name,
            salt=salt,
            token_hash=hash_token(salt, token),
            role=role,
        )
        with self._lock:
            self.accounts[account.account_id] = account
            self._append(account_entry(account))
        return account, token

    def authenticate(self, token: str) -> Account:
        with self._lock:
            for account in self.accounts.values():
                if account.verify(token):
                    return account
        raise AuthError("invalid token")

    def is_peer_token(self, token: str) -> bool:
        return bool(self.config.peer_token) and secrets.compare_digest(
            token, self.config.peer_token
        )

    # -- campaigns and ingestion --------------------------------------------

    def create_campaign(self, name: str, owner: str, region=None) -> Campaign:
        ring = validate_ring(region) if region else None
        camp = Campaign(
            campaign_id=str(uuid.uuid4()),
            name=name,
            owner=owner,
            region=ring,
            journeys=set(),
            meta_version=self.clock(),
        )
        with self._lock:
            self.replica.campaigns[camp.campaign_id] = camp
            self._append(campaign_entry(camp))
        return camp

    def get_campaign(self, campaign_id: str) -> Campaign:
        camp = self.replica.campaigns.get(campaign_id)
        if camp is None:
            raise CampaignNotFound(campaign_id)
        return camp

    def list_campaigns(self) -> list[Campaign]:
        with self._lock:
            return sorted(self.replica.campaigns.values(), key=lambda c: c.campaign_id)

    def ingest(self, campaign_id: str, content: bytes, collector: str) -> IngestReport:
        with self._lock:
            self.get_campaign(campaign_id)
            stamp = self.clock()
            report, new_records, touched = ingest_into(
                self.replica, campaign_id, content, self.calibration, collector, stamp
            )
            entries = [record_entry(r) for r in new_records]
            for jid in touched:
                entries.append(journey_entry(self.replica.journeys[jid]))
            if touched:
                entries.append(campaign_entry(self.replica.campaigns[campaign_id]))
            self._append(*entries)
        return report

    def journeys_of(self, campaign_id: str) -> list[Journey]:
        with self._lock:
            camp = self.get_campaign(campaign_id)
            journeys = [self.replica.journeys[j] for j in camp.journeys if j in self.replica.journeys]
            return sorted(journeys, key=lambda j: j.journey_id)

    def get_journey(self, journey_id: str) -> Journey:
        journey = self.replica.journeys.get(journey_id)
        if journey is None:
            raise JourneyNotFound(journey_id)
        return journey

    def journey_records(self, journey_id: str) -> list[SweepRecord]:
        with self._lock:
            journey = self.get_journey(journey_id)
            return [self.replica.records[r] for r in journey.record_ids if r in self.replica.records]

    # -- journey edits --------------------------------------------------------

    def apply_edit(
        self, journey_id: str, op: str, params: dict, actor: str, preview: bool = False
    ) -> tuple[EditedJourney, list[SweepRecord]]:
        with self._lock:
            source = self.get_journey(journey_id)
            records = self.journey_records(journey_id)
            if op == "TrimTime":
                edited = analysis.trim_time(records, int(params["t0_ms"]), int(params["t1_ms"]))
            elif op == "ClipPolygon":
                edited = analysis.clip_to_polygon(records, params["ring"])
            elif op == "ResampleDistance":
                edited = analysis.resample_by_distance(records, float(params["step_m"]))
            else:
                raise RepoError(f"unknown edit op: {op}")

            if preview:
                shadow = EditedJourney(
                    journey_id="",
                    source_journey_id=journey_id,
                    operations=source.ops + (_edit_op_token(op, params),),
                    record_ids=[r.record_id for r in edited],
                )
                return shadow, edited

            new_records = [r for r in edited if r.record_id not in self.replica.records]
            for rec in new_records:
                self.replica.add_record(rec)
            journey = Journey(
                journey_id=str(uuid.uuid4()),
                campaign_id=source.campaign_id,
                collector=actor,
                device_serial=source.device_serial,
                derived=True,
                ops=source.ops + (_edit_op_token(op, params),),
                record_ids=[r.record_id for r in edited],
            )
            self.replica.upsert_journey(journey)
            camp = self.replica.campaigns.get(source.campaign_id)
            entries = [record_entry(r) for r in new_records]
            entries.append(journey_entry(journey))
            if camp is not None:
                camp.meta_version = self.clock()
                entries.append(campaign_entry(camp))
            self._append(*entries)
            result = EditedJourney(
                journey_id=journey.journey_id,
                source_journey_id=journey_id,
                operations=journey.ops,
                record_ids=list(journey.record_ids),
            )
            return result, edited

    # -- analysis queries -----------------------------------------------------

    def records_for_scope(
        self, campaign_id: str | None = None, journey_id: str | None = None
    ) -> list[SweepRecord]:
        """Records backing occupancy queries. A journey scope returns exactly
        that journey (edited journeys included); otherwise derived journeys
        are excluded so edits never double-count their sources."""
        with self._lock:
            if journey_id is not None:
                return self.journey_records(journey_id)
            if campaign_id is not None:
                journeys = [j for j in self.journeys_of(campaign_id) if not j.derived]
            else:
                journeys = sorted(
                    (j for j in self.replica.journeys.values() if not j.derived),
                    key=lambda j: j.journey_id,
                )
            out = []
            for j in journeys:
                out.extend(self.replica.records[r] for r in j.record_ids if r in self.replica.records)
            return out

    def occupancy_geojson(
        self,
        bbox: BBox,
        cell_deg: float,
        plan_name: str,
        threshold_dbm: float | None = None,
        campaign_id: str | None = None,
        journey_id: str | None = None,
    ) -> dict:
        records = self.records_for_scope(campaign_id, journey_id)
        threshold = self.config.threshold_dbm if threshold_dbm is None else threshold_dbm
        cells = analysis.occupancy_grid(records, bbox, cell_deg, self.plan(plan_name), threshold)
        return analysis.grid_geojson(cells, bbox, cell_deg)

    def white_space(
        self,
        region,
        plan_name: str,
        threshold_dbm: float | None = None,
        max_duty: float | None = None,
        min_samples: int | None = None,
        campaign_id: str | None = None,
        journey_id: str | None = None,
    ):
        records = self.records_for_scope(campaign_id, journey_id)
        return analysis.white_space_report(
            records,
            region,
            self.plan(plan_name),
            self.config.threshold_dbm if threshold_dbm is None else threshold_dbm,
            self.config.max_duty if max_duty is None else max_duty,
            self.config.min_samples if min_samples is None else min_samples,
        )

    def threshold_curves(
        self,
        region,
        plan_name: str,
        thresholds: list[float],
        campaign_id: str | None = None,
        journey_id: str | None = None,
    ):
        records = self.records_for_scope(campaign_id, journey_id)
        return analysis.threshold_sweep(records, region, self.plan(plan_name), thresholds)

    def export_zrf(self, campaign_id: str | None = None) -> str:
        with self._lock:
            if campaign_id is not None:
                self.get_campaign(campaign_id)
                ids = sorted(self.replica.campaign_record_ids(campaign_id))
                records = [self.replica.records[r] for r in ids if r in self.replica.records]
            else:
                records = [self.replica.records[r] for r in sorted(self.replica.records)]
        return "".join(zrf_line(r) + "\n" for r in records)

    # -- claims ---------------------------------------------------------------

    def submit_claim(self, claimant: str, span, region, t0_ms: int, t1_ms: int) -> Claim:
        ring = validate_ring(region)
        stamp = self.clock()
        claim = Claim(
            claim_id=str(uuid.uuid4()),
            claimant=claimant,
            span=span,
            region=ring,
            t0_ms=t0_ms,
            t1_ms=t1_ms,
            state=ClaimState.PROPOSED,
            submitted=stamp,
            stamp=stamp,
        )
        with self._lock:
            self.replica.claims[claim.claim_id] = claim
            self._append(claim_entry(claim))
            self._reconcile_if_central()
            return self.replica.claims[claim.claim_id]

    def contest_claim(self, claim_id: str) -> Claim:
        with self._lock:
            claim = self.replica.claims.get(claim_id)
            if claim is None:
                raise RepoError(f"unknown claim: {claim_id}")
            updated = claim_transition(claim, ClaimEvent.CONTEST, self.config.role, self.clock())
            self.replica.claims[claim_id] = updated
            self._append(claim_entry(updated))
            self._reconcile_if_central()
            return self.replica.claims[claim_id]

    def list_claims(self, region=None) -> list[Claim]:
        with self._lock:
            claims = sorted(self.replica.claims.values(), key=lambda c: c.claim_id)
        if region is None:
            return claims
        ring = validate_ring(region)
        return [c for c in claims if polygons_intersect(c.region, ring)]

    def conflicts_for(self, span, region, t0_ms: int, t1_ms: int) -> list[Claim]:
        """Existing active claims a prospective claim would collide with."""
        probe = Claim(
            claim_id="probe",
            claimant="probe",
            span=span,
            region=validate_ring(region),
            t0_ms=t0_ms,
            t1_ms=t1_ms,
            state=ClaimState.PROPOSED,
            submitted=LwwStamp(0, "probe"),
            stamp=LwwStamp(0, "probe"),
        )
        with self._lock:
            active = [
                c
                for c in self.replica.claims.values()
                if c.state in (ClaimState.PROPOSED, ClaimState.CONTESTED, ClaimState.GRANTED)
            ]
        return sorted((c for c in active if claims_conflict(probe, c)), key=lambda c: c.claim_id)

    def _reconcile_if_central(self) -> None:
        if self.config.role != NodeRole.CENTRAL:
            return
        decided = central_reconcile(self.replica, self.clock())
        self._append(*[claim_entry(c) for c in decided])

    def reconcile(self) -> list[Claim]:
        with self._lock:
            if self.config.role != NodeRole.CENTRAL:
                raise NotCentral(self.config.node_id)
            decided = central_reconcile(self.replica, self.clock())
            self._append(*[claim_entry(c) for c in decided])
            return decided

    # -- sync surface ---------------------------------------------------------

    def digest_payload(self) -> str:
        with self._lock:
            return digest_text(make_digest(self.replica))

    def offer_for(self, remote: Digest) -> str:
        with self._lock:
            return offer_text(compute_missing(remote, self.replica))

    def handle_digest(self, digest_payload: str) -> tuple[str, str]:
        """Responder side: returns (our digest, our offer against theirs)."""
        remote = parse_digest_text(digest_payload)
        with self._lock:
            ours = digest_text(make_digest(self.replica))
            offer = offer_text(compute_missing(remote, self.replica))
        return ours, offer

    def handle_offer(self, offer_payload: str) -> tuple[int, int]:
        offer = parse_offer_text(offer_payload)
        with self._lock:
            accepted, duplicates = apply_offer(self.replica, offer)
            entries = [record_entry(r) for r in offer.records]
            for camp, journeys in offer.campaigns:
                merged = self.replica.campaigns[camp.campaign_id]
                entries.append(campaign_entry(merged))
                for j in journeys:
                    entries.append(journey_entry(self.replica.journeys[j.journey_id]))
            for claim in offer.claims:
                entries.append(claim_entry(self.replica.claims[claim.claim_id]))
            self._append(*entries)
            self._reconcile_if_central()
        return accepted, duplicates

    # -- health ---------------------------------------------------------------

    def health(self) -> dict:
        with self._lock:
            return {
                "status": "ok",
                "node_id": self.config.node_id,
                "role": self.config.role.value,
                "records": len(self.replica.records),
                "campaigns": len(self.replica.campaigns),
                "claims": len(self.replica.claims),
                "log_offset": self.store.next_offset if self.store else 0,
            }
