"""HTTP surface of a repository node.

Mutating endpoints require a bearer token; occupancy/white-space queries are
public (open data by default). The sync endpoints speak the canonical text
forms and are gated by the shared peer token.
"""

from __future__ import annotations

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request, Response

from . import schemas
from .analysis import BBox, report_table
from .errors import (
    AuthError,
    CampaignNotFound,
    IllegalTransition,
    JourneyNotFound,
    RepoError,
    UnknownFormat,
)
from .model import FrequencySpan, GeoPoint, parse_ring
from .repository import RepositoryNode
from .store import AccountRole


def _bearer(authorization: str | None) -> str:
    if not authorization or not authorization.startswith("Bearer "):
        raise HTTPException(status_code=401, detail="missing bearer token")
    return authorization[len("Bearer ") :]


def _ring_from_pairs(pairs):
    try:
        return tuple(GeoPoint(lat, lon) for lat, lon in pairs)
    except (TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"bad ring: {exc}") from exc


def _parse_bbox(bbox: str) -> BBox:
    try:
        min_lon, min_lat, max_lon, max_lat = (float(v) for v in bbox.split(","))
        return BBox(min_lat=min_lat, min_lon=min_lon, max_lat=max_lat, max_lon=max_lon)
    except (ValueError, RepoError) as exc:
        raise HTTPException(status_code=422, detail=f"bad bbox: {exc}") from exc


def _parse_region_param(region: str):
    try:
        return parse_ring(region)
    except (ValueError, RepoError) as exc:
        raise HTTPException(status_code=422, detail=f"bad region: {exc}") from exc


def create_app(repo: RepositoryNode) -> FastAPI:
    app = FastAPI(title="rfrepo", version="0.1.0")
    app.state.repo = repo

    def current_account(authorization: str | None = Header(default=None)):
        token = _bearer(authorization)
        try:
            return repo.authenticate(token)
        except AuthError as exc:
            raise HTTPException(status_code=401, detail=str(exc)) from exc

    def operator_account(account=Depends(current_account)):
        if account.role != AccountRole.OPERATOR:
            raise HTTPException(status_code=403, detail="operator role required")
        return account

    def peer_auth(authorization: str | None = Header(default=None)):
        token = _bearer(authorization)
        if repo.is_peer_token(token):
            return "peer"
        try:
            repo.authenticate(token)
            return "operator"
        except AuthError as exc:
            raise HTTPException(status_code=401, detail="peer authentication failed") from exc

    # -- accounts ----------------------------------------------------------

    @app.post("/v1/accounts", response_model=schemas.AccountOut, status_code=201)
    def create_account(body: schemas.AccountCreate, _operator=Depends(operator_account)):
        try:
            role = AccountRole(body.role)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"unknown role: {body.role}") from exc
        account, token = repo.create_account(body.name, role)
        return schemas.AccountOut(
            account_id=account.account_id, name=account.name, role=account.role.value, token=token
        )

    # -- campaigns -----------------------------------------------------------

    @app.post("/v1/campaigns", response_model=schemas.CampaignOut, status_code=201)
    def create_campaign(body: schemas.CampaignCreate, account=Depends(current_account)):
        ring = _ring_from_pairs(body.region) if body.region else None
        try:
            camp = repo.create_campaign(body.name, account.account_id, ring)
        except RepoError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.CampaignOut.from_domain(camp)

    @app.get("/v1/campaigns", response_model=list[schemas.CampaignOut])
    def list_campaigns():
        return [schemas.CampaignOut.from_domain(c) for c in repo.list_campaigns()]

    @app.get("/v1/campaigns/{campaign_id}", response_model=schemas.CampaignOut)
    def get_campaign(campaign_id: str):
        try:
            return schemas.CampaignOut.from_domain(repo.get_campaign(campaign_id))
        except CampaignNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post(
        "/v1/campaigns/{campaign_id}/uploads",
        response_model=schemas.IngestReportOut,
    )
    async def upload(campaign_id: str, request: Request, account=Depends(current_account)):
        content = await request.body()
        try:
            report = repo.ingest(campaign_id, content, account.account_id)
        except CampaignNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except UnknownFormat as exc:
            raise HTTPException(status_code=415, detail=str(exc)) from exc
        return schemas.IngestReportOut.from_domain(report)

    @app.get("/v1/campaigns/{campaign_id}/journeys", response_model=list[schemas.JourneyOut])
    def list_journeys(campaign_id: str):
        try:
            return [schemas.JourneyOut.from_domain(j) for j in repo.journeys_of(campaign_id)]
        except CampaignNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/v1/journeys/{journey_id}", response_model=schemas.JourneyOut)
    def get_journey(journey_id: str):
        try:
            return schemas.JourneyOut.from_domain(repo.get_journey(journey_id))
        except JourneyNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get(
        "/v1/journeys/{journey_id}/records", response_model=list[schemas.RecordSummaryOut]
    )
    def journey_records(journey_id: str):
        try:
            records = repo.journey_records(journey_id)
        except JourneyNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return [schemas.RecordSummaryOut.from_domain(r) for r in records]

    # -- journey edits ---------------------------------------------------------

    @app.post("/v1/journeys/{journey_id}/edits", response_model=schemas.EditedJourneyOut)
    def edit_journey(journey_id: str, body: schemas.EditRequest, account=Depends(current_account)):
        params: dict = {}
        if body.op == "TrimTime":
            if body.t0_ms is None or body.t1_ms is None:
                raise HTTPException(status_code=422, detail="TrimTime needs t0_ms and t1_ms")
            params = {"t0_ms": body.t0_ms, "t1_ms": body.t1_ms}
        elif body.op == "ClipPolygon":
            if not body.ring:
                raise HTTPException(status_code=422, detail="ClipPolygon needs a ring")
            params = {"ring": _ring_from_pairs(body.ring)}
        elif body.op == "ResampleDistance":
            if not body.step_m or body.step_m <= 0:
                raise HTTPException(status_code=422, detail="ResampleDistance needs step_m > 0")
            params = {"step_m": body.step_m}
        try:
            edited, records = repo.apply_edit(
                journey_id, body.op, params, account.account_id, preview=body.preview
            )
        except JourneyNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except RepoError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.EditedJourneyOut.from_domain(edited, records)

    # -- analysis ---------------------------------------------------------------

    @app.get("/v1/occupancy")
    def occupancy(
        bbox: str,
        cell_deg: float = Query(gt=0),
        plan: str = "UHF-8MHz",
        threshold_dbm: float | None = None,
        campaign: str | None = None,
        journey: str | None = None,
    ):
        box = _parse_bbox(bbox)
        try:
            return repo.occupancy_geojson(box, cell_deg, plan, threshold_dbm, campaign, journey)
        except RepoError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/v1/whitespaces")
    def whitespaces(
        region: str | None = None,
        bbox: str | None = None,
        plan: str = "UHF-8MHz",
        threshold_dbm: float | None = None,
        max_duty: float | None = None,
        min_samples: int | None = None,
        campaign: str | None = None,
        journey: str | None = None,
        format: str = "json",
    ):
        if region is not None:
            area = _parse_region_param(region)
        elif bbox is not None:
            area = _parse_bbox(bbox)
        else:
            raise HTTPException(status_code=422, detail="region or bbox required")
        try:
            report = repo.white_space(
                area, plan, threshold_dbm, max_duty, min_samples, campaign, journey
            )
        except RepoError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        if format == "table":
            return Response(report_table(report, repo.plan(plan)), media_type="text/plain")
        return schemas.WhiteSpaceReportOut.from_domain(report, repo.plan(plan))

    @app.get("/v1/thresholdsweep", response_model=list[schemas.ThresholdCurveOut])
    def thresholdsweep(
        thresholds: str,
        region: str | None = None,
        bbox: str | None = None,
        plan: str = "UHF-8MHz",
        campaign: str | None = None,
        journey: str | None = None,
    ):
        if region is not None:
            area = _parse_region_param(region)
        elif bbox is not None:
            area = _parse_bbox(bbox)
        else:
            raise HTTPException(status_code=422, detail="region or bbox required")
        try:
            levels = [float(t) for t in thresholds.split(",") if t]
            curves = repo.threshold_curves(area, plan, levels, campaign, journey)
        except (ValueError, RepoError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return [
            schemas.ThresholdCurveOut(
                threshold_dbm=thr,
                channels=[
                    schemas.ThresholdPointOut(channel=ch, duty_cycle=duty, sample_count=n)
                    for ch, (duty, n) in sorted(per_channel.items())
                ],
            )
            for thr, per_channel in curves
        ]

    @app.get("/v1/export")
    def export(format: str = "zrf", campaign: str | None = None):
        if format != "zrf":
            raise HTTPException(status_code=422, detail="export supports format=zrf here; use /v1/occupancy for geojson")
        try:
            return Response(repo.export_zrf(campaign), media_type="text/plain")
        except CampaignNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    # -- claims -----------------------------------------------------------------

    @app.post("/v1/claims", response_model=schemas.ClaimOut, status_code=201)
    def submit_claim(body: schemas.ClaimCreate, account=Depends(current_account)):
        try:
            claim = repo.submit_claim(
                account.account_id,
                FrequencySpan(body.low_hz, body.high_hz),
                _ring_from_pairs(body.region),
                body.t0_ms,
                body.t1_ms,
            )
        except RepoError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.ClaimOut.from_domain(claim)

    @app.post("/v1/claims/{claim_id}/contest", response_model=schemas.ClaimOut)
    def contest_claim(claim_id: str, account=Depends(current_account)):
        try:
            return schemas.ClaimOut.from_domain(repo.contest_claim(claim_id))
        except IllegalTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except RepoError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/v1/claims", response_model=list[schemas.ClaimOut])
    def list_claims(region: str | None = None):
        ring = _parse_region_param(region) if region else None
        return [schemas.ClaimOut.from_domain(c) for c in repo.list_claims(ring)]

    @app.get("/v1/claims/conflicts", response_model=schemas.ClaimConflictsOut)
    def claim_conflicts(low_hz: int, high_hz: int, t0_ms: int, t1_ms: int, region: str):
        ring = _parse_region_param(region)
        try:
            conflicts = repo.conflicts_for(FrequencySpan(low_hz, high_hz), ring, t0_ms, t1_ms)
        except RepoError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.ClaimConflictsOut(
            conflicts=[schemas.ClaimOut.from_domain(c) for c in conflicts]
        )

    # -- sync ---------------------------------------------------------------------

    @app.post("/v1/sync/digest")
    async def sync_digest(request: Request, _peer=Depends(peer_auth)):
        payload = (await request.body()).decode("utf-8")
        try:
            ours, offer = repo.handle_digest(_strip_header(payload, "SYNC-DIGEST"))
        except (ValueError, RepoError) as exc:
            raise HTTPException(status_code=422, detail=f"bad digest: {exc}") from exc
        body = (
            f"SYNC-DIGEST,{repo.config.node_id}\n"
            + ours
            + f"SYNC-OFFER,{repo.config.node_id}\n"
            + offer
        )
        return Response(body, media_type="text/plain")

    @app.post("/v1/sync/offer")
    async def sync_offer(request: Request, _peer=Depends(peer_auth)):
        payload = (await request.body()).decode("utf-8")
        try:
            accepted, duplicates = repo.handle_offer(_strip_header(payload, "SYNC-OFFER"))
        except (ValueError, RepoError) as exc:
            raise HTTPException(status_code=422, detail=f"bad offer: {exc}") from exc
        return Response(f"SYNC-ACK,{accepted},{duplicates}\n", media_type="text/plain")

    # -- health ----------------------------------------------------------------

    @app.get("/v1/health", response_model=schemas.HealthOut)
    def health():
        return schemas.HealthOut(**repo.health())

    return app


def _strip_header(payload: str, expected_tag: str) -> str:
    """Drop the leading `TAG,<node_id>` line if present."""
    first, sep, rest = payload.partition("\n")
    if first.startswith(expected_tag + ",") or first == expected_tag:
        return rest if sep else ""
    return payload
