/** Thin client over the repository's documented /v1 endpoints.
 *
 * All traffic goes through an injectable Transport so tests can substitute a
 * fixture-serving stub and assert on exactly which requests the UI issues.
 */

import type {
  BBox,
  Campaign,
  Claim,
  ClaimRequest,
  EditOp,
  EditedJourney,
  Journey,
  OccupancyCollection,
  RecordSummary,
} from "./types.js";

export interface TransportResponse {
  status: number;
  body: unknown;
}

export type Transport = (
  method: "GET" | "POST",
  path: string,
  body?: unknown,
) => Promise<TransportResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly path: string,
    detail?: string,
  ) {
    super(`${path} failed with ${status}${detail ? `: ${detail}` : ""}`);
  }
}

export function fetchTransport(baseUrl: string, token?: string): Transport {
  const headers: Record<string, string> = { "Content-Type": "application/json" };
  if (token) headers["Authorization"] = `Bearer ${token}`;
  return async (method, path, body) => {
    const resp = await fetch(baseUrl.replace(/\/$/, "") + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let parsed: unknown = null;
    const text = await resp.text();
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = text;
    }
    return { status: resp.status, body: parsed };
  };
}

function query(params: Record<string, string | number | undefined>): string {
  const parts = Object.entries(params)
    .filter(([, v]) => v !== undefined)
    .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`);
  return parts.length ? `?${parts.join("&")}` : "";
}

export function ringParam(ring: [number, number][]): string {
  return ring.map(([lat, lon]) => `${lat.toFixed(6)}:${lon.toFixed(6)}`).join(";");
}

export class ApiClient {
  constructor(private readonly transport: Transport) {}

  private async call<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<T> {
    const resp = await this.transport(method, path, body);
    if (resp.status < 200 || resp.status >= 300) {
      const detail =
        typeof resp.body === "object" && resp.body !== null && "detail" in resp.body
          ? String((resp.body as { detail: unknown }).detail)
          : undefined;
      throw new ApiError(resp.status, path, detail);
    }
    return resp.body as T;
  }

  listCampaigns(): Promise<Campaign[]> {
    return this.call("GET", "/v1/campaigns");
  }

  getCampaign(id: string): Promise<Campaign> {
    return this.call("GET", `/v1/campaigns/${id}`);
  }

  listJourneys(campaignId: string): Promise<Journey[]> {
    return this.call("GET", `/v1/campaigns/${campaignId}/journeys`);
  }

  journeyRecords(journeyId: string): Promise<RecordSummary[]> {
    return this.call("GET", `/v1/journeys/${journeyId}/records`);
  }

  occupancy(
    bbox: BBox,
    cellDeg: number,
    plan: string,
    thresholdDbm: number,
    campaign?: string,
  ): Promise<OccupancyCollection> {
    const bboxParam = [bbox.minLon, bbox.minLat, bbox.maxLon, bbox.maxLat].join(",");
    return this.call(
      "GET",
      "/v1/occupancy" +
        query({
          bbox: bboxParam,
          cell_deg: cellDeg,
          plan,
          threshold_dbm: thresholdDbm,
          campaign,
        }),
    );
  }

  editJourney(journeyId: string, op: EditOp, preview: boolean): Promise<EditedJourney> {
    return this.call("POST", `/v1/journeys/${journeyId}/edits`, { ...op, preview });
  }

  listClaims(region?: [number, number][]): Promise<Claim[]> {
    return this.call(
      "GET",
      "/v1/claims" + query({ region: region ? ringParam(region) : undefined }),
    );
  }

  submitClaim(req: ClaimRequest): Promise<Claim> {
    return this.call("POST", "/v1/claims", req);
  }

  contestClaim(claimId: string): Promise<Claim> {
    return this.call("POST", `/v1/claims/${claimId}/contest`);
  }

  claimConflicts(req: ClaimRequest): Promise<Claim[]> {
    return this.call<{ conflicts: Claim[] }>(
      "GET",
      "/v1/claims/conflicts" +
        query({
          low_hz: req.low_hz,
          high_hz: req.high_hz,
          t0_ms: req.t0_ms,
          t1_ms: req.t1_ms,
          region: ringParam(req.region),
        }),
    ).then((r) => r.conflicts);
  }
}
