/** Wire types of the repository's /v1 API, as the client consumes them. */

export interface Campaign {
  campaign_id: string;
  name: string;
  owner: string;
  region: [number, number][] | null; // [lat, lon] closed ring
  journeys: string[];
}

export interface Journey {
  journey_id: string;
  campaign_id: string;
  collector: string;
  device_serial: string;
  derived: boolean;
  operations: string[];
  record_ids: string[];
}

export interface RecordSummary {
  record_id: string;
  timestamp_ms: number;
  lat_deg: number;
  lon_deg: number;
  derived: boolean;
}

export interface EditedJourney {
  journey_id: string;
  source_journey_id: string;
  operations: string[];
  record_ids: string[];
  records: RecordSummary[];
}

export interface OccupancyFeature {
  type: "Feature";
  geometry: { type: "Polygon"; coordinates: [number, number][][] };
  properties: { channel: number; duty_cycle: number; sample_count: number };
}

export interface OccupancyCollection {
  type: "FeatureCollection";
  features: OccupancyFeature[];
}

export type ChannelStatus = "FREE" | "OCCUPIED" | "UNKNOWN";

export interface WhiteSpaceChannel {
  channel: number;
  low_hz: number;
  high_hz: number;
  duty_cycle: number;
  sample_count: number;
  status: ChannelStatus;
}

export interface WhiteSpaceReport {
  region: string;
  plan: string;
  threshold_dbm: number;
  max_duty: number;
  min_samples: number;
  channels: WhiteSpaceChannel[];
}

export type ClaimState = "PROPOSED" | "CONTESTED" | "GRANTED" | "DENIED";

export interface Claim {
  claim_id: string;
  claimant: string;
  low_hz: number;
  high_hz: number;
  t0_ms: number;
  t1_ms: number;
  state: ClaimState;
  submitted_ms: number;
  submitted_node: string;
  decided_by: string | null;
  region: [number, number][];
}

export interface ClaimRequest {
  low_hz: number;
  high_hz: number;
  t0_ms: number;
  t1_ms: number;
  region: [number, number][];
}

export interface BBox {
  minLat: number;
  minLon: number;
  maxLat: number;
  maxLon: number;
}

export type EditOp =
  | { op: "TrimTime"; t0_ms: number; t1_ms: number }
  | { op: "ClipPolygon"; ring: [number, number][] }
  | { op: "ResampleDistance"; step_m: number };
