/** Session view state: selected campaign, viewport, threshold slider, drawn
 * polygon. The slider is clamped to the supported detection range and a
 * polygon must be explicitly closed before any filtered query may use it. */

import { ringClosed, type LatLon } from "./geometry.js";
import type { BBox } from "./types.js";

export const THRESHOLD_MIN_DBM = -120;
export const THRESHOLD_MAX_DBM = -30;

export class ViewState {
  selectedCampaign: string | null = null;
  viewport: BBox = { minLat: -60, minLon: -120, maxLat: 60, maxLon: 120 };
  zoom = 1;
  activePlan = "UHF-8MHz";
  maxDuty = 0.1;
  private thresholdDbmValue = -85;
  private polygon: LatLon[] = [];

  get thresholdDbm(): number {
    return this.thresholdDbmValue;
  }

  setThreshold(dbm: number): number {
    this.thresholdDbmValue = Math.min(THRESHOLD_MAX_DBM, Math.max(THRESHOLD_MIN_DBM, dbm));
    return this.thresholdDbmValue;
  }

  /** Append one vertex to the polygon being drawn. */
  addPolygonVertex(lat: number, lon: number): void {
    this.polygon.push([lat, lon]);
  }

  /** Close the ring by repeating the first vertex; needs 3+ distinct points. */
  closePolygon(): boolean {
    if (this.polygon.length < 3) return false;
    if (!ringClosed(this.polygon)) this.polygon.push([...this.polygon[0]]);
    return true;
  }

  clearPolygon(): void {
    this.polygon = [];
  }

  get polygonVertices(): LatLon[] {
    return [...this.polygon];
  }

  /** The drawn region, only once it is a valid closed ring. */
  closedPolygon(): LatLon[] | null {
    return ringClosed(this.polygon) ? [...this.polygon] : null;
  }
}
