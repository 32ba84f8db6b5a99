/** Occupancy map controller.
 *
 * The threshold slider is pure view state until the debounce settles; then
 * exactly one GET /v1/occupancy goes out with the slider-derived threshold.
 * At most one request is live (latest wins), a failed request never clears
 * the previous layer, and oversized results are re-requested at a coarser
 * cell size.
 */

import type { ApiClient } from "./api.js";
import type { ViewState } from "./state.js";
import type { OccupancyFeature } from "./types.js";

export const DUTY_COLORS = [
  "#1a9850", "#66bd63", "#a6d96a", "#d9ef8b", "#fee08b",
  "#fdae61", "#f46d43", "#d73027", "#a50026", "#67001f",
];

export function colorForDuty(duty: number): string {
  const decile = Math.min(DUTY_COLORS.length - 1, Math.floor(duty * 10));
  return DUTY_COLORS[Math.max(0, decile)];
}

export interface LegendEntry {
  low: number;
  high: number;
  color: string;
}

export function dutyLegend(): LegendEntry[] {
  return DUTY_COLORS.map((color, i) => ({ low: i / 10, high: (i + 1) / 10, color }));
}

export interface LayerCell {
  ring: [number, number][]; // [lon, lat] outline straight from the GeoJSON
  channel: number;
  dutyCycle: number;
  sampleCount: number;
  color: string;
}

export interface OccupancyLayer {
  cells: LayerCell[];
  legend: LegendEntry[];
  thresholdDbm: number;
  cellDeg: number;
}

export interface OccupancyViewOptions {
  debounceMs?: number;
  maxCells?: number;
  baseCellDeg?: number;
  onLayer: (layer: OccupancyLayer) => void;
  onError: (message: string) => void;
  onNotice?: (message: string) => void;
}

export class OccupancyView {
  private epoch = 0;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private lastLayer: OccupancyLayer | null = null;

  readonly debounceMs: number;
  readonly maxCells: number;
  baseCellDeg: number;

  constructor(
    private readonly api: ApiClient,
    private readonly state: ViewState,
    private readonly opts: OccupancyViewOptions,
  ) {
    this.debounceMs = opts.debounceMs ?? 300;
    this.maxCells = opts.maxCells ?? 10_000;
    this.baseCellDeg = opts.baseCellDeg ?? 0.1;
  }

  get layer(): OccupancyLayer | null {
    return this.lastLayer;
  }

  /** Slider input: update view state only; the query fires when it settles. */
  onThresholdInput(dbm: number): number {
    const clamped = this.state.setThreshold(dbm);
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.refresh();
    }, this.debounceMs);
    return clamped;
  }

  async refresh(): Promise<void> {
    const epoch = ++this.epoch;
    let cellDeg = this.baseCellDeg;
    try {
      for (;;) {
        const collection = await this.api.occupancy(
          this.state.viewport,
          cellDeg,
          this.state.activePlan,
          this.state.thresholdDbm,
          this.state.selectedCampaign ?? undefined,
        );
        if (epoch !== this.epoch) return; // a newer request superseded this one
        if (collection.features.length > this.maxCells) {
          cellDeg *= 2; // too dense for the viewport: coarsen and retry
          continue;
        }
        const layer = this.buildLayer(collection.features, cellDeg);
        this.lastLayer = layer;
        this.opts.onLayer(layer);
        if (layer.cells.length === 0) this.opts.onNotice?.("no data in view");
        return;
      }
    } catch (err) {
      if (epoch !== this.epoch) return;
      // keep the stale layer on screen; only surface the failure
      this.opts.onError(err instanceof Error ? err.message : String(err));
    }
  }

  private buildLayer(features: OccupancyFeature[], cellDeg: number): OccupancyLayer {
    const cells = features.map((f) => ({
      ring: f.geometry.coordinates[0],
      channel: f.properties.channel,
      dutyCycle: f.properties.duty_cycle,
      sampleCount: f.properties.sample_count,
      color: colorForDuty(f.properties.duty_cycle),
    }));
    return {
      cells,
      legend: dutyLegend(),
      thresholdDbm: this.state.thresholdDbm,
      cellDeg,
    };
  }
}
