import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { OccupancyView, colorForDuty, dutyLegend, type OccupancyLayer } from "../src/occupancy.js";
import { ViewState } from "../src/state.js";
import { makeStub, type FixturePoint } from "./stub.js";

const POINTS: FixturePoint[] = [
  // cell (0,0): two hot samples, one quiet
  { lat: 0.02, lon: 0.02, power: -50 },
  { lat: 0.03, lon: 0.03, power: -70 },
  { lat: 0.04, lon: 0.04, power: -120 },
  // cell (1,1): all quiet
  { lat: 0.15, lon: 0.15, power: -100 },
  { lat: 0.16, lon: 0.16, power: -95 },
];

function setup(options: { points?: FixturePoint[]; maxCells?: number; fail?: boolean } = {}) {
  const stub = makeStub({ points: options.points ?? POINTS, failOccupancy: options.fail });
  const state = new ViewState();
  state.viewport = { minLat: 0, minLon: 0, maxLat: 1, maxLon: 1 };
  const layers: OccupancyLayer[] = [];
  const errors: string[] = [];
  const notices: string[] = [];
  const view = new OccupancyView(new ApiClient(stub.transport), state, {
    maxCells: options.maxCells,
    onLayer: (layer) => layers.push(layer),
    onError: (message) => errors.push(message),
    onNotice: (message) => notices.push(message),
  });
  return { stub, state, view, layers, errors, notices };
}

describe("occupancy view", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("issues exactly one GET /v1/occupancy after the slider settles", async () => {
    const { stub, view } = setup();
    view.onThresholdInput(-80);
    view.onThresholdInput(-75);
    view.onThresholdInput(-60);
    expect(stub.requests).toHaveLength(0); // pure view state until debounce
    await vi.advanceTimersByTimeAsync(400);
    expect(stub.requests).toHaveLength(1);
    const req = stub.requests[0];
    expect(req.method).toBe("GET");
    expect(req.path).toContain("/v1/occupancy");
    expect(req.path).toContain("threshold_dbm=-60");
  });

  it("only ever calls the occupancy endpoint", async () => {
    const { stub, view } = setup();
    view.onThresholdInput(-90);
    await vi.advanceTimersByTimeAsync(400);
    await view.refresh();
    expect(stub.requests.length).toBeGreaterThan(0);
    for (const req of stub.requests) {
      expect(req.method).toBe("GET");
      expect(req.path.startsWith("/v1/occupancy?")).toBe(true);
    }
  });

  it("clamps slider values to the supported range", () => {
    const { view, state } = setup();
    expect(view.onThresholdInput(-500)).toBe(-120);
    expect(view.onThresholdInput(0)).toBe(-30);
    expect(state.thresholdDbm).toBe(-30);
  });

  it("renders non-increasing duty per cell when the threshold is raised", async () => {
    const { view, layers } = setup();
    view.onThresholdInput(-85);
    await vi.advanceTimersByTimeAsync(400);
    view.onThresholdInput(-60);
    await vi.advanceTimersByTimeAsync(400);
    expect(layers).toHaveLength(2);
    const key = (c: { ring: [number, number][]; channel: number }) =>
      JSON.stringify([c.ring[0], c.channel]);
    const before = new Map(layers[0].cells.map((c) => [key(c), c.dutyCycle]));
    expect(before.size).toBeGreaterThan(0);
    for (const cell of layers[1].cells) {
      const prev = before.get(key(cell));
      expect(prev).toBeDefined();
      expect(cell.dutyCycle).toBeLessThanOrEqual(prev!);
    }
  });

  it("keeps the previous layer and surfaces the error on failure", async () => {
    const { stub, view, layers, errors } = setup();
    await view.refresh();
    expect(layers).toHaveLength(1);
    stub.options.failOccupancy = true;
    await view.refresh();
    expect(errors).toHaveLength(1);
    expect(layers).toHaveLength(1); // nothing cleared, nothing re-rendered
    expect(view.layer).toBe(layers[0]);
  });

  it("reports no data for an empty viewport", async () => {
    const { view, layers, notices } = setup({ points: [] });
    await view.refresh();
    expect(layers).toHaveLength(1);
    expect(layers[0].cells).toHaveLength(0);
    expect(notices).toContain("no data in view");
  });

  it("drops stale responses (latest wins)", async () => {
    let releaseFirst: (() => void) | null = null;
    const stub = makeStub({
      points: POINTS,
      gate: (req) => {
        if (req.path.includes("threshold_dbm=-85") && !releaseFirst) {
          return new Promise<void>((resolve) => {
            releaseFirst = resolve;
          });
        }
        return Promise.resolve();
      },
    });
    const state = new ViewState();
    state.viewport = { minLat: 0, minLon: 0, maxLat: 1, maxLon: 1 };
    const layers: OccupancyLayer[] = [];
    const view = new OccupancyView(new ApiClient(stub.transport), state, {
      onLayer: (layer) => layers.push(layer),
      onError: () => {},
    });

    state.setThreshold(-85);
    const first = view.refresh(); // stalls in the gate
    state.setThreshold(-60);
    await view.refresh(); // completes immediately
    releaseFirst!();
    await first;
    expect(layers).toHaveLength(1);
    expect(layers[0].thresholdDbm).toBe(-60);
  });

  it("re-requests at a coarser cell size over the budget", async () => {
    const { stub, view, layers } = setup({ maxCells: 1 });
    await view.refresh();
    expect(stub.requests.length).toBeGreaterThan(1);
    const first = new URL(stub.requests[0].path, "http://x").searchParams;
    const last = new URL(stub.requests[stub.requests.length - 1].path, "http://x").searchParams;
    expect(Number(last.get("cell_deg"))).toBeGreaterThan(Number(first.get("cell_deg")));
    expect(layers[0].cells.length).toBeLessThanOrEqual(1);
  });
});

describe("legend", () => {
  it("maps duty deciles to stable colors", () => {
    const legend = dutyLegend();
    expect(legend).toHaveLength(10);
    expect(legend[0].low).toBe(0);
    expect(legend[9].high).toBe(1);
    expect(colorForDuty(0.0)).toBe(legend[0].color);
    expect(colorForDuty(0.55)).toBe(legend[5].color);
    expect(colorForDuty(1.0)).toBe(legend[9].color);
  });
});
