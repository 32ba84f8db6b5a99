import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { ClaimPanel, type ClaimView } from "../src/claims.js";
import { makeClaim, makeStub } from "./stub.js";

const REQUEST = {
  low_hz: 470_000_000,
  high_hz: 478_000_000,
  t0_ms: 0,
  t1_ms: 10_000,
  region: [[0, 0], [0, 1], [1, 1], [1, 0], [0, 0]] as [number, number][],
};

function setup(options: { authenticated?: boolean; claims?: ReturnType<typeof makeClaim>[] } = {}) {
  const stub = makeStub({ claims: options.claims ?? [] });
  const updates: ClaimView[][] = [];
  const panel = new ClaimPanel(new ApiClient(stub.transport), {
    authenticated: options.authenticated ?? true,
    onUpdate: (views) => updates.push(views),
  });
  return { stub, panel, updates };
}

const latest = (updates: ClaimView[][]) => updates[updates.length - 1];

describe("claim panel", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("is read-only without authentication", async () => {
    const { panel } = setup({ authenticated: false });
    expect(panel.readOnly).toBe(true);
    await expect(panel.submit(REQUEST)).rejects.toThrow(/sign in/);
  });

  it("read-only panels still observe claim states", async () => {
    const { panel, updates } = setup({
      authenticated: false,
      claims: [makeClaim("c1", "PROPOSED")],
    });
    await panel.poll();
    expect(latest(updates).map((v) => v.displayedState)).toEqual(["PROPOSED"]);
  });

  it("submits and then shows the proposed claim", async () => {
    const { stub, panel, updates } = setup();
    const claim = await panel.submit(REQUEST);
    expect(claim.state).toBe("PROPOSED");
    expect(stub.requests.some((r) => r.method === "POST" && r.path === "/v1/claims")).toBe(true);
    expect(latest(updates).map((v) => v.claim.claim_id)).toContain(claim.claim_id);
  });

  it("probes conflicts before submission", async () => {
    const existing = makeClaim("granted-1", "GRANTED");
    const { stub, panel } = setup({ claims: [existing] });
    const conflicts = await panel.probeConflicts(REQUEST);
    expect(conflicts.map((c) => c.claim_id)).toEqual(["granted-1"]);
    expect(stub.requests[0].path).toContain("/v1/claims/conflicts");
    const clear = await panel.probeConflicts({ ...REQUEST, low_hz: 700_000_000, high_hz: 708_000_000 });
    expect(clear).toEqual([]);
  });

  it("polls on the configured cadence and follows live transitions", async () => {
    const { stub, panel, updates } = setup({ claims: [makeClaim("c1", "PROPOSED")] });
    panel.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(latest(updates)[0].displayedState).toBe("PROPOSED");

    stub.claims[0].state = "CONTESTED";
    await vi.advanceTimersByTimeAsync(2000);
    expect(latest(updates)[0].displayedState).toBe("CONTESTED");

    stub.claims[0].state = "GRANTED";
    await vi.advanceTimersByTimeAsync(2000);
    expect(latest(updates)[0].displayedState).toBe("GRANTED");
    panel.stop();
  });

  it("never renders a transition out of GRANTED or DENIED", async () => {
    const { stub, panel, updates } = setup({
      claims: [makeClaim("g1", "GRANTED"), makeClaim("d1", "DENIED", 500_000_000)],
    });
    panel.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(latest(updates).map((v) => v.displayedState)).toEqual(["GRANTED", "DENIED"]);

    // a misbehaving upstream reports them active again; the panel holds
    stub.claims[0].state = "CONTESTED";
    stub.claims[1].state = "PROPOSED";
    await vi.advanceTimersByTimeAsync(2000);
    expect(latest(updates).map((v) => v.displayedState)).toEqual(["GRANTED", "DENIED"]);
    panel.stop();
  });

  it("stop halts polling", async () => {
    const { stub, panel } = setup({ claims: [makeClaim("c1", "PROPOSED")] });
    panel.start();
    await vi.advanceTimersByTimeAsync(0);
    panel.stop();
    const count = stub.requests.length;
    await vi.advanceTimersByTimeAsync(10_000);
    expect(stub.requests.length).toBe(count);
  });
});
