/** Journey editing with previews and an undo stack.
 *
 * Trim and clip previews are pure client-side filters over the journey's
 * record summaries; distance resampling asks the server for a non-committing
 * preview. Nothing mutates the repository until commit, which replays the
 * pending operations in order, each against the previous result.
 */

import type { ApiClient } from "./api.js";
import { pointInRing, ringClosed } from "./geometry.js";
import type { EditOp, EditedJourney, RecordSummary } from "./types.js";

interface PendingEdit {
  op: EditOp;
  preview: RecordSummary[];
}

export class EditSession {
  private original: RecordSummary[] = [];
  private stack: PendingEdit[] = [];
  private loaded = false;

  constructor(
    private readonly api: ApiClient,
    readonly journeyId: string,
  ) {}

  async load(): Promise<RecordSummary[]> {
    this.original = await this.api.journeyRecords(this.journeyId);
    this.stack = [];
    this.loaded = true;
    return this.preview;
  }

  get preview(): RecordSummary[] {
    const top = this.stack[this.stack.length - 1];
    return [...(top ? top.preview : this.original)];
  }

  get pendingOps(): EditOp[] {
    return this.stack.map((e) => e.op);
  }

  /** An open polygon cannot be applied; the UI disables commit with a hint. */
  canClip(ring: [number, number][]): boolean {
    return ringClosed(ring);
  }

  async apply(op: EditOp): Promise<RecordSummary[]> {
    if (!this.loaded) throw new Error("journey not loaded");
    const base = this.preview;
    let next: RecordSummary[];
    if (op.op === "TrimTime") {
      next = base.filter((r) => op.t0_ms <= r.timestamp_ms && r.timestamp_ms < op.t1_ms);
    } else if (op.op === "ClipPolygon") {
      if (!ringClosed(op.ring)) throw new Error("polygon must be closed before filtering");
      next = base.filter((r) => pointInRing(r.lat_deg, r.lon_deg, op.ring));
    } else {
      const result = await this.api.editJourney(this.journeyId, op, true);
      next = result.records;
    }
    this.stack.push({ op, preview: next });
    return [...next];
  }

  /** Pops the last pending edit; no server interaction. */
  undo(): RecordSummary[] {
    this.stack.pop();
    return this.preview;
  }

  /** Replays the pending edits for real, chaining derived journeys. */
  async commit(): Promise<EditedJourney | null> {
    if (!this.loaded) throw new Error("journey not loaded");
    let target = this.journeyId;
    let last: EditedJourney | null = null;
    for (const { op } of this.stack) {
      last = await this.api.editJourney(target, op, false);
      target = last.journey_id;
    }
    this.stack = [];
    return last;
  }
}
