/** Claim negotiation panel: poll-based live state with a terminal latch.
 *
 * GRANTED and DENIED are terminal: once a claim has rendered in a terminal
 * state the panel never shows it leaving that state, whatever a later poll
 * returns. Unauthenticated sessions get a read-only panel. Overlap checks
 * run server-side via the conflicts probe before submission.
 */

import type { ApiClient } from "./api.js";
import type { Claim, ClaimRequest, ClaimState } from "./types.js";

const TERMINAL: ReadonlySet<ClaimState> = new Set(["GRANTED", "DENIED"]);

export interface ClaimView {
  claim: Claim;
  displayedState: ClaimState;
}

export interface ClaimPanelOptions {
  authenticated: boolean;
  pollMs?: number;
  region?: [number, number][];
  onUpdate: (views: ClaimView[]) => void;
  onConflicts?: (conflicts: Claim[]) => void;
  onError?: (message: string) => void;
}

export class ClaimPanel {
  readonly pollMs: number;
  readonly readOnly: boolean;
  private latched = new Map<string, ClaimState>();
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly opts: ClaimPanelOptions,
  ) {
    this.pollMs = opts.pollMs ?? 2000;
    this.readOnly = !opts.authenticated;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.poll(), this.pollMs);
    void this.poll();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Highlight existing claims a prospective claim would collide with. */
  async probeConflicts(req: ClaimRequest): Promise<Claim[]> {
    const conflicts = await this.api.claimConflicts(req);
    this.opts.onConflicts?.(conflicts);
    return conflicts;
  }

  async submit(req: ClaimRequest): Promise<Claim> {
    if (this.readOnly) throw new Error("sign in to submit claims");
    const claim = await this.api.submitClaim(req);
    await this.poll();
    return claim;
  }

  async contest(claimId: string): Promise<Claim> {
    if (this.readOnly) throw new Error("sign in to contest claims");
    const claim = await this.api.contestClaim(claimId);
    await this.poll();
    return claim;
  }

  async poll(): Promise<void> {
    let claims: Claim[];
    try {
      claims = await this.api.listClaims(this.opts.region);
    } catch (err) {
      this.opts.onError?.(err instanceof Error ? err.message : String(err));
      return;
    }
    const views = claims.map((claim) => {
      const latched = this.latched.get(claim.claim_id);
      if (latched !== undefined) {
        return { claim, displayedState: latched };
      }
      if (TERMINAL.has(claim.state)) {
        this.latched.set(claim.claim_id, claim.state);
      }
      return { claim, displayedState: claim.state };
    });
    this.opts.onUpdate(views);
  }
}
