/**
 * Session state and the submission protocol, kept free of DOM code so
 * the rules are unit-testable:
 *
 *  - six slider values, clamped to [-4, 4] on a 0.5 grid
 *  - one request in flight at a time; every submission takes a
 *    sequence number, and a response is dropped as stale unless its
 *    number still matches the latest submission
 *  - history is append-only within a session; restoring an entry
 *    copies its request (never edits the entry), so replaying against
 *    the deterministic service reproduces the stored image exactly
 */

import type { RetouchRequest, RetouchResponse } from "./api.js";
import { clampSlider } from "./template.js";

export interface HistoryEntry {
  readonly request: RetouchRequest;
  readonly response: RetouchResponse;
}

export type Mode = "manual" | "auto";

export class SessionState {
  /** Base64 PNG of the loaded, unedited image; null before a drop. */
  image: string | null = null;
  mode: Mode = "manual";
  sliders: number[] = [0, 0, 0, 0, 0, 0];
  lastResponse: RetouchResponse | null = null;

  private history_: HistoryEntry[] = [];
  private seq = 0;
  private pending: number | null = null;

  get history(): readonly HistoryEntry[] {
    return this.history_;
  }

  get inFlight(): boolean {
    return this.pending !== null;
  }

  loadImage(imageB64: string): void {
    this.image = imageB64;
    this.lastResponse = null;
    // sliders and history survive an image swap: the user's style
    // direction is not a property of one photo
  }

  setSlider(index: number, value: number): void {
    if (index < 0 || index >= 6) throw new Error(`no slider ${index}`);
    this.sliders[index] = clampSlider(value);
  }

  /** The request a submission would send right now. */
  buildRequest(): RetouchRequest {
    if (this.image === null) throw new Error("no image loaded");
    const req: RetouchRequest = {
      image: this.image,
      mode: this.mode,
      return_weights: true,
    };
    if (this.mode === "manual") req.delta = [...this.sliders];
    return req;
  }

  /**
   * Claim the next sequence number. The caller sends the request and
   * hands the number back to acceptResponse/abandonRequest.
   */
  beginRequest(): number {
    this.pending = ++this.seq;
    return this.pending;
  }

  /**
   * Record a response if it is current. Returns false (and changes
   * nothing) when a newer submission has superseded `seq`.
   */
  acceptResponse(seq: number, request: RetouchRequest, response: RetouchResponse): boolean {
    if (seq !== this.seq) return false;
    this.pending = null;
    this.lastResponse = response;
    this.history_.push({ request, response });
    if (this.mode === "auto" && response.predicted_target) {
      // predicted target becomes the starting point for manual tweaks
      this.sliders = response.predicted_target.map(
        (target, i) => clampSlider(target - response.attributes_in[i]),
      );
    }
    return true;
  }

  /** A failed submission clears the in-flight latch; state is untouched. */
  abandonRequest(seq: number): void {
    if (seq === this.seq) this.pending = null;
  }

  /**
   * Copy a history entry's request back into the live controls.
   * The entry itself is never modified; resubmitting reproduces the
   * stored image because the service is deterministic.
   */
  restore(index: number): RetouchRequest {
    const entry = this.history_[index];
    if (!entry) throw new Error(`no history entry ${index}`);
    this.image = entry.request.image;
    this.mode = entry.request.mode;
    if (entry.request.delta) this.sliders = [...entry.request.delta];
    return { ...entry.request };
  }
}
