/** Rating-session state machine, independent of the DOM.
 *
 * Invariants enforced here rather than in the view layer:
 *  - submit stays disabled until the audio has been played and a score picked;
 *  - one displayed item yields at most one in-flight submission (double
 *    clicks collapse into a single request);
 *  - the view object never carries the annotation's source, so the UI cannot
 *    reveal which set an annotation came from.
 */

import { ApiClient, ApiError, ApiItem } from "./api.js";

export const SCORE_LABELS: Record<number, string> = {
  1: "Bad",
  2: "Poor",
  3: "Fair",
  4: "Good",
  5: "Excellent",
};

export const RATING_QUESTION =
  "Please listen to the provided audio samples and rate the quality of the " +
  "text annotation based on its accuracy, completeness, and presence of " +
  "false information.";

export type FlowStatus =
  | "idle"
  | "loading"
  | "rating"
  | "submitting"
  | "done"
  | "error";

export interface RatingView {
  audioUrl: string;
  annotationText: string;
  played: boolean;
  score: number | null;
  canSubmit: boolean;
  /** Items rated so far in this session. */
  rated: number;
}

export class RatingFlow {
  private status: FlowStatus = "idle";
  private raterId: string | null = null;
  private current: ApiItem | null = null;
  private played = false;
  private score: number | null = null;
  private rated = 0;
  private errorMessage = "";
  private listeners: Array<() => void> = [];

  constructor(private readonly client: ApiClient) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get state(): FlowStatus {
    return this.status;
  }

  get error(): string {
    return this.errorMessage;
  }

  get view(): RatingView | null {
    if (!this.current) return null;
    return {
      audioUrl: this.current.audio_uri,
      annotationText: this.current.annotation_text,
      played: this.played,
      score: this.score,
      canSubmit: this.canSubmit,
      rated: this.rated,
    };
  }

  get canSubmit(): boolean {
    return (
      this.status === "rating" && this.played && this.score !== null
    );
  }

  async start(): Promise<void> {
    this.status = "loading";
    this.notify();
    try {
      this.raterId = await this.client.createSession();
      await this.advance();
    } catch (err) {
      this.fail(err);
    }
  }

  markPlayed(): void {
    if (this.status !== "rating") return;
    this.played = true;
    this.notify();
  }

  selectScore(score: number): void {
    if (this.status !== "rating") return;
    if (!(score in SCORE_LABELS)) {
      throw new RangeError(`score must be 1..5, got ${score}`);
    }
    this.score = score;
    this.notify();
  }

  /** Submit the current rating and advance. No-op unless submittable. */
  async submit(): Promise<void> {
    if (!this.canSubmit || !this.current || !this.raterId) return;
    const { sample_id, annotation_source } = this.current;
    const score = this.score as number;
    this.status = "submitting"; // also bars re-entry from a second click
    this.notify();
    try {
      await this.client.submitRating({
        rater_id: this.raterId,
        sample_id,
        annotation_source,
        score,
      });
      this.rated += 1;
      await this.advance();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Re-attempt the step that failed; safe because the server overwrites
   * duplicate (rater, sample, source) submissions. */
  async retry(): Promise<void> {
    if (this.status !== "error") return;
    if (!this.raterId) {
      await this.start();
      return;
    }
    if (this.current && this.played && this.score !== null) {
      this.status = "rating";
      this.notify();
      await this.submit();
      return;
    }
    this.status = "loading";
    this.notify();
    try {
      await this.advance();
    } catch (err) {
      this.fail(err);
    }
  }

  private async advance(): Promise<void> {
    const item = await this.client.nextItem(this.raterId as string);
    this.played = false;
    this.score = null;
    if (item === null) {
      this.current = null;
      this.status = "done";
    } else {
      this.current = item;
      this.status = "rating";
    }
    this.notify();
  }

  private fail(err: unknown): void {
    this.status = "error";
    this.errorMessage =
      err instanceof ApiError ? err.message : `unexpected error: ${String(err)}`;
    this.notify();
  }
}
