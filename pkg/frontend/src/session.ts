import { ApiClient } from "./api.js";
import type { NextResponse, PostPayload, Scheme } from "./types.js";

export type Phase = "idle" | "loading" | "labeling" | "submitting" | "error" | "done";

export interface SessionState {
  phase: Phase;
  post: PostPayload | null;
  ordinal: number;
  total: number;
  labeled: number;
  /** class chosen but not yet acknowledged by the server */
  pendingClass: string | null;
  errorMessage: string | null;
}

/**
 * Labeling session for one annotator.
 *
 * The server is the only label authority: state here mirrors API responses
 * and a selected class survives a failed submit (pendingClass) so a retry
 * resubmits exactly the same label instead of losing or duplicating it.
 */
export class Session {
  state: SessionState = {
    phase: "idle",
    post: null,
    ordinal: 0,
    total: 0,
    labeled: 0,
    pendingClass: null,
    errorMessage: null,
  };
  scheme: Scheme | null = null;
  private listeners: Array<(s: SessionState) => void> = [];

  constructor(
    private readonly api: ApiClient,
    readonly sampleId: string,
    readonly annotator: string,
  ) {}

  onChange(fn: (s: SessionState) => void): void {
    this.listeners.push(fn);
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  /** Classes to render, in scheme order, with merged-away classes hidden. */
  visibleClasses() {
    if (!this.scheme) return [];
    const merged = new Set(Object.keys(this.scheme.merge_map));
    return this.scheme.classes.filter((c) => !merged.has(c.id));
  }

  async start(): Promise<void> {
    this.update({ phase: "loading", errorMessage: null });
    try {
      this.scheme = await this.api.scheme();
      await this.advance();
    } catch (err) {
      this.update({ phase: "error", errorMessage: String(err) });
    }
  }

  private applyNext(next: NextResponse): void {
    if (next.done) {
      this.update({
        phase: "done",
        post: null,
        labeled: next.labeled,
        total: next.total,
        pendingClass: null,
      });
    } else {
      this.update({
        phase: "labeling",
        post: next.post ?? null,
        ordinal: next.ordinal ?? 0,
        total: next.total,
        labeled: next.labeled,
        pendingClass: null,
        errorMessage: null,
      });
    }
  }

  private async advance(): Promise<void> {
    const next = await this.api.next(this.sampleId, this.annotator);
    this.applyNext(next);
  }

  /** Submit a label for the current post and move on. */
  async choose(classId: string): Promise<void> {
    if (this.state.phase !== "labeling" && this.state.phase !== "error") return;
    const post = this.state.post;
    if (!post) return;
    this.update({ phase: "submitting", pendingClass: classId });
    try {
      await this.api.submitLabel(this.sampleId, this.annotator, post.post_id, classId);
      await this.advance();
    } catch (err) {
      // keep the selection; the retry banner resubmits it unchanged
      this.update({ phase: "error", errorMessage: String(err) });
    }
  }

  /** Resubmit the pending label after a failure (idempotent on the server). */
  async retry(): Promise<void> {
    if (this.state.phase !== "error") return;
    if (this.state.pendingClass && this.state.post) {
      await this.choose(this.state.pendingClass);
    } else {
      await this.start();
    }
  }
}
