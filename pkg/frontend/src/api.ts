/**
 * Typed client for the labeling service, plus a send queue that keeps
 * labels through network failures.
 *
 * The server is the source of truth. A retry after an ambiguous failure
 * may deliver the same label twice; the service treats a repeat for the
 * same (record_id, annotator_id) as an overwrite, so that is safe.
 */

export type Label = "Generic" | "Particular" | "Unclear";

export const LABELS: readonly Label[] = ["Generic", "Particular", "Unclear"];

export interface UiItem {
  record_id: string;
  sentence: string;
  context_excerpt: string;
  label: Label | null;
}

export interface Report {
  n_items: number;
  n_double_labeled: number;
  percent_agreement: number | null;
  distribution: Record<string, number>;
  kappa: number | null;
}

export interface SubmitResult {
  ok: boolean;
  overwrite: boolean;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** The server answered with an error status; retrying will not help. */
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorMessage(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") {
      return body.error;
    }
  } catch {
    // not a JSON error body, use the status line instead
  }
  return `request failed with status ${res.status}`;
}

export class Client {
  private fetchImpl: FetchLike;

  constructor(fetchImpl?: FetchLike, private base: string = "") {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async getJson(path: string): Promise<unknown> {
    const res = await this.fetchImpl(this.base + path);
    if (!res.ok) {
      throw new ApiError(res.status, await errorMessage(res));
    }
    return res.json();
  }

  /** Active batch with this annotator's current label on every item. */
  async batch(annotatorId: string): Promise<UiItem[]> {
    const path = "/api/batch?annotator=" + encodeURIComponent(annotatorId);
    return (await this.getJson(path)) as UiItem[];
  }

  async report(): Promise<Report> {
    return (await this.getJson("/api/report")) as Report;
  }

  async submit(recordId: string, annotatorId: string,
               label: Label): Promise<SubmitResult> {
    const res = await this.fetchImpl(this.base + "/api/label", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        record_id: recordId,
        annotator_id: annotatorId,
        label: label,
      }),
    });
    if (!res.ok) {
      throw new ApiError(res.status, await errorMessage(res));
    }
    return (await res.json()) as SubmitResult;
  }
}

export interface PendingLabel {
  record_id: string;
  annotator_id: string;
  label: Label;
}

export interface QueueState {
  pending: number;
  retrying: boolean;
}

export interface QueueOptions {
  onState?: (state: QueueState) => void;
  onReject?: (entry: PendingLabel, message: string) => void;
  retryMs?: number;
}

/**
 * FIFO queue of labels awaiting server confirmation.
 *
 * An entry leaves the queue only on a server response: success dequeues
 * it, a definitive rejection (4xx) dequeues it and reports through
 * onReject, and a network failure keeps it at the head and schedules a
 * retry. Nothing is dropped silently.
 */
export class LabelQueue {
  private entries: PendingLabel[] = [];
  private inflight: Promise<void> | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private retrying = false;
  private onState: (state: QueueState) => void;
  private onReject: (entry: PendingLabel, message: string) => void;
  private retryMs: number;

  constructor(private client: Client, opts: QueueOptions = {}) {
    this.onState = opts.onState ?? (() => {});
    this.onReject = opts.onReject ?? (() => {});
    this.retryMs = opts.retryMs ?? 2000;
  }

  get state(): QueueState {
    return { pending: this.entries.length, retrying: this.retrying };
  }

  push(entry: PendingLabel): void {
    this.entries.push(entry);
    this.notify();
    this.kick();
  }

  /** Send now instead of waiting out the retry delay. */
  retryNow(): void {
    this.kick();
  }

  /**
   * Resolves when the current send pass has finished. The queue may
   * still hold entries afterwards if the pass ended in a network
   * failure and a retry is scheduled.
   */
  settle(): Promise<void> {
    return this.inflight ?? Promise.resolve();
  }

  private kick(): void {
    if (this.inflight) {
      return;
    }
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.inflight = this.drain().finally(() => {
      this.inflight = null;
      // A push that raced the tail of this pass saw inflight set and
      // did not start one; pick its entry up here.
      if (this.entries.length > 0 && this.timer === null) {
        this.kick();
      }
    });
  }

  private async drain(): Promise<void> {
    while (this.entries.length > 0) {
      const head = this.entries[0];
      try {
        await this.client.submit(head.record_id, head.annotator_id, head.label);
      } catch (err) {
        if (err instanceof ApiError) {
          // The server understood the request and said no; a retry
          // cannot change the outcome.
          this.entries.shift();
          this.onReject(head, err.message);
          this.notify();
          continue;
        }
        this.retrying = true;
        this.notify();
        this.timer = setTimeout(() => this.kick(), this.retryMs);
        return;
      }
      this.entries.shift();
      this.retrying = false;
      this.notify();
    }
  }

  private notify(): void {
    this.onState(this.state);
  }
}
