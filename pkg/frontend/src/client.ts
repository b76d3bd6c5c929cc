/**
 * Labeling session state machine, free of DOM concerns so it can be driven
 * by browser key events or a test script alike.
 *
 * Hard rules: at most one in-flight submission (rating keys are inert while
 * one is pending), unknown keys never produce a request, and every submitted
 * value originates from the keystroke table. A failed POST leaves the
 * current item in place: network errors raise the retry banner, HTTP 422
 * raises the schema-skew alert.
 */

import { keyToValue, type Task } from "./keymap.js";
import { parseStats, type StatsViewModel } from "./statsView.js";

export interface CurrentItem {
  imageId: string;
  imageUrl: string;
  task: Task;
  labeled: number;
  total: number;
  warning?: string;
}

export interface Banner {
  kind: "retry" | "schema" | "done";
  message: string;
}

export interface Submission {
  imageId: string;
  task: Task;
  value: number;
}

export interface UiState {
  task: Task;
  raterId: string;
  strategy: "sequential" | "uncertain";
  current: CurrentItem | null;
  pending: boolean;
  stats: StatsViewModel | null;
  banner: Banner | null;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  baseUrl?: string;
  raterId: string;
  task: Task;
  strategy?: "sequential" | "uncertain";
  fetchFn?: FetchLike;
  onChange?: (state: UiState) => void;
}

export class LabelingClient {
  readonly state: UiState;
  readonly submissions: Submission[] = [];
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;
  private readonly onChange: (state: UiState) => void;

  constructor(opts: ClientOptions) {
    this.baseUrl = (opts.baseUrl ?? "").replace(/\/$/, "");
    this.fetchFn = opts.fetchFn ?? ((url, init) => fetch(url, init));
    this.onChange = opts.onChange ?? (() => {});
    this.state = {
      task: opts.task,
      raterId: opts.raterId,
      strategy: opts.strategy ?? "sequential",
      current: null,
      pending: false,
      stats: null,
      banner: null,
    };
  }

  private emit(): void {
    this.onChange(this.state);
  }

  async start(): Promise<void> {
    await this.fetchNext();
    await this.refreshStats();
  }

  async switchTask(task: Task): Promise<void> {
    if (this.state.pending) return;
    this.state.task = task;
    this.state.current = null;
    this.state.banner = null;
    await this.start();
  }

  /** Rating keystroke entry point; anything unmapped is silently ignored. */
  async handleKey(key: string): Promise<void> {
    if (this.state.pending || this.state.current === null) return;
    const value = keyToValue(this.state.task, key);
    if (value === null) return;
    await this.submit(value);
  }

  async submit(value: number): Promise<void> {
    const item = this.state.current;
    if (this.state.pending || item === null) return;
    this.state.pending = true;
    this.state.banner = null;
    this.emit();
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/api/labels`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({
          image_id: item.imageId,
          task: this.state.task,
          value,
          rater_id: this.state.raterId,
        }),
      });
    } catch {
      this.state.pending = false;
      this.state.banner = { kind: "retry", message: "network failure; rating not recorded, try again" };
      this.emit();
      return;
    }
    if (response.status === 201) {
      this.submissions.push({ imageId: item.imageId, task: this.state.task, value });
      this.state.pending = false;
      await this.fetchNext();
      await this.refreshStats();
      return;
    }
    this.state.pending = false;
    if (response.status === 422) {
      this.state.banner = {
        kind: "schema",
        message: "the server rejected the rating schema; reload the page (client/server version skew)",
      };
    } else {
      this.state.banner = { kind: "retry", message: `server error ${response.status}; try again` };
    }
    this.emit();
  }

  async fetchNext(): Promise<void> {
    const params = new URLSearchParams({
      task: this.state.task,
      rater: this.state.raterId,
      strategy: this.state.strategy,
    });
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/api/next?${params}`);
    } catch {
      this.state.banner = { kind: "retry", message: "network failure while fetching the next image" };
      this.emit();
      return;
    }
    if (response.status === 404) {
      this.state.current = null;
      this.state.banner = { kind: "done", message: "every image is labeled for this task; pick another" };
      this.emit();
      return;
    }
    if (!response.ok) {
      this.state.banner = { kind: "retry", message: `server error ${response.status} fetching next image` };
      this.emit();
      return;
    }
    const body = await response.json();
    this.state.current = {
      imageId: body.image_id,
      imageUrl: body.image_url,
      task: this.state.task,
      labeled: body.progress?.labeled ?? 0,
      total: body.progress?.total ?? 0,
      warning: body.warning,
    };
    this.emit();
  }

  async refreshStats(): Promise<void> {
    try {
      const response = await this.fetchFn(`${this.baseUrl}/api/stats?task=${this.state.task}`);
      this.state.stats = response.ok ? parseStats(await response.json()) : null;
    } catch {
      this.state.stats = null; // stats panel hides; labeling is unaffected
    }
    this.emit();
  }
}
