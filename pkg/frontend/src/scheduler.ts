// Debounced latest-wins request scheduling. Slider scrubbing fires many
// parameter changes; only the newest matters. Each fire aborts the in-flight
// request and stale responses (older tokens) are dropped, so whatever lands
// in onResult always corresponds to the most recent request.

export interface SchedulerCallbacks<P, R> {
  fetcher: (params: P, signal: AbortSignal) => Promise<R>;
  onResult: (result: R, params: P) => void;
  onError: (error: unknown, params: P) => void;
}

export class RenderScheduler<P, R> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private controller: AbortController | null = null;
  private token = 0;
  private pendingCount = 0;

  constructor(private callbacks: SchedulerCallbacks<P, R>,
              private debounceMs = 100) {}

  /** True while a request is debouncing or in flight. */
  get pending(): boolean {
    return this.timer !== null || this.pendingCount > 0;
  }

  request(params: P): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire(params);
    }, this.debounceMs);
  }

  /** Skip the debounce (initial load, discrete toggles). */
  requestNow(params: P): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.fire(params);
  }

  private fire(params: P): void {
    const myToken = ++this.token;
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    this.pendingCount++;
    this.callbacks.fetcher(params, controller.signal).then(
      (result) => {
        this.pendingCount--;
        if (myToken === this.token) this.callbacks.onResult(result, params);
      },
      (error) => {
        this.pendingCount--;
        if (myToken !== this.token) return;            // superseded
        if (controller.signal.aborted) return;         // cancelled
        this.callbacks.onError(error, params);
      },
    );
  }
}
