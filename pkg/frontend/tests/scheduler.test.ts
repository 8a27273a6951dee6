import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { RenderScheduler } from "../src/scheduler.js";

interface Deferred {
  params: number;
  signal: AbortSignal;
  resolve: (v: string) => void;
  reject: (e: unknown) => void;
}

function makeHarness(debounceMs = 100) {
  const calls: Deferred[] = [];
  const results: Array<{ value: string; params: number }> = [];
  const errors: unknown[] = [];
  const scheduler = new RenderScheduler<number, string>({
    fetcher: (params, signal) =>
      new Promise<string>((resolve, reject) => {
        calls.push({ params, signal, resolve, reject });
      }),
    onResult: (value, params) => results.push({ value, params }),
    onError: (error) => errors.push(error),
  }, debounceMs);
  return { scheduler, calls, results, errors };
}

beforeEach(() => vi.useFakeTimers());
afterEach(() => vi.useRealTimers());

describe("debouncing", () => {
  it("collapses a rapid scrub into one request for the final value", () => {
    const { scheduler, calls } = makeHarness();
    for (let v = 1; v <= 9; v++) scheduler.request(v);
    expect(calls.length).toBe(0);
    vi.advanceTimersByTime(100);
    expect(calls.length).toBe(1);
    expect(calls[0].params).toBe(9);
  });

  it("spaced requests each fire", () => {
    const { scheduler, calls } = makeHarness();
    scheduler.request(1);
    vi.advanceTimersByTime(150);
    scheduler.request(2);
    vi.advanceTimersByTime(150);
    expect(calls.map((c) => c.params)).toEqual([1, 2]);
  });
});

describe("latest-wins delivery", () => {
  it("drops an out-of-order late response", async () => {
    const { scheduler, calls, results } = makeHarness();
    scheduler.request(1);
    vi.advanceTimersByTime(100);
    scheduler.request(2);
    vi.advanceTimersByTime(100);
    expect(calls.length).toBe(2);
    // the older request resolves after the newer one
    calls[1].resolve("new");
    await vi.waitFor(() => expect(results.length).toBe(1));
    calls[0].resolve("old");
    await Promise.resolve();
    expect(results).toEqual([{ value: "new", params: 2 }]);
  });

  it("aborts the in-flight request when superseded", () => {
    const { scheduler, calls } = makeHarness();
    scheduler.request(1);
    vi.advanceTimersByTime(100);
    expect(calls[0].signal.aborted).toBe(false);
    scheduler.request(2);
    vi.advanceTimersByTime(100);
    expect(calls[0].signal.aborted).toBe(true);
    expect(calls[1].signal.aborted).toBe(false);
  });

  it("final displayed result always matches the final request", async () => {
    const { scheduler, calls, results } = makeHarness();
    for (const v of [1, 2, 3]) {
      scheduler.request(v);
      vi.advanceTimersByTime(100);
    }
    // resolve in scrambled order; only the last request may deliver
    calls[0].resolve("a");
    calls[2].resolve("c");
    calls[1].resolve("b");
    await vi.waitFor(() => expect(results.length).toBe(1));
    expect(results[0]).toEqual({ value: "c", params: 3 });
  });
});

describe("errors", () => {
  it("reports errors for the current request only", async () => {
    const { scheduler, calls, errors } = makeHarness();
    scheduler.request(1);
    vi.advanceTimersByTime(100);
    calls[0].reject(new Error("boom"));
    await vi.waitFor(() => expect(errors.length).toBe(1));
  });

  it("suppresses abort errors from superseded requests", async () => {
    const { scheduler, calls, errors, results } = makeHarness();
    scheduler.request(1);
    vi.advanceTimersByTime(100);
    scheduler.request(2);
    vi.advanceTimersByTime(100);
    calls[0].reject(new DOMException("aborted", "AbortError"));
    calls[1].resolve("ok");
    await vi.waitFor(() => expect(results.length).toBe(1));
    expect(errors.length).toBe(0);
  });
});

describe("pending marker", () => {
  it("is set while debouncing or in flight and cleared after delivery", async () => {
    const { scheduler, calls } = makeHarness();
    expect(scheduler.pending).toBe(false);
    scheduler.request(1);
    expect(scheduler.pending).toBe(true);
    vi.advanceTimersByTime(100);
    expect(scheduler.pending).toBe(true);
    calls[0].resolve("done");
    await vi.waitFor(() => expect(scheduler.pending).toBe(false));
  });
});
