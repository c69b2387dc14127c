import { describe, expect, it } from "vitest";
import { LatestOnly } from "../src/api.js";

/** a promise resolved or rejected only when the test says so */
function gate<T>() {
  let release!: (v: T) => void;
  let fail!: (e: unknown) => void;
  const p = new Promise<T>((res, rej) => {
    release = res;
    fail = rej;
  });
  return { p, release, fail };
}

describe("LatestOnly", () => {
  it("aborts the previous task's signal when a newer one starts", async () => {
    const lane = new LatestOnly();
    const signals: AbortSignal[] = [];
    const g1 = gate<string>();
    const r1 = lane.run((sig) => {
      signals.push(sig);
      return g1.p;
    });
    const g2 = gate<string>();
    const r2 = lane.run((sig) => {
      signals.push(sig);
      return g2.p;
    });
    expect(signals[0]!.aborted).toBe(true);
    expect(signals[1]!.aborted).toBe(false);
    g1.release("stale");
    g2.release("fresh");
    expect(await r1).toBeNull(); // superseded, swallowed rather than shown
    expect(await r2).toBe("fresh");
  });

  it("returns null when a superseded task rejects late", async () => {
    const lane = new LatestOnly();
    const g1 = gate<string>();
    const r1 = lane.run((sig) => {
      sig.addEventListener("abort", () => g1.fail(new Error("aborted")));
      return g1.p;
    });
    const r2 = lane.run(async () => "fresh");
    expect(await r1).toBeNull();
    expect(await r2).toBe("fresh");
  });

  it("rethrows real failures of the current task", async () => {
    const lane = new LatestOnly();
    await expect(
      lane.run(async () => {
        throw new Error("boom");
      }),
    ).rejects.toThrow("boom");
  });

  it("abort() cancels the task in flight", async () => {
    const lane = new LatestOnly();
    const g = gate<number>();
    const r = lane.run((sig) => {
      sig.addEventListener("abort", () => g.release(-1));
      return g.p;
    });
    lane.abort();
    expect(await r).toBeNull();
  });

  it("runs normally again after an abort", async () => {
    const lane = new LatestOnly();
    lane.abort();
    expect(await lane.run(async () => 5)).toBe(5);
  });
});
