import { describe, expect, it } from "vitest";

import {
  CLEAN_WINDOW_MS,
  cleanPress,
  displayPersonId,
  idleGuard,
  interacted,
  spin,
  wrapPersonId,
} from "../src/state.js";

describe("person-id spinner", () => {
  it("wraps 999 + 1 to 000", () => {
    expect(spin(999, 1)).toBe(0);
  });

  it("wraps 000 - 1 to 999", () => {
    expect(spin(0, -1)).toBe(999);
  });

  it("only ever holds possible ids", () => {
    for (let id = 0; id < 1000; id += 37) {
      expect(spin(id, 1)).toBe((id + 1) % 1000);
      expect(spin(id, -1)).toBe((id + 999) % 1000);
    }
    expect(wrapPersonId(-1)).toBe(999);
    expect(wrapPersonId(1000)).toBe(0);
  });

  it("displays three digits", () => {
    expect(displayPersonId(42)).toBe("042");
    expect(displayPersonId(7)).toBe("007");
    expect(displayPersonId(0)).toBe("000");
    expect(displayPersonId(999)).toBe("999");
  });
});

describe("triple-press clean guard", () => {
  it("one press arms but never fires", () => {
    const first = cleanPress(idleGuard, 1000);
    expect(first.send).toBe(false);
    expect(first.progress).toBe(1);
  });

  it("three presses inside the window fire exactly once", () => {
    let guard = idleGuard;
    let fired = 0;
    for (const t of [0, 500, 1000]) {
      const outcome = cleanPress(guard, t);
      guard = outcome.guard;
      if (outcome.send) fired += 1;
    }
    expect(fired).toBe(1);
    expect(guard.presses).toBe(0);
  });

  it("a pause longer than the window restarts the count", () => {
    let guard = cleanPress(idleGuard, 0).guard;
    guard = cleanPress(guard, 500).guard; // 2/3
    const late = cleanPress(guard, 500 + CLEAN_WINDOW_MS + 1);
    expect(late.send).toBe(false); // counted as a fresh first press
    expect(late.progress).toBe(1);
  });

  it("a press exactly at the window edge still counts", () => {
    let guard = cleanPress(idleGuard, 0).guard;
    guard = cleanPress(guard, CLEAN_WINDOW_MS).guard;
    const third = cleanPress(guard, 2 * CLEAN_WINDOW_MS);
    expect(third.send).toBe(true);
  });

  it("any other interaction disarms the guard", () => {
    let guard = cleanPress(idleGuard, 0).guard;
    guard = cleanPress(guard, 100).guard;
    guard = interacted(guard);
    const next = cleanPress(guard, 200);
    expect(next.send).toBe(false);
    expect(next.progress).toBe(1);
  });
});
