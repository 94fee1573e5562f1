// Pure UI state: the person-id spinner and the triple-press clean guard.
// Everything here is synchronous and side-effect free so it can be tested
// without a DOM or a device.

export const CLEAN_PRESSES_REQUIRED = 3;
export const CLEAN_WINDOW_MS = 2000;

export interface CleanGuard {
  presses: number;
  lastPressMs: number | null;
}

export const idleGuard: CleanGuard = { presses: 0, lastPressMs: null };

/** The spinner can never hold an impossible id: values wrap modulo 1000. */
export function wrapPersonId(value: number): number {
  return ((Math.trunc(value) % 1000) + 1000) % 1000;
}

export function spin(personId: number, delta: number): number {
  return wrapPersonId(personId + delta);
}

/** Always three digits, 42 -> "042". */
export function displayPersonId(personId: number): string {
  return String(wrapPersonId(personId)).padStart(3, "0");
}

export interface CleanPressOutcome {
  guard: CleanGuard;
  /** true only on the final timely press */
  send: boolean;
  /** presses collected so far (0 after a send) */
  progress: number;
}

/**
 * One press of the clean button. Only the third press inside the window
 * fires; a pause longer than CLEAN_WINDOW_MS starts the count over.
 */
export function cleanPress(guard: CleanGuard, nowMs: number): CleanPressOutcome {
  let presses = guard.presses;
  if (guard.lastPressMs !== null && nowMs - guard.lastPressMs > CLEAN_WINDOW_MS) {
    presses = 0;
  }
  presses += 1;
  if (presses >= CLEAN_PRESSES_REQUIRED) {
    return { guard: { presses: 0, lastPressMs: null }, send: true, progress: 0 };
  }
  return { guard: { presses, lastPressMs: nowMs }, send: false, progress: presses };
}

/** Any other interaction disarms the guard. */
export function interacted(_guard: CleanGuard): CleanGuard {
  return { presses: 0, lastPressMs: null };
}
