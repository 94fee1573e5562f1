// Wire shapes of the device bridge: one JSON object per websocket message,
// exactly one response per request; a connection that asked for
// STREAM_STATUS additionally receives {"event": "status"} pushes.

export interface StatusPayload {
  state: "BootedIdle" | "Measuring" | "Degraded" | "ShutDown";
  watch_id: string;
  person_id: number | null;
  t_ms: number;
  files: number;
  session: string | null;
  battery_pct: number;
}

export type ControlMessage =
  | { type: "RESTART"; person_id: number }
  | { type: "CLEAN" };

export type BridgeRequest =
  | { op: "STATUS" }
  | { op: "STREAM_STATUS" }
  | { op: "LIST_FILES" }
  | { op: "PULL_FILE"; name: string }
  | { op: "PUSH_CONFIG"; text: string }
  | { op: "SEND"; message: ControlMessage };

export interface BridgeResponse {
  ok: boolean;
  payload?: unknown;
  reason?: string;
}

export interface StatusEvent {
  event: "status";
  payload: StatusPayload;
}

export function isStatusEvent(value: unknown): value is StatusEvent {
  return typeof value === "object" && value !== null &&
    (value as { event?: unknown }).event === "status";
}
