// Websocket client for the device bridge. Responses come back in request
// order, so a FIFO of resolvers pairs them up; status events are routed to
// a callback. On connection loss the client retries exactly once, then
// stays down until the user asks for a reconnect (no silent retry storms).

import {
  BridgeRequest,
  BridgeResponse,
  StatusPayload,
  isStatusEvent,
} from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "lost";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

const browserSocketFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

export class BridgeClient {
  onstatus: ((status: StatusPayload) => void) | null = null;
  onconnection: ((state: ConnectionState) => void) | null = null;

  private socket: SocketLike | null = null;
  private pending: Array<{
    resolve: (response: BridgeResponse) => void;
    reject: (error: Error) => void;
  }> = [];
  private state: ConnectionState = "lost";
  private retried = false;

  constructor(
    private url: string,
    private factory: SocketFactory = browserSocketFactory,
    private retryDelayMs = 500,
  ) {}

  get connection(): ConnectionState {
    return this.state;
  }

  connect(): void {
    this.setState("connecting");
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.retried = false;
      this.setState("connected");
      // prime the live panel: one snapshot, then the push feed
      void this.request({ op: "STATUS" }).then((response) => {
        if (response.ok && this.onstatus) {
          this.onstatus(response.payload as StatusPayload);
        }
      }).catch(() => undefined);
      void this.request({ op: "STREAM_STATUS" }).catch(() => undefined);
    };
    socket.onmessage = (event) => this.handleMessage(String(event.data));
    socket.onerror = () => undefined; // onclose always follows
    socket.onclose = () => this.handleClose();
  }

  /** User-initiated reconnect after the automatic retry gave up. */
  reconnect(): void {
    this.retried = true;
    this.connect();
  }

  request(request: BridgeRequest): Promise<BridgeResponse> {
    if (this.state !== "connected" || this.socket === null) {
      return Promise.reject(new Error("not connected"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.socket!.send(JSON.stringify(request));
    });
  }

  sendRestart(personId: number): Promise<BridgeResponse> {
    return this.request({ op: "SEND", message: { type: "RESTART", person_id: personId } });
  }

  sendClean(): Promise<BridgeResponse> {
    return this.request({ op: "SEND", message: { type: "CLEAN" } });
  }

  close(): void {
    this.retried = true; // do not auto-reconnect a deliberate close
    this.socket?.close();
  }

  private handleMessage(raw: string): void {
    let parsed: unknown;
    try {
      parsed = JSON.parse(raw);
    } catch {
      return;
    }
    if (isStatusEvent(parsed)) {
      this.onstatus?.(parsed.payload);
      return;
    }
    const waiter = this.pending.shift();
    waiter?.resolve(parsed as BridgeResponse);
  }

  private handleClose(): void {
    const waiters = this.pending;
    this.pending = [];
    for (const waiter of waiters) {
      waiter.reject(new Error("connection closed"));
    }
    if (!this.retried) {
      this.retried = true;
      this.setState("connecting");
      setTimeout(() => this.connect(), this.retryDelayMs);
    } else {
      this.setState("lost");
    }
  }

  private setState(state: ConnectionState): void {
    if (state !== this.state) {
      this.state = state;
      this.onconnection?.(state);
    }
  }
}
