// The watch face: person-id spinner, RESTART, triple-press CLEAN, and a
// live status panel. Deliberately no stop control of any kind — closing
// the page never touches a running measurement.

import { BridgeClient, ConnectionState } from "./bridge.js";
import { StatusPayload } from "./protocol.js";
import {
  CLEAN_PRESSES_REQUIRED,
  CleanGuard,
  cleanPress,
  displayPersonId,
  idleGuard,
  interacted,
  spin,
} from "./state.js";

export class WatchFace {
  personId = 1;
  private guard: CleanGuard = idleGuard;
  private busy = false;

  private readonly roles = new Map<string, HTMLElement>();

  constructor(
    private root: HTMLElement,
    private client: BridgeClient,
    private now: () => number = () => Date.now(),
  ) {
    this.render();
    client.onstatus = (status) => this.showStatus(status);
    client.onconnection = (state) => this.showConnection(state);
    this.showConnection(client.connection);
  }

  private render(): void {
    this.root.innerHTML = `
      <div class="banner" data-role="banner" hidden>
        connection lost
        <button type="button" data-role="reconnect">reconnect</button>
      </div>
      <div class="face">
        <div class="spinner">
          <button type="button" data-role="spin-up" aria-label="next id">&#9650;</button>
          <output data-role="person"></output>
          <button type="button" data-role="spin-down" aria-label="previous id">&#9660;</button>
        </div>
        <button type="button" class="restart" data-role="restart">RESTART</button>
        <button type="button" class="clean" data-role="clean">CLEAN</button>
        <output data-role="clean-progress"></output>
      </div>
      <dl class="panel">
        <dt>state</dt><dd data-role="state">&mdash;</dd>
        <dt>files</dt><dd data-role="files">&mdash;</dd>
        <dt>battery</dt><dd data-role="battery">&mdash;</dd>
        <dt>session</dt><dd data-role="session">&mdash;</dd>
      </dl>`;
    for (const el of this.root.querySelectorAll<HTMLElement>("[data-role]")) {
      this.roles.set(el.dataset.role!, el);
    }
    this.role("spin-up").addEventListener("click", () => this.spinBy(1));
    this.role("spin-down").addEventListener("click", () => this.spinBy(-1));
    this.role("restart").addEventListener("click", () => void this.pressRestart());
    this.role("clean").addEventListener("click", () => void this.pressClean());
    this.role("reconnect").addEventListener("click", () => this.client.reconnect());
    this.showPerson();
  }

  private role(name: string): HTMLElement {
    const el = this.roles.get(name);
    if (!el) throw new Error(`missing element: ${name}`);
    return el;
  }

  spinBy(delta: number): void {
    this.personId = spin(this.personId, delta);
    this.guard = interacted(this.guard);
    this.showCleanProgress(0);
    this.showPerson();
  }

  async pressRestart(): Promise<void> {
    this.guard = interacted(this.guard);
    this.showCleanProgress(0);
    if (this.busy || this.client.connection !== "connected") {
      return;
    }
    this.busy = true;
    try {
      await this.client.sendRestart(this.personId);
    } catch {
      // the connection banner already tells the story
    } finally {
      this.busy = false;
    }
  }

  async pressClean(): Promise<void> {
    const outcome = cleanPress(this.guard, this.now());
    this.guard = outcome.guard;
    this.showCleanProgress(outcome.progress);
    if (!outcome.send) {
      return;
    }
    if (this.busy || this.client.connection !== "connected") {
      return;
    }
    this.busy = true;
    try {
      await this.client.sendClean();
    } catch {
      // ditto
    } finally {
      this.busy = false;
    }
  }

  private showPerson(): void {
    this.role("person").textContent = displayPersonId(this.personId);
  }

  private showCleanProgress(progress: number): void {
    this.role("clean-progress").textContent =
      progress > 0 ? `${progress}/${CLEAN_PRESSES_REQUIRED}` : "";
  }

  private showStatus(status: StatusPayload): void {
    this.role("state").textContent = status.state;
    this.role("files").textContent = String(status.files);
    this.role("battery").textContent = `${status.battery_pct}%`;
    this.role("session").textContent = status.session ?? "—";
  }

  private showConnection(state: ConnectionState): void {
    this.role("banner").hidden = state === "connected";
    this.role("banner").dataset.connection = state;
  }
}
