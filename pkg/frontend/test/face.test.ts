import { beforeEach, describe, expect, it } from "vitest";

import { BridgeClient } from "../src/bridge.js";
import { WatchFace } from "../src/face.js";
import { FakeDevice, FakeSocket } from "./fakes.js";

let clock = 0;

function mounted() {
  const device = new FakeDevice();
  const socket = new FakeSocket(device);
  const client = new BridgeClient("ws://test", () => socket);
  const root = document.createElement("div");
  document.body.append(root);
  const face = new WatchFace(root, client, () => clock);
  client.connect();
  socket.open();
  return { device, socket, client, root, face };
}

function text(root: HTMLElement, role: string): string {
  return root.querySelector(`[data-role="${role}"]`)!.textContent ?? "";
}

beforeEach(() => {
  clock = 0;
  document.body.innerHTML = "";
});

describe("rendered face", () => {
  it("shows the three-digit person id and wraps in both directions", () => {
    const { root, face } = mounted();
    expect(text(root, "person")).toBe("001");
    face.personId = 999;
    face.spinBy(1);
    expect(text(root, "person")).toBe("000");
    face.spinBy(-1);
    expect(text(root, "person")).toBe("999");
  });

  it("has no stop affordance anywhere in the DOM", () => {
    const { root } = mounted();
    expect(root.innerHTML).not.toMatch(/stop/i);
    const labels = [...root.querySelectorAll("button")].map((b) => b.textContent?.trim());
    expect(labels).toContain("RESTART");
    expect(labels).toContain("CLEAN");
    expect(labels.some((l) => /stop|pause|halt|end/i.test(l ?? ""))).toBe(false);
  });

  it("restart sends exactly one message and the panel goes live", async () => {
    const { root, face, socket, device } = mounted();
    await Promise.resolve(); // initial STATUS snapshot
    expect(text(root, "state")).toBe("BootedIdle");
    face.personId = 7;
    await face.pressRestart();
    const sends = socket.sendRequests();
    expect(sends).toHaveLength(1);
    expect(sends[0]).toEqual({ op: "SEND", message: { type: "RESTART", person_id: 7 } });
    expect(device.status.state).toBe("Measuring");
    expect(device.status.person_id).toBe(7);
    expect(text(root, "state")).toBe("Measuring");
    expect(text(root, "files")).toBe("4");
  });

  it("restart keeps the spinner value", async () => {
    const { root, face } = mounted();
    face.personId = 321;
    face.spinBy(0);
    await face.pressRestart();
    expect(text(root, "person")).toBe("321");
  });

  it("fewer than three clean presses send nothing", async () => {
    const { face, socket, root } = mounted();
    await face.pressClean();
    clock += 300;
    await face.pressClean();
    expect(socket.sendRequests()).toHaveLength(0);
    expect(text(root, "clean-progress")).toBe("2/3");
  });

  it("presses spanning more than the window send nothing", async () => {
    const { face, socket } = mounted();
    await face.pressClean();
    clock += 300;
    await face.pressClean();
    clock += 2500; // window expired: the next press starts over
    await face.pressClean();
    expect(socket.sendRequests()).toHaveLength(0);
  });

  it("three timely presses empty the device", async () => {
    const { face, socket, device, root } = mounted();
    await face.pressRestart();
    expect(device.status.files).toBe(4);
    for (const step of [0, 300, 300]) {
      clock += step;
      await face.pressClean();
    }
    const sends = socket.sendRequests();
    expect(sends).toHaveLength(2); // one restart, one clean
    expect(sends[1]).toEqual({ op: "SEND", message: { type: "CLEAN" } });
    expect(device.status.files).toBe(0);
    expect(text(root, "files")).toBe("0");
    expect(text(root, "state")).toBe("BootedIdle");
    expect(text(root, "clean-progress")).toBe("");
  });

  it("spinning resets the clean count", async () => {
    const { face, socket, root } = mounted();
    await face.pressClean();
    clock += 100;
    await face.pressClean();
    face.spinBy(1); // any other interaction disarms the guard
    clock += 100;
    await face.pressClean();
    expect(socket.sendRequests()).toHaveLength(0);
    expect(text(root, "clean-progress")).toBe("1/3");
  });

  it("shows a banner and sends nothing while disconnected", async () => {
    const device = new FakeDevice();
    const socket = new FakeSocket(device);
    const client = new BridgeClient("ws://test", () => socket);
    const root = document.createElement("div");
    document.body.append(root);
    const face = new WatchFace(root, client, () => clock);
    // never connected: banner visible, presses are local-only
    const banner = root.querySelector<HTMLElement>('[data-role="banner"]')!;
    expect(banner.hidden).toBe(false);
    await face.pressRestart();
    expect(socket.sent).toHaveLength(0);
  });

  it("banner clears once connected and reconnect is manual", () => {
    const { root, socket, client } = mounted();
    const banner = root.querySelector<HTMLElement>('[data-role="banner"]')!;
    expect(banner.hidden).toBe(true);
    socket.close();
    void client;
    expect(banner.hidden).toBe(false);
  });
});
