import { BridgeClient } from "./bridge.js";
import { WatchFace } from "./face.js";

const params = new URLSearchParams(location.search);
const endpoint = params.get("bridge") ?? `ws://${location.hostname || "127.0.0.1"}:7411/bridge`;

const root = document.getElementById("watchface");
if (!root) {
  throw new Error("missing #watchface mount point");
}
const client = new BridgeClient(endpoint);
new WatchFace(root, client);
client.connect();
