"""Loopback device bridge: NDJSON over TCP plus a browser websocket.

The same request set is served on both sockets: one JSON object per
line/message in, exactly one response out. Binding defaults to loopback;
reaching the device from another machine is an explicit opt-in. A client
that sends STREAM_STATUS turns its connection into a push feed of
{"event": "status"} messages until it disconnects.

The websocket side is a deliberately small RFC 6455 subset (text frames,
fragmentation, ping/pong, close) — enough for a browser client without
pulling in an async framework.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import socketserver
import struct
import threading
import time

from .config import parse_config
from .service import Clean, DeviceState, Restart

log = logging.getLogger("daqwear.bridge")

DEFAULT_PORT = 7410
DEFAULT_WS_PORT = 7411
ENDPOINT_ENV = "DAQWEAR_ENDPOINT"

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _ok(payload=None):
    return {"ok": True, "payload": payload}


def _err(reason):
    return {"ok": False, "reason": reason}


def decode_control_message(obj):
    """Wire shape -> control message, or None when malformed. The state
    machine itself never sees a malformed message."""
    if not isinstance(obj, dict):
        return None
    kind = obj.get("type")
    if kind == "RESTART":
        person = obj.get("person_id")
        if isinstance(person, bool) or not isinstance(person, int) or not 0 <= person <= 999:
            return None
        return Restart(person)
    if kind == "CLEAN":
        return Clean()
    return None


class BridgeServer:
    """Serves one device runtime on a TCP NDJSON port and a websocket port."""

    def __init__(self, runtime, host="127.0.0.1", port=DEFAULT_PORT, ws_port=DEFAULT_WS_PORT,
                 pace=None, status_period_s=0.5):
        self.runtime = runtime
        self.lock = threading.RLock()
        self.status_period_s = status_period_s
        self._stop = threading.Event()
        self._pace = pace
        self._threads = []
        self._tcp = _BridgeTCPServer((host, port), _NdjsonHandler, self)
        self._ws = _BridgeTCPServer((host, ws_port), _WebSocketHandler, self)

    @property
    def port(self):
        return self._tcp.server_address[1]

    @property
    def ws_port(self):
        return self._ws.server_address[1]

    @property
    def endpoint(self):
        host, port = self._tcp.server_address[:2]
        return f"{host}:{port}"

    def start(self):
        for server in (self._tcp, self._ws):
            thread = threading.Thread(target=lambda s=server: s.serve_forever(poll_interval=0.1),
                                      daemon=True)
            thread.start()
            self._threads.append(thread)
        if self._pace:
            thread = threading.Thread(target=self._pace_loop, daemon=True)
            thread.start()
            self._threads.append(thread)
        log.debug("bridge up on %s (ws %s)", self.port, self.ws_port)

    def stop(self):
        self._stop.set()
        for server in (self._tcp, self._ws):
            server.shutdown()
            server.server_close()

    def _pace_loop(self):
        """Optional real-time pacing: virtual ms advance ~ wall ms * speed."""
        last = time.monotonic()
        while not self._stop.wait(0.05):
            now = time.monotonic()
            step_ms = int((now - last) * 1000 * self._pace)
            if step_ms <= 0:
                continue
            last = now
            with self.lock:
                if self.runtime.state is not DeviceState.SHUT_DOWN:
                    self.runtime.advance_to(self.runtime.now_ms + step_ms)

    # --- request processing (shared by both transports) ---

    def process(self, obj) -> dict:
        if not isinstance(obj, dict) or not isinstance(obj.get("op"), str):
            log.debug("request malformed: %r", obj)
            return _err("malformed")
        op = obj["op"]
        log.debug("request %s", op if op != "SEND" else f"SEND {obj.get('message')!r}")
        with self.lock:
            if op == "STATUS":
                return _ok(self.runtime.status())
            if op == "PUSH_CONFIG":
                return self._push_config(obj.get("text"))
            if op == "LIST_FILES":
                return _ok({"files": self._list_files()})
            if op == "PULL_FILE":
                return self._pull_file(obj.get("name"))
            if op == "SEND":
                return self._send(obj.get("message"))
            if op == "STREAM_STATUS":
                return _ok({"streaming": True, "period_s": self.status_period_s})
        return _err("unknown_op")

    def status_event(self) -> dict:
        with self.lock:
            return {"event": "status", "payload": self.runtime.status()}

    def _push_config(self, text):
        if not isinstance(text, str):
            return _err("missing_text")
        with open(self.runtime.upload_config_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        # preview of what the device will use at its next restart; a broken
        # upload is corrected, never rejected
        config, report = parse_config(text)
        return _ok({
            "stored": True,
            "corrections": [
                {"field": e.field_name, "raw": e.raw_text, "corrected": e.corrected_value,
                 "reason": e.reason}
                for e in report.entries
            ],
            "unknown_keys": list(report.unknown_keys),
            "watch_id": config.watch_id,
        })

    def _list_files(self):
        out = []
        for rel in self.runtime.data_files():
            path = os.path.join(self.runtime.data_root, rel)
            try:
                size = os.path.getsize(path)
            except OSError:
                size = 0
            out.append({"name": os.path.basename(rel), "path": rel, "size": size})
        return out

    def _pull_file(self, name):
        if not isinstance(name, str) or not name:
            return _err("missing_name")
        for rel in self.runtime.data_files():
            if os.path.basename(rel) == name or rel == name:
                try:
                    with open(os.path.join(self.runtime.data_root, rel), "rb") as fh:
                        content = fh.read()
                except OSError:
                    return _err("unreadable")
                return _ok({"name": name, "content_b64": base64.b64encode(content).decode("ascii")})
        return _err("not_found")

    def _send(self, message):
        msg = decode_control_message(message)
        if msg is None:
            return _err("bad_message")
        self.runtime.post(msg)
        return _ok({"state": self.runtime.state.value})


class _BridgeTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, addr, handler, bridge):
        self.bridge = bridge
        super().__init__(addr, handler)


class _NdjsonHandler(socketserver.StreamRequestHandler):
    def handle(self):
        bridge = self.server.bridge
        for line in self.rfile:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except ValueError:
                self._reply(_err("malformed"))
                continue
            response = bridge.process(obj)
            self._reply(response)
            if isinstance(obj, dict) and obj.get("op") == "STREAM_STATUS" and response.get("ok"):
                self._stream(bridge)
                return

    def _reply(self, obj):
        self.wfile.write(json.dumps(obj).encode("utf-8") + b"\n")
        self.wfile.flush()

    def _stream(self, bridge):
        while not bridge._stop.wait(bridge.status_period_s):
            try:
                self._reply(bridge.status_event())
            except OSError:
                return


# --- minimal websocket transport ---


def websocket_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_encode_text(payload: str) -> bytes:
    data = payload.encode("utf-8")
    n = len(data)
    if n < 126:
        head = struct.pack("!BB", 0x81, n)
    elif n < 1 << 16:
        head = struct.pack("!BBH", 0x81, 126, n)
    else:
        head = struct.pack("!BBQ", 0x81, 127, n)
    return head + data


def _ws_read_frame(rfile):
    head = rfile.read(2)
    if len(head) < 2:
        return None, None
    b1, b2 = head
    fin = bool(b1 & 0x80)
    opcode = b1 & 0x0F
    masked = bool(b2 & 0x80)
    length = b2 & 0x7F
    if length == 126:
        length = struct.unpack("!H", rfile.read(2))[0]
    elif length == 127:
        length = struct.unpack("!Q", rfile.read(8))[0]
    mask = rfile.read(4) if masked else b""
    payload = rfile.read(length) if length else b""
    if masked and payload:
        payload = bytes(b ^ mask[i & 3] for i, b in enumerate(payload))
    return (fin, opcode), payload


def ws_read_message(rfile):
    """One complete text message, reassembling fragments; None on close/EOF.
    Pings are answered by the caller via the returned ("ping", data) tuple."""
    buffer = b""
    while True:
        frame, payload = _ws_read_frame(rfile)
        if frame is None:
            return None
        fin, opcode = frame
        if opcode == 0x8:  # close
            return None
        if opcode == 0x9:  # ping
            return ("ping", payload)
        if opcode == 0xA:  # pong
            continue
        if opcode in (0x1, 0x0):
            buffer += payload
            if fin:
                return buffer.decode("utf-8", errors="replace")


class _WebSocketHandler(socketserver.StreamRequestHandler):
    def handle(self):
        if not self._handshake():
            return
        bridge = self.server.bridge
        while True:
            message = ws_read_message(self.rfile)
            if message is None:
                return
            if isinstance(message, tuple):  # ping -> pong
                self.wfile.write(struct.pack("!BB", 0x8A, len(message[1])) + message[1])
                self.wfile.flush()
                continue
            try:
                obj = json.loads(message)
            except ValueError:
                self._reply(_err("malformed"))
                continue
            response = bridge.process(obj)
            self._reply(response)
            if isinstance(obj, dict) and obj.get("op") == "STREAM_STATUS" and response.get("ok"):
                self._stream(bridge)
                return

    def _handshake(self) -> bool:
        request_line = self.rfile.readline(8192).decode("latin-1").strip()
        headers = {}
        while True:
            line = self.rfile.readline(8192).decode("latin-1").strip()
            if not line:
                break
            key, _, value = line.partition(":")
            headers[key.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key")
        if not request_line.startswith("GET") or "websocket" not in headers.get("upgrade", "").lower() or not key:
            self.wfile.write(b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n")
            return False
        accept = websocket_accept_key(key)
        self.wfile.write(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\n"
            b"Connection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + accept.encode("ascii") + b"\r\n\r\n"
        )
        self.wfile.flush()
        return True

    def _reply(self, obj):
        self.wfile.write(ws_encode_text(json.dumps(obj)))
        self.wfile.flush()

    def _stream(self, bridge):
        while not bridge._stop.wait(bridge.status_period_s):
            try:
                self._reply(bridge.status_event())
            except OSError:
                return


def serve_ui(directory, host="127.0.0.1", port=7412):
    """Static file server for the watch-face assets; returns the server."""
    import functools
    from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer

    class _QuietHandler(SimpleHTTPRequestHandler):
        def log_message(self, *args):
            log.debug("ui: " + args[0], *args[1:])

    handler = functools.partial(_QuietHandler, directory=directory)
    return ThreadingHTTPServer((host, port), handler)
