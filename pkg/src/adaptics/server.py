"""Designer-to-engine wire protocol over WebSockets.

Endpoint ``/ws`` (default port 8037) speaks JSON messages with a ``type``
discriminator.  Both sides open with ``hello {protocol_version: 1}``; a
version mismatch is rejected with a clear error and the connection is
closed.  After the handshake:

- client -> engine: ``update_pattern {tacton}``, ``play {}``, ``stop {}``,
  ``set_params {params}``, ``set_transform {matrix: [16 numbers]}``
- engine -> client: ``status {playing, finished, warnings, ...}``,
  ``playback_update {samples: [{x, y, z, amp, pt}], device_time}``,
  ``error {code, message}``

The command path is lossless and ordered per connection; malformed input
gets an ``error`` reply without dropping the connection.  Telemetry is
decimated to ~60 messages/second with at most 64 samples per message
(hard schema bound 1024) and is lossy: slow clients lose the oldest
chunks first.  A stopped engine sends a 1 Hz ``status`` heartbeat and no
``playback_update``.  Full protocol notes: ``docs/wire-protocol.md``.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response

from . import library
from .model import TactonError, tacton_from_obj
from .runtime import CommandRejected, Engine, MockDevice

__all__ = [
    "PROTOCOL_VERSION",
    "TELEMETRY_RATE_HZ",
    "MAX_SAMPLES_PER_MESSAGE",
    "WIRE_SAMPLE_LIMIT",
    "BridgeSession",
    "decimate_chunks",
    "hello_message",
    "error_message",
    "status_message",
    "create_app",
]

log = logging.getLogger("adaptics.server")

PROTOCOL_VERSION = 1
TELEMETRY_RATE_HZ = 60.0
STATUS_HEARTBEAT_S = 1.0
MAX_SAMPLES_PER_MESSAGE = 64
WIRE_SAMPLE_LIMIT = 1024
TELEMETRY_QUEUE_DEPTH = 8


def hello_message() -> dict:
    return {"type": "hello", "protocol_version": PROTOCOL_VERSION}


def error_message(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


def status_message(engine: Engine) -> dict:
    return {"type": "status", **engine.status()}


def decimate_chunks(chunks: list[dict], device_time: float,
                    max_samples: int = MAX_SAMPLES_PER_MESSAGE) -> Optional[dict]:
    """Fold telemetry chunks into one playback_update, keeping every k-th sample.

    k is chosen so the message carries at most ``max_samples`` samples
    (and never more than the wire bound of 1024).
    """
    max_samples = min(max_samples, WIRE_SAMPLE_LIMIT)
    total = sum(len(c["x"]) for c in chunks)
    if total == 0:
        return None
    k = max(1, math.ceil(total / max_samples))
    samples = []
    idx = 0
    for c in chunks:
        xs = c["x"]
        ys = c["y"]
        zs = c["z"]
        amps = c["amplitude"]
        pts = c["pattern_time"]
        for i in range(len(xs)):
            if idx % k == 0:
                samples.append(
                    {"x": xs[i], "y": ys[i], "z": zs[i], "amp": amps[i], "pt": pts[i]}
                )
            idx += 1
    return {"type": "playback_update", "samples": samples, "device_time": device_time}


class BridgeSession:
    """Per-connection protocol state machine; transport-agnostic.

    ``handle_text`` maps one inbound message to zero or more replies and
    sets ``closed`` when the connection must be dropped (handshake
    failures only).
    """

    def __init__(self, engine: Engine):
        self.engine = engine
        self.hello_done = False
        self.closed = False
        self.pattern = None  # last tacton uploaded on this connection

    def handle_text(self, text: str) -> list[dict]:
        try:
            msg = json.loads(text)
        except json.JSONDecodeError as e:
            return [error_message("invalid-json", f"malformed JSON: {e.msg}")]
        if not isinstance(msg, dict):
            return [error_message("invalid-message", "message must be a JSON object")]
        return self.handle_message(msg)

    def handle_message(self, msg: dict) -> list[dict]:
        mtype = msg.get("type")
        if not self.hello_done:
            if mtype != "hello":
                self.closed = True
                return [error_message("handshake-required", "first message must be hello")]
            version = msg.get("protocol_version")
            if version != PROTOCOL_VERSION:
                self.closed = True
                return [
                    error_message(
                        "protocol-version",
                        f"protocol_version {version!r} not supported (engine speaks {PROTOCOL_VERSION})",
                    )
                ]
            self.hello_done = True
            return [status_message(self.engine)]

        if mtype == "update_pattern":
            try:
                tacton = tacton_from_obj(msg.get("tacton"))
            except TactonError as e:
                return [error_message("invalid-tacton", str(e))]
            try:
                self.engine.hot_reload(tacton)
            except CommandRejected as e:
                return [error_message(e.code, str(e))]
            self.pattern = tacton
            return [status_message(self.engine)]

        if mtype == "play":
            tacton = self.pattern or self.engine.loaded_tacton
            if tacton is None:
                return [error_message("no-pattern", "no pattern loaded; send update_pattern first")]
            try:
                self.engine.play(tacton)
            except CommandRejected as e:
                return [error_message(e.code, str(e))]
            return [status_message(self.engine)]

        if mtype == "stop":
            try:
                self.engine.stop()
            except CommandRejected as e:
                return [error_message(e.code, str(e))]
            return [status_message(self.engine)]

        if mtype == "set_params":
            params = msg.get("params")
            if not isinstance(params, dict):
                return [error_message("invalid-params", "set_params needs a params object")]
            try:
                self.engine.set_params(params)
            except CommandRejected as e:
                return [error_message(e.code, str(e))]
            return [status_message(self.engine)]

        if mtype == "set_transform":
            matrix = msg.get("matrix")
            if not isinstance(matrix, list):
                return [error_message("invalid-transform", "set_transform needs a matrix list")]
            try:
                self.engine.set_transform(matrix)
            except CommandRejected as e:
                return [error_message(e.code, str(e))]
            return [status_message(self.engine)]

        if mtype == "hello":
            return [error_message("unexpected-hello", "handshake already complete")]

        return [error_message("unknown-type", f"unknown message type {mtype!r}")]


@dataclass(eq=False)
class _Connection:
    websocket: WebSocket
    send_lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    telemetry: asyncio.Queue = field(
        default_factory=lambda: asyncio.Queue(maxsize=TELEMETRY_QUEUE_DEPTH)
    )

    def offer(self, message: dict) -> None:
        # Lossy by contract: drop the oldest frame when the client lags.
        try:
            self.telemetry.put_nowait(message)
        except asyncio.QueueFull:
            try:
                self.telemetry.get_nowait()
            except asyncio.QueueEmpty:
                pass
            try:
                self.telemetry.put_nowait(message)
            except asyncio.QueueFull:
                pass


def create_app(engine: Engine, device: Optional[MockDevice] = None,
               ui_dir: Optional[str] = None,
               max_samples_per_message: int = MAX_SAMPLES_PER_MESSAGE) -> FastAPI:
    """Assemble the bridge service around a runtime engine.

    If ``device`` is given, a pump thread drives ``engine.next_batch`` at
    the device's own pace for the app's lifetime.  ``ui_dir`` mounts a
    static designer UI at the web root.
    """
    connections: set[_Connection] = set()
    stop_pump = threading.Event()
    pump: Optional[threading.Thread] = None

    async def broadcaster() -> None:
        reader = engine.subscribe_telemetry()
        period = 1.0 / TELEMETRY_RATE_HZ
        since_status = 0.0
        while True:
            await asyncio.sleep(period)
            since_status += period
            chunks = reader.poll()
            playing = engine.status()["playing"]
            update = None
            if playing and chunks:
                update = decimate_chunks(
                    chunks, chunks[-1]["device_time"], max_samples_per_message
                )
            heartbeat = None
            if since_status >= STATUS_HEARTBEAT_S:
                since_status = 0.0
                heartbeat = status_message(engine)
            if update is None and heartbeat is None:
                continue
            for conn in list(connections):
                if update is not None:
                    conn.offer(update)
                if heartbeat is not None:
                    conn.offer(heartbeat)

    broadcaster_task: Optional[asyncio.Task] = None

    async def _startup() -> None:
        nonlocal broadcaster_task, pump
        if device is not None:
            pump = threading.Thread(
                target=device.run_forever, args=(engine, stop_pump),
                name="adaptics-device-pump", daemon=True,
            )
            pump.start()
        broadcaster_task = asyncio.create_task(broadcaster())

    async def _shutdown() -> None:
        stop_pump.set()
        if pump is not None:
            pump.join(timeout=2.0)
        if broadcaster_task is not None:
            broadcaster_task.cancel()

    app = FastAPI(title="adaptics engine", on_startup=[_startup], on_shutdown=[_shutdown])

    @app.get("/library")
    def get_library() -> JSONResponse:
        return JSONResponse({"tactons": library.list_tactons()})

    @app.get("/library/{name}")
    def get_library_tacton(name: str) -> Response:
        try:
            path = library.library_path(name)
        except FileNotFoundError:
            return JSONResponse({"error": "not-found"}, status_code=404)
        return Response(path.read_text(encoding="utf-8"), media_type="application/json")

    async def _telemetry_sender(conn: _Connection) -> None:
        try:
            while True:
                message = await conn.telemetry.get()
                async with conn.send_lock:
                    await conn.websocket.send_json(message)
        except Exception:
            return

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        log.debug("designer connected: %s", websocket.client)
        conn = _Connection(websocket)
        session = BridgeSession(engine)
        sender = asyncio.create_task(_telemetry_sender(conn))
        try:
            async with conn.send_lock:
                await websocket.send_json(hello_message())
            connections.add(conn)
            while True:
                text = await websocket.receive_text()
                replies = session.handle_text(text)
                async with conn.send_lock:
                    for reply in replies:
                        await websocket.send_json(reply)
                if session.closed:
                    await websocket.close(code=1002)
                    break
        except WebSocketDisconnect:
            pass
        finally:
            connections.discard(conn)
            sender.cancel()
            log.debug("designer disconnected: %s", websocket.client)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
