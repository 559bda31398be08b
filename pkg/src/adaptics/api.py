"""Flat embedding API for host applications.

Mirrors a C-style handle lifecycle: every call takes plain numbers,
strings, or an integer handle, no callbacks, safe from a single foreign
control thread.  Failures raise :class:`ApiError` carrying a stable
machine-readable ``code`` (the set of codes is part of the contract).

Typical host usage::

    h = init_engine(use_mock_device=True)
    play_tacton_immediate(h, "loading.adaptics")
    for i in range(101):
        update_user_parameter(h, "progress", i)
        time.sleep(0.02)
    stop_playback(h)
    deinit_engine(h)
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from .model import TactonError, parse_tacton
from .runtime import DEFAULT_BATCH, DEFAULT_RATE_HZ, CommandRejected, Engine, MockDevice

__all__ = [
    "ApiError",
    "init_engine",
    "play_tacton_immediate",
    "update_user_parameter",
    "update_transform",
    "stop_playback",
    "engine_status",
    "deinit_engine",
]


class ApiError(Exception):
    """Embedding failure with a stable machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class _Instance:
    engine: Engine
    device: MockDevice
    pump: threading.Thread
    stop: threading.Event


_registry: dict[int, _Instance] = {}
_registry_lock = threading.Lock()
_next_handle = itertools.count(1)


def _instance(handle: int) -> _Instance:
    with _registry_lock:
        inst = _registry.get(handle)
    if inst is None:
        raise ApiError("invalid-handle", f"no engine for handle {handle!r}")
    return inst


def init_engine(use_mock_device: bool = True, rate: float = DEFAULT_RATE_HZ,
                batch: int = DEFAULT_BATCH) -> int:
    """Start an engine against its device sink; returns an opaque handle.

    The engine idles (silent batches) until a tacton is played.  Multiple
    engines are independent.
    """
    if not use_mock_device:
        raise ApiError("unsupported-device", "only the mock device sink is available")
    if not rate > 0:
        raise ApiError("invalid-rate", f"device rate must be > 0, got {rate!r}")
    if batch < 1:
        raise ApiError("invalid-batch", f"batch size must be >= 1, got {batch!r}")
    engine = Engine()
    device = MockDevice(rate=rate, batch=batch)
    stop = threading.Event()
    pump = threading.Thread(
        target=device.run_forever, args=(engine, stop),
        name="adaptics-api-pump", daemon=True,
    )
    with _registry_lock:
        handle = next(_next_handle)
        _registry[handle] = _Instance(engine, device, pump, stop)
    pump.start()
    return handle


def play_tacton_immediate(handle: int, path: str) -> None:
    """Load a `.adaptics` file and play it from pattern time 0.

    Replaces any current playback; on failure the prior playback is
    unaffected.
    """
    inst = _instance(handle)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ApiError("io", f"cannot read {path!r}: {e}") from None
    try:
        tacton = parse_tacton(text)
    except TactonError as e:
        raise ApiError("invalid-tacton", str(e)) from None
    try:
        inst.engine.play(tacton)
    except CommandRejected as e:
        raise ApiError(e.code, str(e)) from None


def update_user_parameter(handle: int, name: str, value: float) -> None:
    """Push one external parameter; visible to formulas from the next batch."""
    inst = _instance(handle)
    try:
        inst.engine.set_param(str(name), value)
    except CommandRejected as e:
        raise ApiError(e.code, str(e)) from None


def update_transform(handle: int, matrix) -> None:
    """Set the host geometric transform (16 numbers, row-major)."""
    inst = _instance(handle)
    try:
        inst.engine.set_transform(matrix)
    except CommandRejected as e:
        raise ApiError(e.code, str(e)) from None


def stop_playback(handle: int) -> None:
    inst = _instance(handle)
    try:
        inst.engine.stop()
    except CommandRejected as e:
        raise ApiError(e.code, str(e)) from None


def engine_status(handle: int) -> dict:
    """Poll playback state (playing, finished, warnings, pattern_time, ...)."""
    return _instance(handle).engine.status()


def deinit_engine(handle: int) -> None:
    """Stop the device pump and release the handle; later calls fail."""
    with _registry_lock:
        inst = _registry.pop(handle, None)
    if inst is None:
        raise ApiError("invalid-handle", f"no engine for handle {handle!r}")
    inst.stop.set()
    inst.pump.join(timeout=2.0)
