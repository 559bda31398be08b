"""Real-time playback loop: command queue, batch service, mock device.

Two roles talk to an :class:`Engine`.  Any number of control-side callers
submit commands (play, stop, parameter updates, transform updates, hot
reload); commands are validated at submission, queued (bounded, never
blocking), and applied at the next batch boundary.  Exactly one
evaluation-side caller, the device, repeatedly requests ``next_batch``.
The engine reads only the device's clock; the host wall clock is never
consulted on the batch path.

Worst-case parameter-to-output latency is one batch: a command submitted
before a batch is drained is fully reflected in that batch's samples.
"""

from __future__ import annotations

import math
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .evaluator import (
    EvalScratch,
    IDENTITY_TRANSFORM,
    PlaybackState,
    SampleBuffer,
    eval_batch,
    validate_transform,
)
from .model import Tacton, validate_tacton

__all__ = [
    "Play",
    "Stop",
    "SetParam",
    "SetParams",
    "SetTransform",
    "HotReload",
    "Command",
    "CommandRejected",
    "Engine",
    "TelemetryChunk",
    "TelemetryReader",
    "MockDevice",
    "Recording",
    "mock_device_run",
    "DEFAULT_RATE_HZ",
    "DEFAULT_BATCH",
]

DEFAULT_RATE_HZ = 40000.0
DEFAULT_BATCH = 40
DEFAULT_QUEUE_DEPTH = 256


@dataclass(frozen=True, slots=True)
class Play:
    tacton: Tacton


@dataclass(frozen=True, slots=True)
class Stop:
    pass


@dataclass(frozen=True, slots=True)
class SetParam:
    name: str
    value: float


@dataclass(frozen=True, slots=True)
class SetParams:
    values: Mapping[str, float]


@dataclass(frozen=True, slots=True)
class SetTransform:
    matrix: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class HotReload:
    tacton: Tacton


Command = Union[Play, Stop, SetParam, SetParams, SetTransform, HotReload]


class CommandRejected(ValueError):
    """A command failed validation or the queue was full; nothing was enqueued."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _check_finite_value(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise CommandRejected("non-finite", f"parameter {name!r} must be a number") from None
    if not math.isfinite(v):
        raise CommandRejected("non-finite", f"parameter {name!r} must be finite, got {v!r}")
    return v


class TelemetryChunk:
    """One recorded batch in the telemetry ring; readers must tolerate reuse."""

    __slots__ = ("seq", "device_time", "n", "x", "y", "z", "amplitude", "pattern_time")

    def __init__(self, capacity: int):
        from array import array

        blank = bytes(8 * capacity)
        self.seq = -1
        self.device_time = 0.0
        self.n = 0
        self.x = array("d", blank)
        self.y = array("d", blank)
        self.z = array("d", blank)
        self.amplitude = array("d", blank)
        self.pattern_time = array("d", blank)


class TelemetryReader:
    """Cursor over the engine's telemetry ring.

    Reads are lossy by contract: chunks overwritten before they are read
    are skipped (oldest first) while order is preserved.
    """

    def __init__(self, engine: "Engine"):
        self._engine = engine
        self._next_seq = engine._telemetry_seq

    def poll(self) -> list[dict]:
        """Drain newly published chunks as dicts of sample lists."""
        engine = self._engine
        out: list[dict] = []
        seq = self._next_seq
        latest = engine._telemetry_seq
        ring = engine._telemetry
        if latest - seq > len(ring):
            seq = latest - len(ring)  # fell behind; drop the overwritten span
        while seq < latest:
            chunk = ring[seq % len(ring)]
            if chunk.seq != seq:
                seq += 1
                continue
            n = chunk.n
            item = {
                "device_time": chunk.device_time,
                "x": list(chunk.x[:n]),
                "y": list(chunk.y[:n]),
                "z": list(chunk.z[:n]),
                "amplitude": list(chunk.amplitude[:n]),
                "pattern_time": list(chunk.pattern_time[:n]),
            }
            if chunk.seq == seq:  # reread: discard torn data
                out.append(item)
            seq += 1
        self._next_seq = latest
        return out


class Engine:
    """Owns PlaybackState and services device batch requests.

    Control-side methods (``submit`` and the convenience wrappers) may be
    called from any thread; they only validate and enqueue.  ``next_batch``
    must be called by a single device thread.
    """

    def __init__(self, max_queue: int = DEFAULT_QUEUE_DEPTH,
                 telemetry_chunks: int = 512, max_batch_hint: int = 64):
        self._queue: list[Command] = []
        self._queue_lock = threading.Lock()
        self._max_queue = max_queue
        self._tacton: Optional[Tacton] = None
        self._playing = False
        self._playing_intent = False
        self._state = PlaybackState()
        self._env: dict[str, float] = {}
        self._host: tuple[float, ...] = IDENTITY_TRANSFORM
        self._out = SampleBuffer()
        self._scratch = EvalScratch()
        self._last_device_time: Optional[float] = None
        self._telemetry = [TelemetryChunk(max_batch_hint) for _ in range(telemetry_chunks)]
        self._telemetry_seq = 0
        self._telemetry_enabled = False
        self._telemetry_capacity = max_batch_hint

    # -- control side ------------------------------------------------------

    def submit(self, command: Command) -> None:
        """Validate and enqueue; applied at the next batch boundary.

        Raises CommandRejected (the command is dropped) on invalid input
        or queue overflow; the evaluation side is never blocked.
        """
        if isinstance(command, SetParam):
            command = SetParam(command.name, _check_finite_value(command.name, command.value))
        elif isinstance(command, SetParams):
            command = SetParams(
                {name: _check_finite_value(name, v) for name, v in command.values.items()}
            )
        elif isinstance(command, SetTransform):
            try:
                command = SetTransform(validate_transform(command.matrix))
            except ValueError as e:
                raise CommandRejected("invalid-transform", str(e)) from None
        elif isinstance(command, (Play, HotReload)):
            violations = validate_tacton(command.tacton)
            if violations:
                v = violations[0]
                raise CommandRejected("invalid-tacton", f"{v.path}: {v.message}")
        elif not isinstance(command, Stop):
            raise CommandRejected("unknown-command", f"unsupported command {command!r}")
        with self._queue_lock:
            if len(self._queue) >= self._max_queue:
                raise CommandRejected("queue-full", "command queue overflow; command dropped")
            self._queue.append(command)
            if isinstance(command, Play):
                self._playing_intent = True
            elif isinstance(command, Stop):
                self._playing_intent = False

    def play(self, tacton: Tacton) -> None:
        self.submit(Play(tacton))

    def stop(self) -> None:
        self.submit(Stop())

    def set_param(self, name: str, value: float) -> None:
        self.submit(SetParam(name, value))

    def set_params(self, values: Mapping[str, float]) -> None:
        self.submit(SetParams(dict(values)))

    def set_transform(self, matrix) -> None:
        self.submit(SetTransform(tuple(matrix)))

    def hot_reload(self, tacton: Tacton) -> None:
        self.submit(HotReload(tacton))

    @property
    def loaded_tacton(self) -> Optional[Tacton]:
        return self._tacton

    @property
    def buffer_allocations(self) -> int:
        """Allocation-counting hook: engine buffer/plan allocations so far."""
        return self._scratch.buffer_allocations

    def status(self) -> dict:
        """Control-plane snapshot; ``playing`` reflects accepted commands."""
        state = self._state
        return {
            "playing": self._playing_intent,
            "finished": state.finished,
            "warnings": state.jump_warnings + self._scratch.formula_warnings,
            "pattern_time": state.pattern_time,
            "device_time": state.last_device_time,
            "pattern": self._tacton.name if self._tacton is not None else None,
        }

    # -- evaluation side ----------------------------------------------------

    def _apply(self, command: Command) -> None:
        if isinstance(command, SetParam):
            self._env[command.name] = command.value
        elif isinstance(command, SetParams):
            self._env.update(command.values)
        elif isinstance(command, Play):
            self._tacton = command.tacton
            self._state = PlaybackState()
            self._playing = True
        elif isinstance(command, Stop):
            self._playing = False
        elif isinstance(command, SetTransform):
            self._host = command.matrix
        elif isinstance(command, HotReload):
            # Swap patterns mid-playback: keep pattern time (clamped into
            # the new range) and modulation phases, and leave the finished
            # latch cleared so playback can resume.
            self._tacton = command.tacton
            state = self._state
            last = command.tacton.last_time
            if state.pattern_time > last:
                state.pattern_time = last
            elif state.pattern_time < 0.0:
                state.pattern_time = 0.0
            state.finished = False

    def drain_commands(self) -> None:
        if not self._queue:
            return
        with self._queue_lock:
            pending = self._queue[:]
            self._queue.clear()
        for command in pending:
            self._apply(command)

    def next_batch(self, device_time: float, n: int, dt: float) -> SampleBuffer:
        """Drain pending commands, then evaluate one batch.

        ``device_time`` is the device's own monotone clock and must be
        non-decreasing across requests; ``n`` and ``dt`` may vary between
        requests.  With no tacton playing the batch is silent.  The
        returned buffer is reused by the next call.
        """
        if self._last_device_time is not None and device_time < self._last_device_time:
            raise ValueError(
                f"device time went backwards: {device_time} < {self._last_device_time}"
            )
        self._last_device_time = device_time
        self.drain_commands()
        out = self._out
        if self._playing and self._tacton is not None:
            eval_batch(self._tacton, self._state, self._env, self._host,
                       n, dt, out, self._scratch)
        else:
            out.ensure(n, self._scratch)
            ox = out.x
            oy = out.y
            oz = out.z
            oa = out.amplitude
            op = out.pattern_time
            for i in range(n):
                ox[i] = 0.0
                oy[i] = 0.0
                oz[i] = 0.0
                oa[i] = 0.0
                op[i] = 0.0
            out.n = n
        self._state.last_device_time = device_time
        if self._telemetry_enabled:
            self._publish_telemetry(device_time, out)
        return out

    # -- telemetry -----------------------------------------------------------

    def subscribe_telemetry(self) -> TelemetryReader:
        self._telemetry_enabled = True
        return TelemetryReader(self)

    def _publish_telemetry(self, device_time: float, out: SampleBuffer) -> None:
        n = out.n
        if n > self._telemetry_capacity:
            n = self._telemetry_capacity
        seq = self._telemetry_seq
        chunk = self._telemetry[seq % len(self._telemetry)]
        chunk.seq = -2  # torn marker while the copy is in flight
        chunk.device_time = device_time
        chunk.n = n
        cx = chunk.x
        cy = chunk.y
        cz = chunk.z
        ca = chunk.amplitude
        cp = chunk.pattern_time
        ox = out.x
        oy = out.y
        oz = out.z
        oa = out.amplitude
        op = out.pattern_time
        for i in range(n):
            cx[i] = ox[i]
            cy[i] = oy[i]
            cz[i] = oz[i]
            ca[i] = oa[i]
            cp[i] = op[i]
        chunk.seq = seq
        self._telemetry_seq = seq + 1


# ---------------------------------------------------------------------------
# mock device


@dataclass(slots=True)
class Recording:
    """Sample log captured by a mock device run (parallel per-sample lists)."""

    x: list = field(default_factory=list)
    y: list = field(default_factory=list)
    z: list = field(default_factory=list)
    amplitude: list = field(default_factory=list)
    pattern_time: list = field(default_factory=list)
    device_time: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.x)

    def append_batch(self, device_time: float, dt: float, out: SampleBuffer) -> None:
        n = out.n
        self.x.extend(out.x[:n])
        self.y.extend(out.y[:n])
        self.z.extend(out.z[:n])
        self.amplitude.extend(out.amplitude[:n])
        self.pattern_time.extend(out.pattern_time[:n])
        self.device_time.extend(device_time + dt * (i + 1) for i in range(n))


class MockDevice:
    """Software device sink with a synthetic monotone clock.

    Requests batches at a nominal rate; optional seeded jitter perturbs
    each batch's timestep by up to +-``jitter`` (fraction).  Device time
    is the running sum of issued timesteps, never the wall clock.
    """

    def __init__(self, rate: float = DEFAULT_RATE_HZ, batch: int = DEFAULT_BATCH,
                 jitter: float = 0.0, seed: int = 0):
        if rate <= 0:
            raise ValueError("device rate must be > 0")
        if batch < 1:
            raise ValueError("batch size must be >= 1")
        if not 0.0 <= jitter < 1.0:
            raise ValueError("jitter must be in [0, 1)")
        self.rate = float(rate)
        self.batch = int(batch)
        self.jitter = float(jitter)
        self.seed = seed
        self.device_time = 0.0
        self._rng = random.Random(seed)

    def reset(self) -> None:
        self.device_time = 0.0
        self._rng = random.Random(self.seed)

    def next_dt(self) -> float:
        dt = 1.0 / self.rate
        if self.jitter:
            dt *= 1.0 + self.jitter * (2.0 * self._rng.random() - 1.0)
        return dt

    def run(self, engine: Engine, duration: float, record: bool = True,
            realtime: bool = False,
            stop: Optional[threading.Event] = None) -> Recording:
        """Issue ceil(duration * rate / batch) batch requests."""
        recording = Recording()
        batches = math.ceil(duration * self.rate / self.batch)
        deadline = time.perf_counter()
        for _ in range(batches):
            if stop is not None and stop.is_set():
                break
            dt = self.next_dt()
            out = engine.next_batch(self.device_time, self.batch, dt)
            if record:
                recording.append_batch(self.device_time, dt, out)
            self.device_time += self.batch * dt
            if realtime:
                deadline += self.batch / self.rate
                delay = deadline - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
        return recording

    def run_forever(self, engine: Engine, stop: threading.Event) -> None:
        """Paced pump loop for live serving; device time stays synthetic."""
        period = self.batch / self.rate
        deadline = time.perf_counter()
        while not stop.is_set():
            dt = self.next_dt()
            engine.next_batch(self.device_time, self.batch, dt)
            self.device_time += self.batch * dt
            deadline += period
            delay = deadline - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
            elif delay < -1.0:
                deadline = time.perf_counter()  # fell far behind; resynchronize


def mock_device_run(engine: Engine, rate: float = DEFAULT_RATE_HZ,
                    batch: int = DEFAULT_BATCH, duration: float = 1.0,
                    jitter: float = 0.0, seed: int = 0) -> Recording:
    """Drive ``engine`` with a mock device and return the full recording."""
    return MockDevice(rate=rate, batch=batch, jitter=jitter, seed=seed).run(
        engine, duration
    )
