"""Command-line entry points: serve, play, eval, bench.

Every subcommand exits 0 on success; failures print one machine-parsable
line ``error[<code>]: <message>`` to stderr and exit 1.  Tacton arguments
accept a file path or the name of a bundled library tacton (Button,
Rain, Heartbeat, Loading, Baseline, RainBench, RainBench2x, RainBenchF).
Set ``ADAPTICS_LOG`` to a logging level name to change verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import statistics
import sys
import time
from pathlib import Path
from typing import Optional

from . import library
from .evaluator import (
    IDENTITY_TRANSFORM,
    apply_post,
    evaluate_post,
    interpolate_state,
)
from .model import Tacton, TactonError, parse_tacton
from .runtime import Engine, MockDevice

__all__ = ["main"]

log = logging.getLogger("adaptics.cli")


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _resolve_tacton(spec: str) -> Path:
    path = Path(spec)
    if path.exists():
        return path
    try:
        return library.library_path(spec)
    except FileNotFoundError:
        raise CliError("io", f"no such file or bundled tacton: {spec!r}") from None


def _load_tacton(spec: str) -> Tacton:
    path = _resolve_tacton(spec)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CliError("io", f"cannot read {path}: {e}") from None
    try:
        return parse_tacton(text)
    except TactonError as e:
        raise CliError("invalid-tacton", f"{path}: {e}") from None


def _parse_param_args(pairs: list[str]) -> dict[str, float]:
    env: dict[str, float] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise CliError("bad-param", f"expected name=value, got {pair!r}")
        try:
            env[name] = float(value)
        except ValueError:
            raise CliError("bad-param", f"parameter {name!r} needs a numeric value, got {value!r}") from None
    return env


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    engine = Engine()
    device = MockDevice(rate=args.rate, batch=args.batch)
    ui_dir: Optional[str] = None
    if args.ui:
        candidate = Path(args.ui_dir)
        if not candidate.is_dir():
            raise CliError("io", f"UI directory not found: {candidate}")
        ui_dir = str(candidate)
    app = create_app(engine, device=device, ui_dir=ui_dir)
    print(f"adaptics engine on ws://{args.host}:{args.port}/ws "
          f"(mock device {args.rate:g} Hz, batch {args.batch})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_play(args: argparse.Namespace) -> int:
    tacton = _load_tacton(args.tacton)
    engine = Engine()
    device = MockDevice(rate=args.rate, batch=args.batch)
    env = tacton.default_env()
    env.update(_parse_param_args(args.param))
    engine.play(tacton)
    engine.set_params(env)
    recording = device.run(engine, duration=args.duration, realtime=args.realtime)
    status = engine.status()
    nonzero = sum(1 for a in recording.amplitude if a > 0.0)
    print(json.dumps({
        "tacton": tacton.name,
        "samples": len(recording),
        "device_time": device.device_time,
        "final_pattern_time": status["pattern_time"],
        "finished": status["finished"],
        "warnings": status["warnings"],
        "nonzero_amplitude_samples": nonzero,
    }))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    tacton = _load_tacton(args.tacton)
    env = _parse_param_args(args.param)  # unset parameters read as 0
    try:
        ats = [float(v) for v in args.at.split(",") if v != ""]
    except ValueError:
        raise CliError("bad-at", f"--at needs comma-separated seconds, got {args.at!r}") from None
    if not ats:
        raise CliError("bad-at", "--at needs at least one pattern time")
    post = evaluate_post(tacton.post, env)
    results = []
    finishable = len(tacton.keyframes) > 1
    for at in ats:
        brush = interpolate_state(tacton, at, env)
        position, amplitude = apply_post(
            (brush.x, brush.y, brush.z), brush.intensity, post, IDENTITY_TRANSFORM
        )
        finished = finishable and at > tacton.last_time
        results.append({
            "at": at,
            "finished": finished,
            "brush": {
                "kind": brush.kind,
                "size": brush.size,
                "rotation": brush.rotation,
                "am_freq": brush.am_freq,
                "stm_freq": brush.stm_freq,
                "intensity": brush.intensity,
            },
            "position": {"x": position[0], "y": position[1], "z": position[2]},
            "amplitude": 0.0 if finished else amplitude,
        })
    print(json.dumps({
        "tacton": tacton.name,
        "playback_speed": post.speed,
        "results": results,
    }, indent=2))
    return 0


def _bench_stream_digest(tacton: Tacton, batches: int, batch_size: int, rate: float) -> str:
    engine = Engine()
    engine.play(tacton)
    engine.set_params(tacton.default_env())
    dt = 1.0 / rate
    digest = hashlib.sha256()
    device_time = 0.0
    for _ in range(batches):
        out = engine.next_batch(device_time, batch_size, dt)
        n = out.n
        digest.update(out.x[:n].tobytes())
        digest.update(out.y[:n].tobytes())
        digest.update(out.z[:n].tobytes())
        digest.update(out.amplitude[:n].tobytes())
        device_time += batch_size * dt
    return digest.hexdigest()


def run_bench(tacton: Tacton, batches: int = 1000, batch_size: int = 40,
              repeats: int = 10, rate: float = 40000.0) -> dict:
    """Evaluate batches back-to-back with synthetic device time, no pacing.

    Each repeat restarts the tacton from the beginning and reports the
    achieved focal-point rate in kHz.  Identical inputs produce identical
    sample streams (the digest covers every emitted sample); only the
    rates vary with the hardware.
    """
    if batches < 1 or batch_size < 1 or repeats < 1:
        raise CliError("empty-benchmark", "batches, batch size, and repeats must be >= 1")
    digest = _bench_stream_digest(tacton, batches, batch_size, rate)

    engine = Engine()
    env = tacton.default_env()
    dt = 1.0 / rate
    batch_span = batch_size * dt
    device_time = 0.0  # the device clock never rewinds, even across restarts
    rates = []
    for _ in range(repeats):
        engine.play(tacton)
        engine.set_params(env)
        # one untimed batch compiles the evaluation plan, then restart
        engine.next_batch(device_time, batch_size, dt)
        device_time += batch_span
        engine.play(tacton)
        engine.drain_commands()
        next_batch = engine.next_batch
        t0 = time.perf_counter()
        for _b in range(batches):
            next_batch(device_time, batch_size, dt)
            device_time += batch_span
        elapsed = time.perf_counter() - t0
        rates.append(batches * batch_size / elapsed / 1000.0)
    return {
        "tacton": tacton.name,
        "keyframes": len(tacton.keyframes),
        "batches": batches,
        "batch_size": batch_size,
        "repeats": repeats,
        "device_rate_khz": rate / 1000.0,
        "rates_khz": rates,
        "min_khz": min(rates),
        "median_khz": statistics.median(rates),
        "max_khz": max(rates),
        "stream_digest": digest,
    }


def cmd_bench(args: argparse.Namespace) -> int:
    tacton = _load_tacton(args.tacton)
    report = run_bench(tacton, batches=args.batches, batch_size=args.batch_size,
                       repeats=args.repeats, rate=args.rate)
    if args.json:
        print(json.dumps(report))
        return 0
    print(f"{report['tacton']}: {report['keyframes']} keyframes, "
          f"{report['batches']} batches x {report['batch_size']} samples, "
          f"{report['repeats']} repeats")
    print(f"  focal-point rate (kHz): min {report['min_khz']:.0f}  "
          f"median {report['median_khz']:.0f}  max {report['max_khz']:.0f}")
    print(f"  device real-time rate: {report['device_rate_khz']:.0f} kHz")
    print(f"  stream digest: {report['stream_digest'][:16]}...")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptics",
        description="Adaptive mid-air ultrasound tacton engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the designer bridge on a mock device")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8037)
    p.add_argument("--rate", type=float, default=40000.0, help="device rate in Hz")
    p.add_argument("--batch", type=int, default=40, help="samples per device batch")
    p.add_argument("--ui", action="store_true", help="also serve the designer UI")
    p.add_argument("--ui-dir", default="frontend/dist", help="static UI directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("play", help="play a tacton on a mock device and report")
    p.add_argument("tacton", help="path or bundled tacton name")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--duration", type=float, default=2.0, help="seconds of device time")
    p.add_argument("--rate", type=float, default=40000.0)
    p.add_argument("--batch", type=int, default=40)
    p.add_argument("--realtime", action="store_true", help="pace batches to the wall clock")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("eval", help="dump interpolated state at pattern times")
    p.add_argument("tacton", help="path or bundled tacton name")
    p.add_argument("--at", required=True, metavar="T[,T...]", help="pattern times in seconds")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="measure evaluation throughput")
    p.add_argument("tacton", help="path or bundled tacton name")
    p.add_argument("--batches", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=40)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--rate", type=float, default=40000.0, help="synthetic device rate in Hz")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    level = os.environ.get("ADAPTICS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
