#!/usr/bin/env python3
"""Regenerate the bundled tacton library (design examples + bench corpus).

Deterministic: seeded RNG, canonical serialization.  Run from the repo
root; writes into src/adaptics/library/.
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from adaptics.formula import count_operations  # noqa: E402
from adaptics.model import (  # noqa: E402
    BrushSpec,
    ConditionalJump,
    Formula,
    Keyframe,
    ParamDecl,
    PostProcessing,
    Tacton,
    serialize_tacton,
    validate_tacton,
)

LIB = Path(__file__).resolve().parents[1] / "src" / "adaptics" / "library"


def kf(time, x, y, z=200.0, kind="circle", size="10", rotation="0", am="0",
       stm="100", intensity="1", coords_tr="linear", brush_tr="linear",
       int_tr="linear", jumps=()):
    return Keyframe(
        time=time,
        coords=(float(x), float(y), float(z)),
        coords_transition=coords_tr,
        brush=BrushSpec(
            kind=kind,
            size=Formula.of(size),
            rotation=Formula.of(rotation),
            am_freq=Formula.of(am),
            stm_freq=Formula.of(stm),
        ),
        brush_transition=brush_tr,
        intensity=Formula.of(intensity),
        intensity_transition=int_tr,
        jumps=tuple(jumps),
    )


def post(speed="1", intensity_factor="1", tx="0", ty="0", tz="0", rotz="0", scale="1"):
    return PostProcessing(
        playback_speed=Formula.of(speed),
        intensity_factor=Formula.of(intensity_factor),
        translate=(Formula.of(tx), Formula.of(ty), Formula.of(tz)),
        rotation_z=Formula.of(rotz),
        scale=Formula.of(scale),
    )


def button() -> Tacton:
    # Hover loop [0, 0.3] while the hand is approaching; a press breaks out
    # to the click segment at 0.4, which loops while fully activated.
    grow = "activation * 15 + 15"
    return Tacton(
        name="Button",
        params=(ParamDecl("proximity", 0.0), ParamDecl("activation", 0.0)),
        keyframes=(
            kf(0.0, 0, 0, size=grow, stm="100", am="0", intensity="0.6"),
            kf(0.15, 0, 0, size=f"({grow}) * 0.7", intensity="1"),
            kf(0.3, 0, 0, size=grow, intensity="0.6", jumps=(
                ConditionalJump("proximity", "<", 1.0, 0.0),
                ConditionalJump("activation", "<", 1.0, 0.4),
            )),
            kf(0.4, 0, 0, size="5", am="250", stm="120", intensity="1",
               coords_tr="step", brush_tr="step", int_tr="step"),
            kf(0.7, 0, 0, size="5", am="250", stm="120", intensity="0.8", jumps=(
                ConditionalJump("activation", ">=", 1.0, 0.4),
            )),
        ),
        post=post(),
    )


def rain() -> Tacton:
    rng = random.Random(7)
    frames = []
    t = 0.0
    for i in range(10):
        x = rng.uniform(-55, 55)
        y = rng.uniform(-55, 55)
        frames.append(kf(
            round(t, 4), round(x, 1), round(y, 1),
            size="droplet_strength * 12 + 3",
            am="40",
            stm="120",
            intensity="rainfall_amount",
            coords_tr="step",
            jumps=(ConditionalJump("rainfall_amount", ">=", 0.0, 0.0),) if i == 9 else (),
        ))
        t += rng.uniform(0.06, 0.14)
    return Tacton(
        name="Rain",
        params=(ParamDecl("rainfall_amount", 0.5), ParamDecl("droplet_strength", 0.5)),
        keyframes=tuple(frames),
        post=post(speed="0.5 + rainfall_amount"),
    )


def heartbeat() -> Tacton:
    # Two-pulse cycle; playback speed follows the driving rate parameter.
    return Tacton(
        name="Heartbeat",
        params=(ParamDecl("heart_rate", 70.0),),
        keyframes=(
            kf(0.0, 0, 0, size="18", am="0", stm="110", intensity="0.15"),
            kf(0.08, 0, 8, size="22", intensity="1"),
            kf(0.18, 0, 2, size="16", intensity="0.25"),
            kf(0.3, 0, -6, size="20", intensity="0.8"),
            kf(0.42, 0, 0, size="16", intensity="0.12"),
            kf(0.8, 0, 0, size="18", intensity="0.1", jumps=(
                ConditionalJump("heart_rate", ">", 0.0, 0.0),
            )),
        ),
        post=post(speed="heart_rate / 60"),
    )


def loading() -> Tacton:
    # Single static keyframe; the host drives `progress` 0..100 and the
    # post transform sweeps the sensation once around the palm.
    return Tacton(
        name="Loading",
        params=(ParamDecl("progress", 0.0),),
        keyframes=(
            kf(0.0, 30, 0, size="8", am="0", stm="150", intensity="0.2 + progress / 125"),
        ),
        post=post(rotz="progress * 3.6"),
    )


def baseline() -> Tacton:
    return Tacton(
        name="Baseline",
        params=(),
        keyframes=(kf(0.0, 0, 0, size="15", am="0", stm="100", intensity="1"),),
        post=post(),
    )


def _pad(expr: str) -> str:
    # Value-preserving arithmetic padding: multiplies by 1 and adds 0, so a
    # heavy variant renders the same samples while costing ~8 extra ops.
    return (f"({expr}) * (1 + rainfall_amount * 0 - droplet_strength * 0)"
            f" + 0 * (rainfall_amount + droplet_strength)")


def _rainbench_frames(rng: random.Random, count: int, style: str):
    """Shared generator for the RainBench family.

    ``style`` selects the field texture: "plain" uses small formulas and
    constants; "heavy" pads every field with value-preserving arithmetic
    to raise the per-evaluation operation count roughly ninefold.
    """
    frames = []
    t = 0.0
    for i in range(count):
        x = round(rng.uniform(-60, 60), 1)
        y = round(rng.uniform(-60, 60), 1)
        kind = "line" if rng.random() < 0.2 else "circle"
        stm = rng.choice(["100 + rainfall_amount * 40", "90 + rainfall_amount * 30", "120"])
        am = rng.choice(["0", "40", "80 * droplet_strength", "60 * droplet_strength"])
        size = rng.choice(["droplet_strength * 12 + 3", "droplet_strength * 8 + 4"])
        inten = rng.choice(["rainfall_amount * 0.9 + 0.1", "rainfall_amount * 0.8"])
        rot = "0" if kind == "circle" else str(rng.randrange(0, 180, 15))
        if style == "heavy":
            size, rot, am, stm, inten = (_pad(f) for f in (size, rot, am, stm, inten))
        jumps = (ConditionalJump("rainfall_amount", ">=", 0.0, 0.0),) if i == count - 1 else ()
        frames.append(kf(
            round(t, 4), x, y,
            kind=kind, size=size, rotation=rot, am=am, stm=stm, intensity=inten,
            coords_tr="step" if rng.random() < 0.5 else "linear",
            brush_tr="step" if rng.random() < 0.3 else "linear",
            jumps=jumps,
        ))
        t += rng.uniform(0.015, 0.03)
    return tuple(frames)


def rainbench(name: str, count: int, style: str) -> Tacton:
    speed = "1" if style == "plain" else _pad("1")
    return Tacton(
        name=name,
        params=(ParamDecl("rainfall_amount", 0.5), ParamDecl("droplet_strength", 0.5)),
        keyframes=_rainbench_frames(random.Random(11), count, style),
        post=post(speed=speed),
    )


def per_evaluation_ops(t: Tacton) -> float:
    """Average formula operations one sample evaluation touches.

    One evaluation evaluates the five formula fields of both endpoint
    keyframes of the active segment plus the post-processing block.
    """
    kf_ops = []
    for k in t.keyframes:
        kf_ops.append(sum(
            count_operations(f.root)
            for f in (k.brush.size, k.brush.rotation, k.brush.am_freq,
                      k.brush.stm_freq, k.intensity)
        ))
    post_ops = sum(
        count_operations(f.root)
        for f in (t.post.playback_speed, t.post.intensity_factor, *t.post.translate,
                  t.post.rotation_z, t.post.scale)
    )
    return 2.0 * sum(kf_ops) / len(kf_ops) + post_ops


def main() -> int:
    tactons = [
        button(),
        rain(),
        heartbeat(),
        loading(),
        baseline(),
        rainbench("RainBench", 62, "plain"),
        rainbench("RainBench2x", 124, "plain"),
        rainbench("RainBenchF", 62, "heavy"),
    ]
    LIB.mkdir(parents=True, exist_ok=True)
    for t in tactons:
        violations = validate_tacton(t)
        if violations:
            raise SystemExit(f"{t.name}: {violations[0]}")
        path = LIB / f"{t.name}.adaptics"
        path.write_text(serialize_tacton(t), encoding="utf-8")
        print(f"wrote {path.name}: {len(t.keyframes)} keyframes, "
              f"{per_evaluation_ops(t):.1f} formula ops per evaluation")

    plain = per_evaluation_ops(rainbench("RainBench", 62, "plain"))
    heavy = per_evaluation_ops(rainbench("RainBenchF", 62, "heavy"))
    ratio = heavy / plain
    print(f"RainBenchF / RainBench per-evaluation op ratio: {ratio:.2f}")
    if not 7.0 <= ratio <= 11.0:
        raise SystemExit("op ratio drifted out of the ~9x target band")
    return 0


if __name__ == "__main__":
    sys.exit(main())
