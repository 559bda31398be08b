"""Seeded random generators shared by the unit and acceptance suites."""

from __future__ import annotations

import random

from adaptics.formula import format_param_ref
from adaptics.model import (
    BrushSpec,
    ConditionalJump,
    Formula,
    Keyframe,
    ParamDecl,
    PostProcessing,
    Tacton,
)

PARAM_NAMES = ("a", "b", "proximity", "wave height", "hp_2")


def random_expr_src(rng: random.Random, depth: int = 0) -> str:
    """Arbitrary formula source exercising the whole grammar."""
    roll = rng.random()
    if depth >= 4 or roll < 0.35:
        if rng.random() < 0.5:
            c = rng.choice([0, 1, 2, 15, 0.25, 3.5, 1e3, 7e-3])
            return repr(c) if rng.random() < 0.5 else str(c)
        name = rng.choice(PARAM_NAMES)
        return f"`{name}`" if (" " in name or rng.random() < 0.2) else name
    if roll < 0.45:
        return f"-{random_expr_src(rng, depth + 1)}"
    op = rng.choice("+-*/")
    left = random_expr_src(rng, depth + 1)
    right = random_expr_src(rng, depth + 1)
    sp = rng.choice(["", " ", "  "])
    src = f"{left}{sp}{op}{sp}{right}"
    return f"({src})" if rng.random() < 0.4 else src


def random_env(rng: random.Random) -> dict[str, float]:
    env = {}
    for name in PARAM_NAMES:
        if rng.random() < 0.8:
            env[name] = round(rng.uniform(-3.0, 3.0), 3)
    return env


def bounded_formula(rng: random.Random, params: list[str], lo: float, hi: float) -> Formula:
    """Formula whose values stay moderate (for tolerance-based comparisons).

    Divisions use either denominators bounded away from zero or an exact
    zero constant (which the evaluator sanitizes to 0 on both routes), so
    results never sit near the float-precision cliff.
    """

    def leaf() -> str:
        if params and rng.random() < 0.5:
            return format_param_ref(rng.choice(params))
        return repr(round(rng.uniform(lo, hi), 3))

    def node(depth: int) -> str:
        if depth >= 3 or rng.random() < 0.4:
            return leaf()
        roll = rng.random()
        if roll < 0.12:
            return f"-({node(depth + 1)})"
        if roll < 0.24:
            denom = "0" if rng.random() < 0.3 else repr(round(rng.choice([1, -1]) * rng.uniform(0.5, 4.0), 3))
            return f"({node(depth + 1)}) / {denom}"
        op = rng.choice(["+", "-", "*"])
        right = leaf() if op == "*" else node(depth + 1)
        return f"({node(depth + 1)}) {op} {right}"

    return Formula.of(node(0))


def random_tacton(rng: random.Random, max_keyframes: int = 16) -> Tacton:
    """Valid-by-construction tacton: random transitions, jumps, formulas."""
    params = [ParamDecl(name, round(rng.uniform(0, 1), 3)) for name in PARAM_NAMES[: rng.randint(1, 4)]]
    names = [p.name for p in params]
    n_kf = rng.randint(1, max_keyframes)
    times = []
    t = 0.0 if rng.random() < 0.7 else round(rng.uniform(0.0, 0.05), 4)
    for _ in range(n_kf):
        times.append(round(t, 6))
        t += rng.uniform(0.01, 0.15)
    last_time = times[-1]

    def transition() -> str:
        return "linear" if rng.random() < 0.6 else "step"

    keyframes = []
    for i, kt in enumerate(times):
        jumps = []
        if rng.random() < 0.35:
            for _ in range(rng.randint(1, 2)):
                if rng.random() < 0.7:
                    target = rng.choice(times)  # exact keyframe landings
                else:
                    target = round(rng.uniform(0.0, last_time), 6)
                jumps.append(ConditionalJump(
                    param=rng.choice(names),
                    op=rng.choice(("<", "<=", ">", ">=")),
                    threshold=round(rng.uniform(-1.0, 2.0), 3),
                    target=target,
                ))
        keyframes.append(Keyframe(
            time=kt,
            coords=(
                round(rng.uniform(-100, 100), 2),
                round(rng.uniform(-100, 100), 2),
                round(rng.uniform(120, 280), 2),
            ),
            coords_transition=transition(),
            brush=BrushSpec(
                kind=rng.choice(("circle", "line")),
                size=bounded_formula(rng, names, 0.0, 25.0),
                rotation=bounded_formula(rng, names, -180.0, 180.0),
                am_freq=bounded_formula(rng, names, 0.0, 900.0),
                stm_freq=bounded_formula(rng, names, 0.0, 900.0),
            ),
            brush_transition=transition(),
            intensity=bounded_formula(rng, names, 0.0, 1.2),
            intensity_transition=transition(),
            jumps=tuple(jumps),
        ))

    speed_choices = ["1", "-1", "0.5", "0", "2", "a - 0.5", "-(b)"]
    post = PostProcessing(
        playback_speed=Formula.of(rng.choice(speed_choices)),
        intensity_factor=bounded_formula(rng, names, 0.0, 1.2),
        translate=(
            bounded_formula(rng, names, -40.0, 40.0),
            bounded_formula(rng, names, -40.0, 40.0),
            bounded_formula(rng, names, -40.0, 40.0),
        ),
        rotation_z=bounded_formula(rng, names, -180.0, 180.0),
        scale=bounded_formula(rng, names, 0.2, 2.0),
    )
    return Tacton(
        name=f"fuzz-{rng.randrange(1_000_000)}",
        params=tuple(params),
        keyframes=tuple(keyframes),
        post=post,
    )
