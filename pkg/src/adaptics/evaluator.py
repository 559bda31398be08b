"""Focal-point sample synthesis for tacton playback.

Converts (tacton, playback state, parameter environment, device timestep)
into batches of focal-point samples: keyframe interpolation, brush sweeps,
AM/STM modulation, conditional jumps, playback speed, and post-processing.

Pattern time is integrated from device time (``pt += speed * dt`` every
sample); it is never derived from a wall clock.  Modulation phases
accumulate in device time so perceived frequency is invariant under
playback-speed changes, and are wrapped to [0, 2*pi) after every sample.
Hostile formula outputs are clamped or sanitized so emitted amplitudes
stay in [0, 1] and positions stay finite.

``eval_batch`` is the hot path: post-processing formulas are evaluated
once per batch, keyframe-endpoint formulas once per segment entry (the
environment only changes between batches), and the per-sample loop runs
on plain floats.  In steady state it allocates no buffers; reusable
workspace lives in :class:`EvalScratch` and :class:`SampleBuffer`, whose
growth is counted by the allocation hook ``EvalScratch.buffer_allocations``.
"""

from __future__ import annotations

import math
from array import array
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Mapping, Optional

from .formula import compile_expr, eval_formula_ex
from .model import JUMP_OPS, Keyframe, PostProcessing, Tacton

__all__ = [
    "PlaybackState",
    "BrushState",
    "FocalPointSample",
    "JumpResult",
    "EvaluatedPost",
    "SampleBuffer",
    "EvalScratch",
    "IDENTITY_TRANSFORM",
    "validate_transform",
    "keyframe_segment_at",
    "interpolate_state",
    "resolve_jumps",
    "advance_pattern_time",
    "brush_offset",
    "am_factor",
    "evaluate_post",
    "compose_post_matrix",
    "apply_post",
    "eval_batch",
    "JUMP_BUDGET",
]

_INF = math.inf
_TWO_PI = 2.0 * math.pi

JUMP_BUDGET = 16

IDENTITY_TRANSFORM: tuple[float, ...] = (
    1.0, 0.0, 0.0, 0.0,
    0.0, 1.0, 0.0, 0.0,
    0.0, 0.0, 1.0, 0.0,
    0.0, 0.0, 0.0, 1.0,
)


def validate_transform(matrix) -> tuple[float, ...]:
    """Check a 16-number row-major homogeneous matrix; returns it as a tuple."""
    try:
        m = tuple(float(v) for v in matrix)
    except (TypeError, ValueError):
        raise ValueError("transform must be a sequence of 16 numbers") from None
    if len(m) != 16:
        raise ValueError(f"transform must have 16 entries, got {len(m)}")
    if not all(math.isfinite(v) for v in m):
        raise ValueError("transform entries must be finite")
    if m[12:16] != (0.0, 0.0, 0.0, 1.0):
        raise ValueError("transform bottom row must be (0, 0, 0, 1)")
    return m


@dataclass(slots=True)
class PlaybackState:
    """Mutable per-playback bookkeeping, advanced only by device time."""

    pattern_time: float = 0.0  # seconds, signed
    stm_phase: float = 0.0  # radians, in [0, 2*pi)
    am_phase: float = 0.0  # radians, in [0, 2*pi)
    finished: bool = False
    jump_warnings: int = 0
    last_device_time: float = 0.0


@dataclass(frozen=True, slots=True)
class BrushState:
    x: float
    y: float
    z: float
    kind: str
    size: float  # mm, >= 0
    rotation: float  # degrees
    am_freq: float  # Hz, in [0, 1000]
    stm_freq: float  # Hz, in [0, 1000]
    intensity: float  # in [0, 1]


@dataclass(frozen=True, slots=True)
class FocalPointSample:
    x: float
    y: float
    z: float
    amplitude: float  # in [0, 1]
    pattern_time: float


@dataclass(frozen=True, slots=True)
class JumpResult:
    time: float
    jumped: bool
    budget_exhausted: bool


@dataclass(frozen=True, slots=True)
class EvaluatedPost:
    speed: float
    intensity_factor: float  # already clamped to [0, 1]
    translate: tuple[float, float, float]
    rotation_z: float
    scale: float
    warnings: int  # sanitized non-finite evaluations


class SampleBuffer:
    """Reusable batch output: parallel float64 arrays, valid up to ``n``.

    The evaluator owns and reuses one buffer; callers that keep samples
    across batches must copy them out.
    """

    __slots__ = ("x", "y", "z", "amplitude", "pattern_time", "n", "capacity")

    def __init__(self) -> None:
        self.x = array("d")
        self.y = array("d")
        self.z = array("d")
        self.amplitude = array("d")
        self.pattern_time = array("d")
        self.n = 0
        self.capacity = 0

    def ensure(self, n: int, scratch: Optional["EvalScratch"] = None) -> None:
        if n <= self.capacity:
            return
        cap = max(n, 2 * self.capacity)
        blank = bytes(8 * cap)
        self.x = array("d", blank)
        self.y = array("d", blank)
        self.z = array("d", blank)
        self.amplitude = array("d", blank)
        self.pattern_time = array("d", blank)
        self.capacity = cap
        if scratch is not None:
            scratch.buffer_allocations += 1

    def sample(self, i: int) -> FocalPointSample:
        if not 0 <= i < self.n:
            raise IndexError(i)
        return FocalPointSample(
            self.x[i], self.y[i], self.z[i], self.amplitude[i], self.pattern_time[i]
        )

    def samples(self) -> list[FocalPointSample]:
        return [self.sample(i) for i in range(self.n)]


class _Plan:
    """Per-tacton compiled lookup tables for the batch loop."""

    __slots__ = (
        "tacton", "times", "last_time", "finishable",
        "xs", "ys", "zs", "fns", "is_line",
        "coords_lin", "brush_lin", "int_lin", "jumps",
        "speed_fn", "ifac_fn", "tx_fn", "ty_fn", "tz_fn", "rotz_fn", "scale_fn",
    )

    def __init__(self, tacton: Tacton):
        kfs = tacton.keyframes
        self.tacton = tacton
        self.times = tuple(k.time for k in kfs)
        self.last_time = self.times[-1]
        self.finishable = len(kfs) > 1
        self.xs = tuple(k.coords[0] for k in kfs)
        self.ys = tuple(k.coords[1] for k in kfs)
        self.zs = tuple(k.coords[2] for k in kfs)
        # per keyframe: compiled (size, rotation, am_freq, stm_freq, intensity)
        self.fns = tuple(
            (
                compile_expr(k.brush.size.root),
                compile_expr(k.brush.rotation.root),
                compile_expr(k.brush.am_freq.root),
                compile_expr(k.brush.stm_freq.root),
                compile_expr(k.intensity.root),
            )
            for k in kfs
        )
        self.is_line = tuple(k.brush.kind == "line" for k in kfs)
        self.coords_lin = tuple(k.coords_transition == "linear" for k in kfs)
        self.brush_lin = tuple(k.brush_transition == "linear" for k in kfs)
        self.int_lin = tuple(k.intensity_transition == "linear" for k in kfs)
        self.jumps = tuple(
            tuple((j.param, JUMP_OPS.index(j.op), j.threshold, j.target) for j in k.jumps)
            for k in kfs
        )
        post = tacton.post
        self.speed_fn = compile_expr(post.playback_speed.root)
        self.ifac_fn = compile_expr(post.intensity_factor.root)
        self.tx_fn = compile_expr(post.translate[0].root)
        self.ty_fn = compile_expr(post.translate[1].root)
        self.tz_fn = compile_expr(post.translate[2].root)
        self.rotz_fn = compile_expr(post.rotation_z.root)
        self.scale_fn = compile_expr(post.scale.root)


class EvalScratch:
    """Reusable evaluator workspace.

    ``buffer_allocations`` is the allocation-counting hook: it counts
    plan compilations and sample-buffer growth on the batch path.  After
    warm-up, steady-state batch evaluation must not move it.
    ``formula_warnings`` counts sanitized non-finite formula results.
    """

    __slots__ = ("plan", "formula_warnings", "buffer_allocations")

    def __init__(self) -> None:
        self.plan: Optional[_Plan] = None
        self.formula_warnings = 0
        self.buffer_allocations = 0

    def plan_for(self, tacton: Tacton) -> _Plan:
        plan = self.plan
        if plan is None or plan.tacton is not tacton:
            plan = _Plan(tacton)
            self.plan = plan
            self.buffer_allocations += 1
        return plan


# ---------------------------------------------------------------------------
# segment lookup and interpolation


def keyframe_segment_at(t: Tacton, pt: float) -> tuple[Keyframe, Optional[Keyframe]]:
    """Locate the keyframe segment containing pattern time ``pt``.

    Returns (prev, next): prev is the last keyframe with time <= pt (the
    first keyframe if pt lies before the start, in which case next is
    that same keyframe), next is the first keyframe with time > pt, or
    None past the end.  Binary search; the batch loop uses a prebuilt
    plan instead of calling this.
    """
    times = [k.time for k in t.keyframes]
    i = bisect_right(times, pt) - 1
    if i < 0:
        first = t.keyframes[0]
        return first, first
    if i == len(times) - 1:
        return t.keyframes[-1], None
    return t.keyframes[i], t.keyframes[i + 1]


def _clamp_size(v: float) -> float:
    return v if 0.0 <= v < _INF else 0.0


def _clamp_freq(v: float) -> float:
    if not 0.0 <= v:
        return 0.0
    return v if v <= 1000.0 else 1000.0


def _clamp01(v: float) -> float:
    if not 0.0 <= v:
        return 0.0
    return v if v <= 1.0 else 1.0


def _finite_or_zero(v: float) -> float:
    return v if -_INF < v < _INF else 0.0


def interpolate_state(t: Tacton, pt: float, env: Mapping[str, float]) -> BrushState:
    """Interpolated brush state at pattern time ``pt``.

    Each property group follows the transition mode of the destination
    keyframe (linear: affine in time; step: hold the previous keyframe's
    value until the destination time).  Formula fields are evaluated at
    both endpoint keyframes first, then interpolated; the brush kind
    always steps.  Outputs are clamped: size >= 0, frequencies to
    [0, 1000] Hz, intensity to [0, 1].
    """
    prev, nxt = keyframe_segment_at(t, pt)

    def fields(k: Keyframe) -> tuple[float, float, float, float, float]:
        return (
            eval_formula_ex(k.brush.size.root, env)[0],
            eval_formula_ex(k.brush.rotation.root, env)[0],
            eval_formula_ex(k.brush.am_freq.root, env)[0],
            eval_formula_ex(k.brush.stm_freq.root, env)[0],
            eval_formula_ex(k.intensity.root, env)[0],
        )

    p = fields(prev)
    if nxt is None or nxt is prev:
        x, y, z = prev.coords
        size, rot, amf, stf, inten = p
    else:
        q = fields(nxt)
        alpha = (pt - prev.time) / (nxt.time - prev.time)

        def mix(a: float, b: float, linear: bool) -> float:
            return a + (b - a) * alpha if linear else a

        x = mix(prev.coords[0], nxt.coords[0], nxt.coords_transition == "linear")
        y = mix(prev.coords[1], nxt.coords[1], nxt.coords_transition == "linear")
        z = mix(prev.coords[2], nxt.coords[2], nxt.coords_transition == "linear")
        blin = nxt.brush_transition == "linear"
        size = mix(p[0], q[0], blin)
        rot = mix(p[1], q[1], blin)
        amf = mix(p[2], q[2], blin)
        stf = mix(p[3], q[3], blin)
        inten = mix(p[4], q[4], nxt.intensity_transition == "linear")

    return BrushState(
        x=_finite_or_zero(x),
        y=_finite_or_zero(y),
        z=_finite_or_zero(z),
        kind=prev.brush.kind,
        size=_clamp_size(size),
        rotation=_finite_or_zero(rot),
        am_freq=_clamp_freq(amf),
        stm_freq=_clamp_freq(stf),
        intensity=_clamp01(inten),
    )


# ---------------------------------------------------------------------------
# conditional jumps


def _first_fired(jump_rows, env: Mapping[str, float]) -> Optional[float]:
    for name, op, threshold, target in jump_rows:
        v = env.get(name, 0.0)
        if op == 0:
            if v < threshold:
                return target
        elif op == 1:
            if v <= threshold:
                return target
        elif op == 2:
            if v > threshold:
                return target
        elif v >= threshold:
            return target
    return None


def _resolve_crossings(times, jumps, env, a: float, b: float, forward: bool,
                       budget: int = JUMP_BUDGET) -> tuple[float, bool, bool]:
    """Jump resolution over one travel interval.

    Keyframes whose time lies in (a, b] (forward) or [b, a) (backward)
    are visited in travel order; each evaluates its jumps in declared
    order.  The first satisfied condition sets pattern time to exactly
    its target, discarding the leftover interval; a keyframe lying
    exactly at the landing target is then evaluated in turn.  Every fired
    jump consumes one budget unit; when the budget hits zero resolution
    stops where it is and reports exhaustion.
    """
    jumped = False
    while True:
        if forward:
            i = bisect_right(times, a)
            if i >= len(times) or times[i] > b:
                return b, jumped, False
        else:
            i = bisect_left(times, a) - 1
            if i < 0 or times[i] < b:
                return b, jumped, False
        target = _first_fired(jumps[i], env)
        if target is None:
            a = times[i]
            continue
        jumped = True
        budget -= 1
        if budget <= 0:
            return target, True, True
        pt = target
        while True:
            j = bisect_left(times, pt)
            if j < len(times) and times[j] == pt:
                t2 = _first_fired(jumps[j], env)
                if t2 is not None:
                    budget -= 1
                    if budget <= 0:
                        return t2, True, True
                    pt = t2
                    continue
            return pt, True, False


def resolve_jumps(t: Tacton, t_prev: float, t_next: float, env: Mapping[str, float],
                  budget: int = JUMP_BUDGET) -> JumpResult:
    """Resolve conditional jumps for travel from ``t_prev`` to ``t_next``."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    times = [k.time for k in t.keyframes]
    jumps = [
        tuple((j.param, JUMP_OPS.index(j.op), j.threshold, j.target) for j in k.jumps)
        for k in t.keyframes
    ]
    pt, jumped, exhausted = _resolve_crossings(
        times, jumps, env, t_prev, t_next, t_next >= t_prev, budget
    )
    return JumpResult(pt, jumped, exhausted)


def advance_pattern_time(state: PlaybackState, dt_device: float, speed: float) -> float:
    """Pattern time after one device step: ``pattern_time + speed * dt``.

    Pure integration; speed may be negative or zero.  Does not mutate.
    """
    if dt_device < 0:
        raise ValueError("device timestep must be >= 0")
    return state.pattern_time + speed * dt_device


# ---------------------------------------------------------------------------
# brushes, modulation, post-processing


def brush_offset(b: BrushState, stm_phase: float) -> tuple[float, float]:
    """Brush sweep offset from the interpolated center at an STM phase.

    Circle: a point on the radius-``size`` circle.  Line: a sinusoidal
    sweep spanning [-size, +size] along the unit vector at ``rotation``
    degrees.
    """
    if b.kind == "line":
        c = b.size * math.cos(stm_phase)
        rad = math.radians(b.rotation)
        return c * math.cos(rad), c * math.sin(rad)
    return b.size * math.cos(stm_phase), b.size * math.sin(stm_phase)


def am_factor(am_freq: float, am_phase: float) -> float:
    """Raised-cosine AM envelope in [0, 1]; an AM frequency of 0 disables it."""
    if am_freq == 0.0:
        return 1.0
    return 0.5 * (1.0 - math.cos(am_phase))


def evaluate_post(post: PostProcessing, env: Mapping[str, float]) -> EvaluatedPost:
    """Evaluate all post-processing formulas against the environment."""
    warnings = 0

    def ev(f) -> float:
        nonlocal warnings
        v, warned = eval_formula_ex(f.root, env)
        if warned:
            warnings += 1
        return v

    return EvaluatedPost(
        speed=ev(post.playback_speed),
        intensity_factor=_clamp01(ev(post.intensity_factor)),
        translate=(ev(post.translate[0]), ev(post.translate[1]), ev(post.translate[2])),
        rotation_z=ev(post.rotation_z),
        scale=ev(post.scale),
        warnings=warnings,
    )


def compose_post_matrix(host, tx: float, ty: float, tz: float,
                        rotation_z_deg: float, scale: float) -> tuple[float, ...]:
    """Top three rows of host x T(translate) x Rz(rotation) x S(scale).

    Returned as 12 scalars (m00..m03, m10..m13, m20..m23); the bottom row
    is always (0, 0, 0, 1).
    """
    rad = math.radians(rotation_z_deg)
    c = math.cos(rad)
    s = math.sin(rad)
    sc = scale * c
    ss = scale * s
    h = host
    return (
        h[0] * sc + h[1] * ss, h[1] * sc - h[0] * ss, h[2] * scale,
        h[0] * tx + h[1] * ty + h[2] * tz + h[3],
        h[4] * sc + h[5] * ss, h[5] * sc - h[4] * ss, h[6] * scale,
        h[4] * tx + h[5] * ty + h[6] * tz + h[7],
        h[8] * sc + h[9] * ss, h[9] * sc - h[8] * ss, h[10] * scale,
        h[8] * tx + h[9] * ty + h[10] * tz + h[11],
    )


def apply_post(point: tuple[float, float, float], intensity: float,
               post: EvaluatedPost, host=IDENTITY_TRANSFORM
               ) -> tuple[tuple[float, float, float], float]:
    """Post-processed sample fields for one point.

    position = host x T x Rz x S x point (scale first, host last);
    amplitude = intensity x clamp01(intensity_factor).
    """
    m = compose_post_matrix(
        host, post.translate[0], post.translate[1], post.translate[2],
        post.rotation_z, post.scale,
    )
    x, y, z = point
    px = m[0] * x + m[1] * y + m[2] * z + m[3]
    py = m[4] * x + m[5] * y + m[6] * z + m[7]
    pz = m[8] * x + m[9] * y + m[10] * z + m[11]
    return (
        (_finite_or_zero(px), _finite_or_zero(py), _finite_or_zero(pz)),
        intensity * post.intensity_factor,
    )


# ---------------------------------------------------------------------------
# batch evaluation


def _segment_values(plan: _Plan, env: Mapping[str, float], pt: float):
    """Evaluate and cache everything needed to render inside one segment.

    Returns (20-tuple of segment constants, sanitized-eval count).  The
    tuple is (lo, hi, t0, x0, sx, y0, sy, z0, sz, size0, ssize, rot0,
    srot, am0, sam, stm0, sstm, int0, sint, is_line); ``lo``/``hi`` are
    the pattern times at which the segment stops being valid.
    """
    times = plan.times
    warn = 0

    def ev(fns_i):
        nonlocal warn
        out = []
        for fn in fns_i:
            v = fn(env)
            if not -_INF < v < _INF:
                v = 0.0
                warn += 1
            out.append(v)
        return out

    i = bisect_right(times, pt) - 1
    if i < 0:
        size0, rot0, am0, stm0, int0 = ev(plan.fns[0])
        seg = (
            -_INF, times[0], times[0],
            plan.xs[0], 0.0, plan.ys[0], 0.0, plan.zs[0], 0.0,
            size0, 0.0, rot0, 0.0, am0, 0.0, stm0, 0.0, int0, 0.0,
            plan.is_line[0],
        )
        return seg, warn
    if i == len(times) - 1:
        size0, rot0, am0, stm0, int0 = ev(plan.fns[i])
        seg = (
            times[i], _INF, times[i],
            plan.xs[i], 0.0, plan.ys[i], 0.0, plan.zs[i], 0.0,
            size0, 0.0, rot0, 0.0, am0, 0.0, stm0, 0.0, int0, 0.0,
            plan.is_line[i],
        )
        return seg, warn
    j = i + 1
    t0 = times[i]
    inv = 1.0 / (times[j] - t0)
    size0, rot0, am0, stm0, int0 = ev(plan.fns[i])
    size1, rot1, am1, stm1, int1 = ev(plan.fns[j])
    if plan.coords_lin[j]:
        sx = (plan.xs[j] - plan.xs[i]) * inv
        sy = (plan.ys[j] - plan.ys[i]) * inv
        sz = (plan.zs[j] - plan.zs[i]) * inv
    else:
        sx = sy = sz = 0.0
    if plan.brush_lin[j]:
        ssize = (size1 - size0) * inv
        srot = (rot1 - rot0) * inv
        sam = (am1 - am0) * inv
        sstm = (stm1 - stm0) * inv
    else:
        ssize = srot = sam = sstm = 0.0
    sint = (int1 - int0) * inv if plan.int_lin[j] else 0.0
    seg = (
        t0, times[j], t0,
        plan.xs[i], sx, plan.ys[i], sy, plan.zs[i], sz,
        size0, ssize, rot0, srot, am0, sam, stm0, sstm, int0, sint,
        plan.is_line[i],
    )
    return seg, warn


def _finished_template(plan: _Plan, env: Mapping[str, float], stm_phase: float,
                       m) -> tuple[float, float, float, int]:
    """Silent-sample position held after the pattern ends."""
    warn = 0
    size = plan.fns[-1][0](env)
    if not -_INF < size < _INF:
        size = 0.0
        warn += 1
    size = _clamp_size(size)
    if plan.is_line[-1]:
        rot = plan.fns[-1][1](env)
        if not -_INF < rot < _INF:
            rot = 0.0
            warn += 1
        c = size * math.cos(stm_phase)
        rad = math.radians(rot)
        dx = c * math.cos(rad)
        dy = c * math.sin(rad)
    else:
        dx = size * math.cos(stm_phase)
        dy = size * math.sin(stm_phase)
    x = plan.xs[-1] + dx
    y = plan.ys[-1] + dy
    z = plan.zs[-1]
    px = m[0] * x + m[1] * y + m[2] * z + m[3]
    py = m[4] * x + m[5] * y + m[6] * z + m[7]
    pz = m[8] * x + m[9] * y + m[10] * z + m[11]
    return _finite_or_zero(px), _finite_or_zero(py), _finite_or_zero(pz), warn


def eval_batch(tacton: Tacton, state: PlaybackState, env: Mapping[str, float],
               host, n: int, device_dt: float,
               out: Optional[SampleBuffer] = None,
               scratch: Optional[EvalScratch] = None) -> SampleBuffer:
    """Evaluate ``n`` focal-point samples, mutating ``state``.

    Playback speed and the post-processing transform are evaluated once
    at batch start; within a batch the environment is fixed by contract,
    so keyframe-endpoint formulas are evaluated on segment entry only.
    Once pattern time passes the final keyframe with no jump firing (a
    single-keyframe tacton never does: it is a static pattern), the state
    finishes: pattern time clamps to the final keyframe, phases freeze,
    and samples are emitted silent at the last position.
    """
    if n < 1:
        raise ValueError("batch size must be >= 1")
    if not device_dt > 0.0:
        raise ValueError("device timestep must be > 0")
    if scratch is None:
        scratch = EvalScratch()
    if out is None:
        out = SampleBuffer()
    plan = scratch.plan_for(tacton)
    out.ensure(n, scratch)

    cos = math.cos
    sin = math.sin
    rad_per_deg = math.pi / 180.0
    two_pi = _TWO_PI
    inf = _INF
    neg_inf = -_INF

    fw = 0  # sanitized formula evaluations this batch

    v = plan.speed_fn(env)
    if not neg_inf < v < inf:
        v = 0.0
        fw += 1
    speed = v
    v = plan.ifac_fn(env)
    if not neg_inf < v < inf:
        v = 0.0
        fw += 1
    ifac = _clamp01(v)
    v = plan.tx_fn(env)
    if not neg_inf < v < inf:
        v = 0.0
        fw += 1
    tx = v
    v = plan.ty_fn(env)
    if not neg_inf < v < inf:
        v = 0.0
        fw += 1
    ty = v
    v = plan.tz_fn(env)
    if not neg_inf < v < inf:
        v = 0.0
        fw += 1
    tz = v
    v = plan.rotz_fn(env)
    if not neg_inf < v < inf:
        v = 0.0
        fw += 1
    rotz = v
    v = plan.scale_fn(env)
    if not neg_inf < v < inf:
        v = 0.0
        fw += 1
    scale = v

    m = compose_post_matrix(host, tx, ty, tz, rotz, scale)
    m00, m01, m02, m03, m10, m11, m12, m13, m20, m21, m22, m23 = m

    out_x = out.x
    out_y = out.y
    out_z = out.z
    out_a = out.amplitude
    out_p = out.pattern_time

    pt = state.pattern_time
    stm_ph = state.stm_phase
    am_ph = state.am_phase
    finished = state.finished
    jw = state.jump_warnings

    times = plan.times
    jumps = plan.jumps
    last_time = plan.last_time
    fin_thresh = last_time if plan.finishable else inf
    sdt = speed * device_dt
    phase_k = two_pi * device_dt

    # a state already past the end (possible only by construction; playback
    # clamps on finish and hot reload clamps into range) finishes at once
    if not finished and plan.finishable and pt > last_time:
        finished = True
        pt = last_time

    i = 0
    if not finished:
        seg, w = _segment_values(plan, env, pt)
        fw += w
        (seg_lo, seg_hi, t0,
         x0, sx, y0, sy, z0, sz,
         size0, ssize, rot0, srot, am0, sam, stm0, sstm, int0, sint,
         is_line) = seg

        while i < n:
            pt0 = pt
            pt = pt0 + sdt
            if sdt > 0.0:
                if pt >= seg_hi or pt > fin_thresh:
                    pt, jumped, warned = _resolve_crossings(times, jumps, env, pt0, pt, True)
                    if warned:
                        jw += 1
                    if not jumped and pt > fin_thresh:
                        finished = True
                        pt = last_time
                        break
                    seg, w = _segment_values(plan, env, pt)
                    fw += w
                    (seg_lo, seg_hi, t0,
                     x0, sx, y0, sy, z0, sz,
                     size0, ssize, rot0, srot, am0, sam, stm0, sstm, int0, sint,
                     is_line) = seg
            elif sdt < 0.0:
                if pt < seg_lo:
                    pt, jumped, warned = _resolve_crossings(times, jumps, env, pt0, pt, False)
                    if warned:
                        jw += 1
                    seg, w = _segment_values(plan, env, pt)
                    fw += w
                    (seg_lo, seg_hi, t0,
                     x0, sx, y0, sy, z0, sz,
                     size0, ssize, rot0, srot, am0, sam, stm0, sstm, int0, sint,
                     is_line) = seg

            d = pt - t0
            size = size0 + ssize * d
            if not 0.0 <= size < inf:
                size = 0.0
            amf = am0 + sam * d
            if not 0.0 <= amf:
                amf = 0.0
            elif amf > 1000.0:
                amf = 1000.0
            stf = stm0 + sstm * d
            if not 0.0 <= stf:
                stf = 0.0
            elif stf > 1000.0:
                stf = 1000.0
            inten = int0 + sint * d
            if not 0.0 <= inten:
                inten = 0.0
            elif inten > 1.0:
                inten = 1.0

            stm_ph = (stm_ph + stf * phase_k) % two_pi
            am_ph = (am_ph + amf * phase_k) % two_pi

            if is_line:
                rot = rot0 + srot * d
                if not neg_inf < rot < inf:
                    rot = 0.0
                c = size * cos(stm_ph)
                rr = rot * rad_per_deg
                dx = c * cos(rr)
                dy = c * sin(rr)
            else:
                dx = size * cos(stm_ph)
                dy = size * sin(stm_ph)

            if amf != 0.0:
                af = 0.5 * (1.0 - cos(am_ph))
            else:
                af = 1.0

            x = x0 + sx * d + dx
            y = y0 + sy * d + dy
            z = z0 + sz * d
            px = m00 * x + m01 * y + m02 * z + m03
            py = m10 * x + m11 * y + m12 * z + m13
            pz = m20 * x + m21 * y + m22 * z + m23
            if not neg_inf < px < inf:
                px = 0.0
            if not neg_inf < py < inf:
                py = 0.0
            if not neg_inf < pz < inf:
                pz = 0.0

            out_x[i] = px
            out_y[i] = py
            out_z[i] = pz
            out_a[i] = inten * af * ifac
            out_p[i] = pt
            i += 1

    if finished and i < n:
        fx, fy, fz, w = _finished_template(plan, env, stm_ph, m)
        fw += w
        pt = last_time if plan.finishable else pt
        for j in range(i, n):
            out_x[j] = fx
            out_y[j] = fy
            out_z[j] = fz
            out_a[j] = 0.0
            out_p[j] = pt

    out.n = n
    state.pattern_time = pt
    state.stm_phase = stm_ph
    state.am_phase = am_ph
    state.finished = finished
    state.jump_warnings = jw
    scratch.formula_warnings += fw
    return out
