"""Tacton document model, the canonical `.adaptics` JSON format, and validation.

A tacton is a named pattern: ordered keyframes, a post-processing block,
and declared external parameters.  Values are immutable after parsing;
edits build new values.  The on-disk format is UTF-8 JSON with
``format_version: 1``; formulas are stored as their source text verbatim
(see ``docs/adaptics-format.md`` for the full schema).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional

from .formula import Expr, FormulaError, is_valid_param_name, parse_formula

__all__ = [
    "FORMAT_VERSION",
    "TRANSITIONS",
    "BRUSH_KINDS",
    "JUMP_OPS",
    "DEFAULT_Z_MM",
    "Formula",
    "ParamDecl",
    "ConditionalJump",
    "BrushSpec",
    "PostProcessing",
    "Keyframe",
    "Tacton",
    "Violation",
    "TactonError",
    "TactonParseError",
    "TactonValidationError",
    "parse_tacton",
    "tacton_from_obj",
    "serialize_tacton",
    "tacton_to_obj",
    "validate_tacton",
]

FORMAT_VERSION = 1
TRANSITIONS = ("linear", "step")
BRUSH_KINDS = ("circle", "line")
JUMP_OPS = ("<", "<=", ">", ">=")

# The designer canvas edits x-y on a plane at this focal height.
DEFAULT_Z_MM = 200.0

# Workspace sanity bounds, millimeters.
MAX_XY_MM = 500.0
MAX_Z_MM = 1000.0


@dataclass(frozen=True, slots=True)
class Formula:
    """A formula field: source text (preserved verbatim) plus its parsed tree."""

    src: str
    root: Expr

    @classmethod
    def of(cls, src: str) -> "Formula":
        return cls(src, parse_formula(src))


@dataclass(frozen=True, slots=True)
class ParamDecl:
    name: str
    default: float = 0.0


@dataclass(frozen=True, slots=True)
class ConditionalJump:
    param: str
    op: str  # one of JUMP_OPS
    threshold: float
    target: float  # seconds


@dataclass(frozen=True, slots=True)
class BrushSpec:
    kind: str  # circle | line
    size: Formula  # circle: radius mm; line: half-length mm
    rotation: Formula  # degrees, meaningful for line
    am_freq: Formula  # Hz
    stm_freq: Formula  # Hz


@dataclass(frozen=True, slots=True)
class PostProcessing:
    playback_speed: Formula
    intensity_factor: Formula
    translate: tuple[Formula, Formula, Formula]  # mm
    rotation_z: Formula  # degrees
    scale: Formula

    @classmethod
    def identity(cls) -> "PostProcessing":
        one = Formula.of("1")
        zero = Formula.of("0")
        return cls(one, one, (zero, zero, zero), zero, one)


@dataclass(frozen=True, slots=True)
class Keyframe:
    time: float  # seconds, constant
    coords: tuple[float, float, float]  # mm, constant
    coords_transition: str
    brush: BrushSpec
    brush_transition: str
    intensity: Formula
    intensity_transition: str
    jumps: tuple[ConditionalJump, ...] = ()


@dataclass(frozen=True, slots=True)
class Tacton:
    name: str
    params: tuple[ParamDecl, ...]
    keyframes: tuple[Keyframe, ...]
    post: PostProcessing
    format_version: int = FORMAT_VERSION

    def default_env(self) -> dict[str, float]:
        return {p.name: p.default for p in self.params}

    @property
    def last_time(self) -> float:
        return self.keyframes[-1].time


@dataclass(frozen=True, slots=True)
class Violation:
    code: str
    message: str
    path: str


class TactonError(ValueError):
    pass


class TactonParseError(TactonError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class TactonValidationError(TactonError):
    def __init__(self, violations: list[Violation]):
        first = violations[0]
        more = f" (+{len(violations) - 1} more)" if len(violations) > 1 else ""
        super().__init__(f"{first.path}: {first.message}{more}")
        self.violations = violations


# ---------------------------------------------------------------------------
# parsing


def _err(path: str, message: str) -> TactonParseError:
    return TactonParseError(message, path)


def _get_number(obj: dict, key: str, path: str, default: Optional[float] = None) -> float:
    if key not in obj:
        if default is not None:
            return default
        raise _err(f"{path}.{key}", "missing required field")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(f"{path}.{key}", f"expected a number, got {type(v).__name__}")
    return float(v)


def _get_formula(obj: dict, key: str, path: str, default: Optional[str] = None) -> Formula:
    if key not in obj:
        if default is not None:
            return Formula.of(default)
        raise _err(f"{path}.{key}", "missing required field")
    v = obj[key]
    if isinstance(v, bool):
        raise _err(f"{path}.{key}", "expected a formula string")
    if isinstance(v, (int, float)):
        v = repr(float(v))
    if not isinstance(v, str):
        raise _err(f"{path}.{key}", f"expected a formula string, got {type(v).__name__}")
    try:
        return Formula.of(v)
    except FormulaError as e:
        raise _err(f"{path}.{key}", f"formula syntax error: {e}") from e


def _warn_unknown(obj: dict, known: tuple[str, ...], path: str, warn: Optional[list[str]]) -> None:
    if warn is None:
        return
    for key in obj:
        if key not in known:
            warn.append(f"{path or 'document'}: unknown field {key!r} ignored")


_KF_KEYS = (
    "time",
    "coords",
    "coords_transition",
    "brush",
    "brush_transition",
    "intensity",
    "intensity_transition",
    "jumps",
)
_BRUSH_KEYS = ("kind", "size", "rotation", "am_freq", "stm_freq")
_POST_KEYS = ("playback_speed", "intensity_factor", "translate", "rotation_z", "scale")
_TOP_KEYS = ("format_version", "name", "params", "keyframes", "post")


def _parse_transition(obj: dict, key: str, path: str) -> str:
    v = obj.get(key, "linear")
    if v not in TRANSITIONS:
        raise _err(f"{path}.{key}", f"expected one of {TRANSITIONS}, got {v!r}")
    return v


def _parse_brush(obj: Any, path: str, warn: Optional[list[str]]) -> BrushSpec:
    if not isinstance(obj, dict):
        raise _err(path, "expected an object")
    _warn_unknown(obj, _BRUSH_KEYS, path, warn)
    kind = obj.get("kind")
    if kind not in BRUSH_KINDS:
        raise _err(f"{path}.kind", f"expected one of {BRUSH_KINDS}, got {kind!r}")
    return BrushSpec(
        kind=kind,
        size=_get_formula(obj, "size", path),
        rotation=_get_formula(obj, "rotation", path, default="0"),
        am_freq=_get_formula(obj, "am_freq", path, default="0"),
        stm_freq=_get_formula(obj, "stm_freq", path, default="0"),
    )


def _parse_jump(obj: Any, path: str, warn: Optional[list[str]]) -> ConditionalJump:
    if not isinstance(obj, dict):
        raise _err(path, "expected an object")
    _warn_unknown(obj, ("param", "op", "threshold", "target"), path, warn)
    param = obj.get("param")
    if not isinstance(param, str):
        raise _err(f"{path}.param", "expected a parameter name string")
    op = obj.get("op")
    if op not in JUMP_OPS:
        raise _err(f"{path}.op", f"expected one of {JUMP_OPS}, got {op!r}")
    return ConditionalJump(
        param=param,
        op=op,
        threshold=_get_number(obj, "threshold", path),
        target=_get_number(obj, "target", path),
    )


def _parse_keyframe(obj: Any, path: str, warn: Optional[list[str]]) -> Keyframe:
    if not isinstance(obj, dict):
        raise _err(path, "expected an object")
    _warn_unknown(obj, _KF_KEYS, path, warn)
    coords = obj.get("coords")
    if not isinstance(coords, dict):
        raise _err(f"{path}.coords", "expected an object with x, y, z")
    _warn_unknown(coords, ("x", "y", "z"), f"{path}.coords", warn)
    jumps_obj = obj.get("jumps", [])
    if not isinstance(jumps_obj, list):
        raise _err(f"{path}.jumps", "expected a list")
    return Keyframe(
        time=_get_number(obj, "time", path),
        coords=(
            _get_number(coords, "x", f"{path}.coords"),
            _get_number(coords, "y", f"{path}.coords"),
            _get_number(coords, "z", f"{path}.coords", default=DEFAULT_Z_MM),
        ),
        coords_transition=_parse_transition(obj, "coords_transition", path),
        brush=_parse_brush(obj.get("brush"), f"{path}.brush", warn),
        brush_transition=_parse_transition(obj, "brush_transition", path),
        intensity=_get_formula(obj, "intensity", path, default="1"),
        intensity_transition=_parse_transition(obj, "intensity_transition", path),
        jumps=tuple(
            _parse_jump(j, f"{path}.jumps[{i}]", warn) for i, j in enumerate(jumps_obj)
        ),
    )


def _parse_post(obj: Any, warn: Optional[list[str]]) -> PostProcessing:
    if obj is None:
        return PostProcessing.identity()
    path = "post"
    if not isinstance(obj, dict):
        raise _err(path, "expected an object")
    _warn_unknown(obj, _POST_KEYS, path, warn)
    tr = obj.get("translate")
    if tr is None:
        translate = (Formula.of("0"), Formula.of("0"), Formula.of("0"))
    elif isinstance(tr, dict):
        _warn_unknown(tr, ("x", "y", "z"), f"{path}.translate", warn)
        translate = (
            _get_formula(tr, "x", f"{path}.translate", default="0"),
            _get_formula(tr, "y", f"{path}.translate", default="0"),
            _get_formula(tr, "z", f"{path}.translate", default="0"),
        )
    else:
        raise _err(f"{path}.translate", "expected an object with x, y, z")
    return PostProcessing(
        playback_speed=_get_formula(obj, "playback_speed", path, default="1"),
        intensity_factor=_get_formula(obj, "intensity_factor", path, default="1"),
        translate=translate,
        rotation_z=_get_formula(obj, "rotation_z", path, default="0"),
        scale=_get_formula(obj, "scale", path, default="1"),
    )


def tacton_from_obj(obj: Any, warn: Optional[list[str]] = None) -> Tacton:
    """Build and validate a Tacton from decoded JSON data."""
    if not isinstance(obj, dict):
        raise TactonParseError("document root must be a JSON object")
    _warn_unknown(obj, _TOP_KEYS, "", warn)

    version = obj.get("format_version")
    if isinstance(version, bool) or not isinstance(version, int):
        raise _err("format_version", "missing or non-integer")

    name = obj.get("name", "untitled")
    if not isinstance(name, str):
        raise _err("name", "expected a string")

    params_obj = obj.get("params", [])
    if not isinstance(params_obj, list):
        raise _err("params", "expected a list")
    params = []
    for i, p in enumerate(params_obj):
        if not isinstance(p, dict):
            raise _err(f"params[{i}]", "expected an object")
        _warn_unknown(p, ("name", "default"), f"params[{i}]", warn)
        pname = p.get("name")
        if not isinstance(pname, str):
            raise _err(f"params[{i}].name", "expected a string")
        params.append(ParamDecl(pname, _get_number(p, "default", f"params[{i}]", default=0.0)))

    kfs_obj = obj.get("keyframes")
    if not isinstance(kfs_obj, list):
        raise _err("keyframes", "missing or not a list")
    keyframes = tuple(
        _parse_keyframe(k, f"keyframes[{i}]", warn) for i, k in enumerate(kfs_obj)
    )

    tacton = Tacton(
        name=name,
        params=tuple(params),
        keyframes=keyframes,
        post=_parse_post(obj.get("post"), warn),
        format_version=version,
    )
    violations = validate_tacton(tacton)
    if violations:
        raise TactonValidationError(violations)
    return tacton


def parse_tacton(text: str, warn: Optional[list[str]] = None) -> Tacton:
    """Parse a `.adaptics` JSON document.

    ``warn``, if given, collects messages about ignored unknown fields.
    Raises TactonParseError (malformed JSON or schema violation, with a
    byte offset or field path) or TactonValidationError.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        byte_offset = len(text[: e.pos].encode("utf-8"))
        raise TactonParseError(f"malformed JSON at byte {byte_offset}: {e.msg}") from e
    return tacton_from_obj(obj, warn)


# ---------------------------------------------------------------------------
# serialization

def _num(v: float):
    # floats round-trip via repr; json renders them shortest-form
    return float(v)


def tacton_to_obj(t: Tacton) -> dict:
    """Canonical JSON data for a Tacton (fixed key order, all fields explicit)."""
    return {
        "format_version": t.format_version,
        "name": t.name,
        "params": [{"name": p.name, "default": _num(p.default)} for p in t.params],
        "keyframes": [
            {
                "time": _num(k.time),
                "coords": {
                    "x": _num(k.coords[0]),
                    "y": _num(k.coords[1]),
                    "z": _num(k.coords[2]),
                },
                "coords_transition": k.coords_transition,
                "brush": {
                    "kind": k.brush.kind,
                    "size": k.brush.size.src,
                    "rotation": k.brush.rotation.src,
                    "am_freq": k.brush.am_freq.src,
                    "stm_freq": k.brush.stm_freq.src,
                },
                "brush_transition": k.brush_transition,
                "intensity": k.intensity.src,
                "intensity_transition": k.intensity_transition,
                "jumps": [
                    {
                        "param": j.param,
                        "op": j.op,
                        "threshold": _num(j.threshold),
                        "target": _num(j.target),
                    }
                    for j in k.jumps
                ],
            }
            for k in t.keyframes
        ],
        "post": {
            "playback_speed": t.post.playback_speed.src,
            "intensity_factor": t.post.intensity_factor.src,
            "translate": {
                "x": t.post.translate[0].src,
                "y": t.post.translate[1].src,
                "z": t.post.translate[2].src,
            },
            "rotation_z": t.post.rotation_z.src,
            "scale": t.post.scale.src,
        },
    }


def serialize_tacton(t: Tacton) -> str:
    """Canonical serialization: fixed key order, shortest-round-trip numbers.

    Structurally equal tactons serialize to byte-identical text, and
    ``parse_tacton(serialize_tacton(t)) == t``.
    """
    return json.dumps(tacton_to_obj(t), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# validation


def _finite(v: float) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_formula(out: list[Violation], f: Formula, path: str) -> None:
    if not isinstance(f, Formula):
        out.append(Violation("formula-missing", "expected a Formula", path))
        return
    try:
        root = parse_formula(f.src)
    except FormulaError as e:
        out.append(Violation("formula-syntax", f"formula does not parse: {e}", path))
        return
    if root != f.root:
        out.append(Violation("formula-mismatch", "source text and parsed tree disagree", path))


def validate_tacton(t: Tacton) -> list[Violation]:
    """Check every document invariant; empty list means the tacton is valid.

    Violations are values (code, human message, field path), not errors.
    """
    out: list[Violation] = []

    if t.format_version != FORMAT_VERSION:
        out.append(
            Violation(
                "unsupported-format-version",
                f"format_version {t.format_version!r} is not supported (expected {FORMAT_VERSION})",
                "format_version",
            )
        )

    seen: set[str] = set()
    for i, p in enumerate(t.params):
        path = f"params[{i}]"
        if not is_valid_param_name(p.name):
            out.append(Violation("invalid-param-name", f"invalid parameter name {p.name!r}", path))
        if p.name in seen:
            out.append(Violation("duplicate-param", f"duplicate parameter {p.name!r}", path))
        seen.add(p.name)
        if not _finite(p.default):
            out.append(Violation("param-default-not-finite", "default must be finite", path))

    if len(t.keyframes) == 0:
        out.append(Violation("no-keyframes", "a tacton needs at least one keyframe", "keyframes"))
        return out

    last_time = t.keyframes[-1].time
    prev_time = None
    for i, k in enumerate(t.keyframes):
        path = f"keyframes[{i}]"
        if not _finite(k.time) or k.time < 0:
            out.append(Violation("time-out-of-range", f"time must be finite and >= 0, got {k.time!r}", f"{path}.time"))
        if prev_time is not None and not (_finite(k.time) and k.time > prev_time):
            out.append(
                Violation(
                    "keyframes-not-increasing",
                    "keyframes not strictly increasing in time",
                    f"{path}.time",
                )
            )
        prev_time = k.time

        x, y, z = k.coords
        if not (_finite(x) and _finite(y) and _finite(z)):
            out.append(Violation("coords-not-finite", "coordinates must be finite", f"{path}.coords"))
        elif not (abs(x) <= MAX_XY_MM and abs(y) <= MAX_XY_MM and 0 <= z <= MAX_Z_MM):
            out.append(
                Violation(
                    "coords-out-of-range",
                    f"coords ({x}, {y}, {z}) outside workspace "
                    f"(|x|,|y| <= {MAX_XY_MM}, 0 <= z <= {MAX_Z_MM})",
                    f"{path}.coords",
                )
            )

        for key in ("coords_transition", "brush_transition", "intensity_transition"):
            v = getattr(k, key)
            if v not in TRANSITIONS:
                out.append(Violation("invalid-transition", f"{key} must be one of {TRANSITIONS}", f"{path}.{key}"))
        if k.brush.kind not in BRUSH_KINDS:
            out.append(Violation("invalid-brush-kind", f"brush kind must be one of {BRUSH_KINDS}", f"{path}.brush.kind"))

        _check_formula(out, k.brush.size, f"{path}.brush.size")
        _check_formula(out, k.brush.rotation, f"{path}.brush.rotation")
        _check_formula(out, k.brush.am_freq, f"{path}.brush.am_freq")
        _check_formula(out, k.brush.stm_freq, f"{path}.brush.stm_freq")
        _check_formula(out, k.intensity, f"{path}.intensity")

        for jidx, j in enumerate(k.jumps):
            jpath = f"{path}.jumps[{jidx}]"
            if j.op not in JUMP_OPS:
                out.append(Violation("invalid-jump-op", f"op must be one of {JUMP_OPS}", f"{jpath}.op"))
            if not _finite(j.threshold):
                out.append(Violation("jump-threshold-not-finite", "threshold must be finite", f"{jpath}.threshold"))
            if not is_valid_param_name(j.param):
                out.append(Violation("invalid-param-name", f"invalid parameter name {j.param!r}", f"{jpath}.param"))
            if not _finite(j.target) or j.target < 0 or (_finite(last_time) and j.target > last_time):
                out.append(
                    Violation(
                        "jump-target-out-of-range",
                        f"jump target {j.target!r} outside [0, {last_time}]",
                        f"{jpath}.target",
                    )
                )

    _check_formula(out, t.post.playback_speed, "post.playback_speed")
    _check_formula(out, t.post.intensity_factor, "post.intensity_factor")
    for axis, f in zip("xyz", t.post.translate):
        _check_formula(out, f, f"post.translate.{axis}")
    _check_formula(out, t.post.rotation_z, "post.rotation_z")
    _check_formula(out, t.post.scale, "post.scale")

    return out
