import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptics.formula import Param, referenced_params
from adaptics.model import (
    BrushSpec,
    ConditionalJump,
    Formula,
    Keyframe,
    ParamDecl,
    PostProcessing,
    Tacton,
    TactonParseError,
    TactonValidationError,
    parse_tacton,
    serialize_tacton,
    tacton_to_obj,
    validate_tacton,
)

from gen import random_tacton

MINIMAL = """
{
  "format_version": 1,
  "keyframes": [
    {
      "time": 0,
      "coords": {"x": 0, "y": 0},
      "brush": {"kind": "circle", "size": "15", "am_freq": "0"}
    }
  ]
}
"""


def make_button() -> Tacton:
    one = Formula.of("1")
    zero = Formula.of("0")

    def kf(time, jumps=()):
        return Keyframe(
            time=time,
            coords=(0.0, 0.0, 200.0),
            coords_transition="linear",
            brush=BrushSpec(
                kind="circle",
                size=Formula.of("activation * 15 + 15"),
                rotation=zero,
                am_freq=zero,
                stm_freq=Formula.of("100"),
            ),
            brush_transition="linear",
            intensity=one,
            intensity_transition="linear",
            jumps=tuple(jumps),
        )

    return Tacton(
        name="Button",
        params=(ParamDecl("proximity", 0.0), ParamDecl("activation", 0.0)),
        keyframes=(
            kf(0.0),
            kf(0.3, jumps=(
                ConditionalJump("proximity", "<", 1.0, 0.0),
                ConditionalJump("activation", "<", 1.0, 0.4),
            )),
            kf(0.5),
        ),
        post=PostProcessing.identity(),
    )


class TestParse:
    def test_minimal_document(self):
        t = parse_tacton(MINIMAL)
        assert len(t.keyframes) == 1
        assert t.keyframes[0].brush.size.src == "15"
        assert t.keyframes[0].coords == (0.0, 0.0, 200.0)  # default canvas plane
        assert t.name == "untitled"
        assert t.post.playback_speed.src == "1"

    def test_formula_field_parsed(self):
        doc = json.loads(MINIMAL)
        doc["keyframes"][0]["brush"]["size"] = "activation * 15 + 15"
        t = parse_tacton(json.dumps(doc))
        assert referenced_params(t.keyframes[0].brush.size.root) == {"activation"}

    def test_keyframes_out_of_order_rejected(self):
        doc = json.loads(MINIMAL)
        doc["keyframes"] = [dict(doc["keyframes"][0]), dict(doc["keyframes"][0])]
        doc["keyframes"][0]["time"] = 0.2
        doc["keyframes"][1]["time"] = 0.1
        with pytest.raises(TactonValidationError) as exc:
            parse_tacton(json.dumps(doc))
        assert any(v.code == "keyframes-not-increasing" for v in exc.value.violations)

    def test_malformed_json_reports_byte_offset(self):
        with pytest.raises(TactonParseError) as exc:
            parse_tacton('{"format_version": 1,,}')
        assert "byte 21" in str(exc.value)

    def test_missing_field_path(self):
        doc = json.loads(MINIMAL)
        del doc["keyframes"][0]["brush"]["size"]
        with pytest.raises(TactonParseError) as exc:
            parse_tacton(json.dumps(doc))
        assert "keyframes[0].brush.size" in str(exc.value)

    def test_wrong_type_path(self):
        doc = json.loads(MINIMAL)
        doc["keyframes"][0]["time"] = "soon"
        with pytest.raises(TactonParseError) as exc:
            parse_tacton(json.dumps(doc))
        assert "keyframes[0].time" in str(exc.value)

    def test_formula_error_names_keyframe_and_field(self):
        doc = json.loads(MINIMAL)
        doc["keyframes"][0]["brush"]["size"] = "2 * (3"
        with pytest.raises(TactonParseError) as exc:
            parse_tacton(json.dumps(doc))
        msg = str(exc.value)
        assert "keyframes[0].brush.size" in msg and "position 6" in msg

    def test_unknown_fields_warn_and_ignore(self):
        doc = json.loads(MINIMAL)
        doc["wobble"] = 3
        doc["keyframes"][0]["frobnicate"] = True
        warnings: list[str] = []
        t = parse_tacton(json.dumps(doc), warn=warnings)
        assert len(t.keyframes) == 1
        assert any("wobble" in w for w in warnings)
        assert any("keyframes[0]" in w and "frobnicate" in w for w in warnings)

    def test_numeric_formula_coerced(self):
        doc = json.loads(MINIMAL)
        doc["keyframes"][0]["intensity"] = 0.5
        t = parse_tacton(json.dumps(doc))
        assert t.keyframes[0].intensity.src == "0.5"

    def test_unknown_format_version_rejected(self):
        doc = json.loads(MINIMAL)
        doc["format_version"] = 2
        with pytest.raises(TactonValidationError) as exc:
            parse_tacton(json.dumps(doc))
        assert exc.value.violations[0].code == "unsupported-format-version"


class TestSerialize:
    def test_round_trip_identity(self):
        t = make_button()
        assert parse_tacton(serialize_tacton(t)) == t

    def test_formula_source_verbatim(self):
        doc = json.loads(MINIMAL)
        doc["keyframes"][0]["intensity"] = "1 - health"
        t = parse_tacton(json.dumps(doc))
        out = serialize_tacton(t)
        assert '"1 - health"' in out
        assert parse_tacton(out).keyframes[0].intensity.src == "1 - health"

    def test_structurally_equal_means_byte_identical(self):
        a = make_button()
        b = make_button()
        assert a == b and a is not b
        assert serialize_tacton(a) == serialize_tacton(b)

    def test_parse_serialize_idempotent_on_sparse_doc(self):
        first = serialize_tacton(parse_tacton(MINIMAL))
        second = serialize_tacton(parse_tacton(first))
        assert first == second

    def test_key_order_documented(self):
        obj = tacton_to_obj(make_button())
        assert list(obj) == ["format_version", "name", "params", "keyframes", "post"]
        assert list(obj["keyframes"][0]) == [
            "time", "coords", "coords_transition", "brush", "brush_transition",
            "intensity", "intensity_transition", "jumps",
        ]
        assert list(obj["post"]) == [
            "playback_speed", "intensity_factor", "translate", "rotation_z", "scale",
        ]


class TestValidate:
    def test_jump_target_out_of_range(self):
        t = make_button()
        bad = Tacton(
            name=t.name, params=t.params,
            keyframes=t.keyframes[:2],  # last keyframe now 0.3, jump to 0.4 dangles
            post=t.post,
        )
        codes = [v.code for v in validate_tacton(bad)]
        assert "jump-target-out-of-range" in codes

    def test_valid_button_is_clean(self):
        assert validate_tacton(make_button()) == []

    def test_duplicate_param(self):
        t = make_button()
        bad = Tacton(
            name=t.name,
            params=(ParamDecl("p", 0.0), ParamDecl("p", 1.0)),
            keyframes=t.keyframes,
            post=t.post,
        )
        assert any(v.code == "duplicate-param" for v in validate_tacton(bad))

    def test_coords_out_of_range(self):
        t = make_button()
        kf0 = t.keyframes[0]
        bad_kf = Keyframe(
            time=kf0.time, coords=(900.0, 0.0, 200.0),
            coords_transition=kf0.coords_transition, brush=kf0.brush,
            brush_transition=kf0.brush_transition, intensity=kf0.intensity,
            intensity_transition=kf0.intensity_transition, jumps=kf0.jumps,
        )
        bad = Tacton(name=t.name, params=t.params,
                     keyframes=(bad_kf,) + t.keyframes[1:], post=t.post)
        assert any(v.code == "coords-out-of-range" for v in validate_tacton(bad))

    def test_violations_carry_location(self):
        t = make_button()
        bad = Tacton(name=t.name, params=t.params, keyframes=t.keyframes[:2], post=t.post)
        v = [v for v in validate_tacton(bad) if v.code == "jump-target-out-of-range"][0]
        assert "keyframes[1].jumps[1]" in v.path

    def test_programmatic_bad_formula_detected(self):
        t = make_button()
        forged = Formula("1 + 1", Param("oops"))
        bad = Tacton(
            name=t.name, params=t.params, keyframes=t.keyframes,
            post=PostProcessing(
                playback_speed=forged,
                intensity_factor=t.post.intensity_factor,
                translate=t.post.translate,
                rotation_z=t.post.rotation_z,
                scale=t.post.scale,
            ),
        )
        assert any(v.code == "formula-mismatch" for v in validate_tacton(bad))


class TestFuzzedRoundTrip:
    def test_random_valid_tactons_round_trip(self):
        rng = random.Random(99)
        for _ in range(200):
            t = random_tacton(rng)
            assert validate_tacton(t) == []
            text = serialize_tacton(t)
            again = parse_tacton(text)
            assert again == t
            assert serialize_tacton(again) == text

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, seed):
        t = random_tacton(random.Random(seed))
        assert parse_tacton(serialize_tacton(t)) == t
