import json
import math
import time

import pytest

from adaptics import api, library
from adaptics.api import ApiError
from adaptics.cli import main, run_bench

from adaptics.model import serialize_tacton


@pytest.fixture()
def handle():
    h = api.init_engine(use_mock_device=True, rate=40000, batch=40)
    yield h
    try:
        api.deinit_engine(h)
    except ApiError:
        pass


def wait_for(predicate, timeout=3.0, interval=0.005):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return False


class TestEmbeddingApi:
    def test_init_gives_idle_engine(self, handle):
        status = api.engine_status(handle)
        assert status["playing"] is False and status["pattern"] is None

    def test_invalid_rate(self):
        with pytest.raises(ApiError) as exc:
            api.init_engine(rate=0)
        assert exc.value.code == "invalid-rate"

    def test_invalid_batch(self):
        with pytest.raises(ApiError) as exc:
            api.init_engine(batch=0)
        assert exc.value.code == "invalid-batch"

    def test_hardware_sink_unavailable(self):
        with pytest.raises(ApiError) as exc:
            api.init_engine(use_mock_device=False)
        assert exc.value.code == "unsupported-device"

    def test_two_handles_are_independent(self):
        h1 = api.init_engine()
        h2 = api.init_engine()
        try:
            assert h1 != h2
            api.play_tacton_immediate(h1, str(library.library_path("Loading")))
            assert api.engine_status(h1)["playing"] is True
            assert api.engine_status(h2)["playing"] is False
        finally:
            api.deinit_engine(h1)
            api.deinit_engine(h2)

    def test_play_missing_file(self, handle):
        with pytest.raises(ApiError) as exc:
            api.play_tacton_immediate(handle, "missing.adaptics")
        assert exc.value.code == "io"

    def test_play_invalid_file(self, handle, tmp_path):
        bad = tmp_path / "bad.adaptics"
        bad.write_text("{}")
        with pytest.raises(ApiError) as exc:
            api.play_tacton_immediate(handle, str(bad))
        assert exc.value.code == "invalid-tacton"
        assert api.engine_status(handle)["playing"] is False

    def test_play_then_progress_updates(self, handle):
        api.play_tacton_immediate(handle, str(library.library_path("Loading")))
        assert api.engine_status(handle)["playing"] is True
        for i in range(0, 101, 25):
            api.update_user_parameter(handle, "progress", i)
        assert wait_for(lambda: api.engine_status(handle)["device_time"] > 0.002)

    def test_play_restarts_from_zero(self, handle):
        # the engine env starts empty: hosts push parameters themselves
        path = str(library.library_path("Heartbeat"))
        api.play_tacton_immediate(handle, path)
        api.update_user_parameter(handle, "heart_rate", 70.0)
        assert wait_for(lambda: api.engine_status(handle)["pattern_time"] > 0.01)
        api.play_tacton_immediate(handle, path)
        assert wait_for(lambda: api.engine_status(handle)["pattern_time"] < 0.01)

    def test_non_finite_parameter(self, handle):
        with pytest.raises(ApiError) as exc:
            api.update_user_parameter(handle, "progress", math.nan)
        assert exc.value.code == "non-finite"

    def test_unreferenced_parameter_tolerated(self, handle):
        api.update_user_parameter(handle, "nobody_reads_this", 42.0)

    def test_transform_validation(self, handle):
        identity = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1]
        api.update_transform(handle, identity)
        bad = identity[:]
        bad[15] = 0
        with pytest.raises(ApiError) as exc:
            api.update_transform(handle, bad)
        assert exc.value.code == "invalid-transform"

    def test_transform_shifts_output(self):
        h = api.init_engine()
        try:
            api.play_tacton_immediate(h, str(library.library_path("Loading")))
            shifted = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 50.0, 0, 0, 0, 1]
            api.update_transform(h, shifted)
            reader = api._instance(h).engine.subscribe_telemetry()
            assert wait_for(lambda: any(
                c["z"] and c["z"][0] > 240.0 for c in reader.poll()
            ))
        finally:
            api.deinit_engine(h)

    def test_stop_silences(self, handle):
        api.play_tacton_immediate(handle, str(library.library_path("Heartbeat")))
        api.stop_playback(handle)
        assert api.engine_status(handle)["playing"] is False

    def test_lifecycle_errors(self):
        h = api.init_engine()
        api.deinit_engine(h)
        for call in (
            lambda: api.stop_playback(h),
            lambda: api.engine_status(h),
            lambda: api.update_user_parameter(h, "p", 1.0),
            lambda: api.deinit_engine(h),
        ):
            with pytest.raises(ApiError) as exc:
                call()
            assert exc.value.code == "invalid-handle"


class TestCli:
    def test_eval_button_radius_at_zero_activation(self, capsys):
        assert main(["eval", "Button", "--at", "0", "--param", "activation=0"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["results"][0]["brush"]["size"] == 15.0

    def test_eval_beyond_end_reports_finished(self, capsys):
        assert main(["eval", "Button", "--at", "99"]) == 0
        report = json.loads(capsys.readouterr().out)
        row = report["results"][0]
        assert row["finished"] is True and row["amplitude"] == 0.0

    def test_eval_defaults_params_to_zero(self, capsys):
        assert main(["eval", "Button", "--at", "0"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["results"][0]["brush"]["size"] == 15.0

    def test_eval_missing_file(self, capsys):
        assert main(["eval", "no-such-tacton", "--at", "0"]) == 1
        err = capsys.readouterr().err
        assert err.startswith("error[io]:")

    def test_play_reports_summary(self, capsys):
        assert main(["play", "Heartbeat", "--duration", "0.25"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["samples"] == 10000
        assert report["finished"] is False  # heartbeat loops

    def test_play_param_override(self, capsys):
        assert main(["play", "Heartbeat", "--duration", "0.1",
                     "--param", "heart_rate=0"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["final_pattern_time"] == 0.0  # speed formula gives 0

    def test_bench_json_report(self, capsys):
        assert main(["bench", "Baseline", "--batches", "50", "--repeats", "2",
                     "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["keyframes"] == 1
        assert len(report["rates_khz"]) == 2
        assert report["min_khz"] > 0

    def test_bench_rejects_empty(self, capsys):
        assert main(["bench", "Baseline", "--batches", "0"]) == 1
        assert "error[empty-benchmark]" in capsys.readouterr().err

    def test_bench_stream_deterministic(self):
        t = library.load_tacton("RainBench")
        a = run_bench(t, batches=50, batch_size=40, repeats=1)
        b = run_bench(t, batches=50, batch_size=40, repeats=1)
        assert a["stream_digest"] == b["stream_digest"]

    def test_bad_param_syntax(self, capsys):
        assert main(["play", "Button", "--param", "oops", "--duration", "0.01"]) == 1
        assert "error[bad-param]" in capsys.readouterr().err


class TestLibraryContents:
    def test_all_tactons_load_and_validate(self):
        names = library.list_tactons()
        assert {"Button", "Rain", "Heartbeat", "Loading",
                "Baseline", "RainBench", "RainBench2x", "RainBenchF"} <= set(names)
        for name in names:
            t = library.load_tacton(name)
            assert t.name == name

    def test_bench_corpus_shapes(self):
        assert len(library.load_tacton("Baseline").keyframes) == 1
        assert len(library.load_tacton("RainBench").keyframes) == 62
        assert len(library.load_tacton("RainBench2x").keyframes) == 124
        assert len(library.load_tacton("RainBenchF").keyframes) == 62

    def test_formula_heavy_variant_ratio(self):
        import sys
        from pathlib import Path
        sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))
        from make_corpus import per_evaluation_ops

        plain = per_evaluation_ops(library.load_tacton("RainBench"))
        heavy = per_evaluation_ops(library.load_tacton("RainBenchF"))
        assert 7.0 <= heavy / plain <= 11.0

    def test_library_files_are_canonical(self):
        for name in library.list_tactons():
            text = library.library_path(name).read_text(encoding="utf-8")
            t = library.load_tacton(name)
            assert serialize_tacton(t) == text
