import csv
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from tss import files
from tss.cli import main
from tss.schedule_core import SamplerParams, ScheduleKind, build_tds_schedule
from tss.spatial_schedule import ProjectionBounds, build_spatial_schedule
from tss.time_embedding import build_embedding_map, sinusoidal_embed
from tss.variance_map import variance_map


@pytest.fixture
def runner():
    return CliRunner()


def _write_image(path, arr):
    files.save_image_png(path, arr)


# ---------------------------------------------------------------------------
# schedule


def test_schedule_explicit_params(runner, tmp_path):
    result = runner.invoke(main, [
        "--out", str(tmp_path), "schedule",
        "--kind", "polynomial", "--steps", "4", "--T", "1000",
        "--n", "2.0", "--a-frac", "0.5",
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "schedule.json").read_text())
    assert payload["steps_int"] == [125, 500, 875, 1000]
    with open(tmp_path / "schedule.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["step_int"]) for r in rows] == [125, 500, 875, 1000]
    assert "125" in result.output


def test_schedule_uniform_kind(runner, tmp_path):
    result = runner.invoke(main, [
        "--out", str(tmp_path), "schedule",
        "--kind", "uniform", "--steps", "10", "--T", "1000",
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "schedule.json").read_text())
    assert payload["steps_int"] == [100 * k for k in range(1, 11)]


def test_schedule_preset_uses_midpoints(runner, tmp_path):
    result = runner.invoke(main, [
        "--out", str(tmp_path), "schedule", "--preset", "supir", "--steps", "7",
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "schedule.json").read_text())
    ref = build_tds_schedule(
        SamplerParams(1000, 7, power=2.35, transition_fraction=0.605,
                      kind=ScheduleKind.POLYNOMIAL)
    )
    assert payload["steps_int"] == ref.quantized_steps.tolist()
    assert payload["n"] == 2.35


def test_schedule_requires_parameters(runner, tmp_path):
    result = runner.invoke(main, ["--out", str(tmp_path), "schedule",
                                  "--steps", "7"])
    assert result.exit_code == 2


def test_schedule_rejects_bad_power(runner, tmp_path):
    result = runner.invoke(main, [
        "--out", str(tmp_path), "schedule", "--kind", "polynomial",
        "--steps", "7", "--n", "0.5", "--a-frac", "0.5",
    ])
    assert result.exit_code == 2


def test_schedule_overwrite_protection(runner, tmp_path):
    args = ["--out", str(tmp_path), "schedule", "--preset", "pasd",
            "--steps", "5"]
    assert runner.invoke(main, args).exit_code == 0
    blocked = runner.invoke(main, args)
    assert blocked.exit_code == 1
    assert "exists" in blocked.output
    forced = runner.invoke(main, ["--force"] + args)
    assert forced.exit_code == 0


# ---------------------------------------------------------------------------
# variance


def test_variance_constant_image_zero_map(runner, tmp_path):
    img_path = tmp_path / "in.png"
    _write_image(img_path, np.full((40, 40), 0.5))
    result = runner.invoke(main, ["--out", str(tmp_path), "variance",
                                  str(img_path), "--window", "9"])
    assert result.exit_code == 0, result.output
    vmap = files.load_npy(tmp_path / "variance.npy")
    assert vmap.shape == (40, 40)
    assert np.all(vmap == 0.0)
    assert (tmp_path / "variance.png").exists()


def test_variance_matches_library(runner, tmp_path):
    rng = np.random.default_rng(110)
    img = rng.uniform(size=(48, 48))
    img_path = tmp_path / "in.png"
    _write_image(img_path, img)
    result = runner.invoke(main, ["--out", str(tmp_path), "variance",
                                  str(img_path), "--window", "9"])
    assert result.exit_code == 0, result.output
    got = files.load_npy(tmp_path / "variance.npy")
    expected = variance_map(files.load_image(img_path), window=9)
    np.testing.assert_array_equal(got, expected.astype(np.float32))
    assert got.max() > 0.0  # textured input must not collapse to zero


def test_variance_missing_image(runner, tmp_path):
    result = runner.invoke(main, ["--out", str(tmp_path), "variance",
                                  str(tmp_path / "ghost.png")])
    assert result.exit_code == 1


def test_variance_even_window(runner, tmp_path):
    img_path = tmp_path / "in.png"
    _write_image(img_path, np.zeros((16, 16)))
    result = runner.invoke(main, ["--out", str(tmp_path), "variance",
                                  str(img_path), "--window", "8"])
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# spatial-schedule


def test_spatial_schedule_constant_image(runner, tmp_path):
    img_path = tmp_path / "in.png"
    _write_image(img_path, np.full((32, 32), 0.25))
    result = runner.invoke(main, [
        "--out", str(tmp_path), "spatial-schedule", str(img_path),
        "--preset", "pasd", "--steps", "5", "--grid-w", "8", "--grid-h", "8",
    ])
    assert result.exit_code == 0, result.output
    tensor = files.load_npy(tmp_path / "spatial_schedule.npy")
    assert tensor.shape == (8, 8, 5)
    ref = build_tds_schedule(
        SamplerParams(1000, 5, power=1.0, transition_fraction=0.4,
                      kind=ScheduleKind.POLYNOMIAL)
    )
    np.testing.assert_array_equal(
        tensor, np.broadcast_to(ref.steps.astype(np.float32), (8, 8, 5))
    )
    sidecar = json.loads((tmp_path / "spatial_schedule.json").read_text())
    assert sidecar["T_prime"] == 5
    assert sidecar["bounds"]["n_max"] == 2.0


def test_spatial_schedule_explicit_bounds_matches_library(runner, tmp_path):
    rng = np.random.default_rng(111)
    img = rng.uniform(size=(32, 32))
    img_path = tmp_path / "in.png"
    _write_image(img_path, img)
    result = runner.invoke(main, [
        "--out", str(tmp_path), "spatial-schedule", str(img_path),
        "--n-min", "1.5", "--n-max", "2.5", "--a-min", "0.5", "--a-max", "0.6",
        "--steps", "4", "--window", "9",
    ])
    assert result.exit_code == 0, result.output
    tensor = files.load_npy(tmp_path / "spatial_schedule.npy")
    vmap = variance_map(files.load_image(img_path), window=9)
    bounds = ProjectionBounds(n_min=1.5, n_max=2.5, a_min=0.5, a_max=0.6)
    ref = build_spatial_schedule(vmap, bounds, 1000, 4, ScheduleKind.POLYNOMIAL)
    np.testing.assert_array_equal(tensor, ref.data.astype(np.float32))


def test_spatial_schedule_rejects_mixed_parameterization(runner, tmp_path):
    img_path = tmp_path / "in.png"
    _write_image(img_path, np.zeros((16, 16)))
    result = runner.invoke(main, [
        "--out", str(tmp_path), "spatial-schedule", str(img_path),
        "--preset", "pasd", "--n-min", "1.0", "--n-max", "2.0",
        "--a-min", "0.4", "--a-max", "0.6", "--steps", "4",
    ])
    assert result.exit_code == 2


def test_spatial_schedule_rejects_bad_bounds(runner, tmp_path):
    img_path = tmp_path / "in.png"
    _write_image(img_path, np.zeros((16, 16)))
    result = runner.invoke(main, [
        "--out", str(tmp_path), "spatial-schedule", str(img_path),
        "--n-min", "2.0", "--n-max", "1.0", "--a-min", "0.4", "--a-max", "0.6",
        "--steps", "4",
    ])
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# embed


def _make_schedule_npy(tmp_path, runner, image=None):
    img_path = tmp_path / "in.png"
    if image is None:
        image = np.random.default_rng(112).uniform(size=(24, 24))
    _write_image(img_path, image)
    result = runner.invoke(main, [
        "--out", str(tmp_path), "spatial-schedule", str(img_path),
        "--preset", "supir", "--steps", "5", "--window", "9",
    ])
    assert result.exit_code == 0, result.output
    return tmp_path / "spatial_schedule.npy"


def test_embed_final_iteration_is_total_step_embedding(runner, tmp_path):
    npy = _make_schedule_npy(tmp_path, runner)
    result = runner.invoke(main, [
        "--out", str(tmp_path), "embed", str(npy), "--k", "5",
        "--channels", "8",
    ])
    assert result.exit_code == 0, result.output
    emap = files.load_npy(tmp_path / "embedding.npy")
    assert emap.shape == (24, 24, 8)
    expected = sinusoidal_embed(1000.0, 8).astype(np.float32)
    np.testing.assert_allclose(emap, np.broadcast_to(expected, emap.shape),
                               atol=1e-6)


def test_embed_matches_library_map(runner, tmp_path):
    npy = _make_schedule_npy(tmp_path, runner)
    result = runner.invoke(main, [
        "--out", str(tmp_path), "embed", str(npy), "--k", "2",
        "--channels", "6",
    ])
    assert result.exit_code == 0, result.output
    emap = files.load_npy(tmp_path / "embedding.npy")
    tensor = files.load_npy(npy)
    expected = build_embedding_map(tensor[:, :, 1].astype(np.float64), 6)
    np.testing.assert_allclose(emap, expected.astype(np.float32), atol=1e-6)


def test_embed_rejects_out_of_range_iteration(runner, tmp_path):
    npy = _make_schedule_npy(tmp_path, runner)
    result = runner.invoke(main, [
        "--out", str(tmp_path), "embed", str(npy), "--k", "6",
        "--channels", "8",
    ])
    assert result.exit_code == 2
    result = runner.invoke(main, [
        "--out", str(tmp_path), "embed", str(npy), "--k", "0",
        "--channels", "8",
    ])
    assert result.exit_code == 2


def test_embed_rejects_odd_channels(runner, tmp_path):
    npy = _make_schedule_npy(tmp_path, runner)
    result = runner.invoke(main, [
        "--out", str(tmp_path), "embed", str(npy), "--k", "1",
        "--channels", "7",
    ])
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# analyze


def _write_frames(tmp_path, amps, seed=113):
    rng = np.random.default_rng(seed)
    ref = rng.uniform(0.2, 0.8, size=(32, 32))
    noise = rng.standard_normal((32, 32)) * 0.1
    steps = [40, 25, 10, 5, 0][: len(amps)]
    for step, amp in zip(steps, amps):
        _write_image(tmp_path / f"frame_{step}.png",
                     np.clip(ref + amp * noise, 0, 1))
    return steps


def test_analyze_frame_directory(runner, tmp_path):
    frames_dir = tmp_path / "frames"
    frames_dir.mkdir()
    _write_frames(frames_dir, [1.0, 0.6, 0.3, 0.1, 0.0])
    result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                  str(frames_dir), "--patch", "32"])
    assert result.exit_code == 0, result.output
    with open(tmp_path / "analysis.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 * 3
    assert list(rows[0]) == ["step", "band", "snr_db", "noise_power",
                             "delta_noise"]
    with open(tmp_path / "analysis_by_class.csv", newline="") as fh:
        srows = list(csv.DictReader(fh))
    assert list(srows[0]) == ["class", "step", "band", "snr_db", "noise_power",
                              "delta_noise"]
    assert {r["class"] for r in srows} <= {"smooth", "medium", "high"}


def test_analyze_npy_stack_with_sidecar(runner, tmp_path):
    rng = np.random.default_rng(114)
    ref = rng.uniform(size=(16, 16))
    noise = rng.standard_normal((16, 16))
    frames = np.stack([ref + a * noise for a in [0.5, 0.2, 0.0]])
    np.save(tmp_path / "stack.npy", frames.astype(np.float32))
    (tmp_path / "stack.steps.json").write_text(json.dumps({"steps": [20, 10, 0]}))
    result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                  str(tmp_path / "stack.npy")])
    assert result.exit_code == 0, result.output
    with open(tmp_path / "analysis.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["step"] for r in rows} == {"20", "10"}
    # shrinking noise amplitudes: residual power must fall at every step
    assert all(float(r["delta_noise"]) <= 0.0 for r in rows)
    # frames smaller than one patch: stratified file skipped, with a notice
    assert not (tmp_path / "analysis_by_class.csv").exists()
    assert "class" in result.output or "patch" in result.output


def test_analyze_identical_frames_report_inf(runner, tmp_path):
    base = np.random.default_rng(115).uniform(size=(16, 16)).astype(np.float32)
    np.save(tmp_path / "stack.npy", np.stack([base, base, base]))
    (tmp_path / "stack.steps.json").write_text(json.dumps({"steps": [20, 10, 0]}))
    result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                  str(tmp_path / "stack.npy")])
    assert result.exit_code == 0, result.output
    with open(tmp_path / "analysis.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert all(math.isinf(float(r["snr_db"])) for r in rows)
    assert all(float(r["noise_power"]) == 0.0 for r in rows)


def test_analyze_missing_sidecar(runner, tmp_path):
    np.save(tmp_path / "stack.npy", np.zeros((3, 8, 8), dtype=np.float32))
    result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                  str(tmp_path / "stack.npy")])
    assert result.exit_code == 1


def test_analyze_rejects_bad_cuts(runner, tmp_path):
    frames_dir = tmp_path / "frames"
    frames_dir.mkdir()
    _write_frames(frames_dir, [1.0, 0.5, 0.0])
    result = runner.invoke(main, [
        "--out", str(tmp_path), "analyze", str(frames_dir),
        "--low-cut", "0.8", "--high-cut", "0.2",
    ])
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# simulate


def _base_config(**overrides):
    cfg = {
        "T": 400,
        "T_prime": 5,
        "preset": "supir",
        "height": 64,
        "width": 64,
        "patch": 32,
        "window": 9,
        "blur_strength": 2.0,
    }
    cfg.update(overrides)
    return cfg


def test_simulate_end_to_end(runner, tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(_base_config()))
    out = tmp_path / "out"
    result = runner.invoke(main, ["--out", str(out), "simulate",
                                  str(cfg_path)])
    assert result.exit_code == 0, result.output
    with open(out / "comparison.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["strategy", "low_snr_db", "medium_snr_db",
                             "high_snr_db"]
    assert [r["strategy"] for r in rows] == ["uniform", "tds", "tss"]
    for row in rows:
        for col in ("low_snr_db", "medium_snr_db", "high_snr_db"):
            float(row[col])  # parseable, possibly inf
    with open(out / "comparison_by_class.csv", newline="") as fh:
        crows = list(csv.DictReader(fh))
    assert list(crows[0]) == ["strategy", "class", "high_snr_db"]
    assert {r["strategy"] for r in crows} == {"uniform", "tds", "tss"}
    for strategy in ("uniform", "tds", "tss"):
        assert (out / f"frames_{strategy}.npy").exists()
        assert (out / f"frames_{strategy}.steps.json").exists()
    assert "uniform" in result.output and "tss" in result.output


def test_simulate_is_deterministic(runner, tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(_base_config(seed=7)))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert runner.invoke(main, ["--out", str(out_a), "simulate",
                                str(cfg_path)]).exit_code == 0
    assert runner.invoke(main, ["--out", str(out_b), "simulate",
                                str(cfg_path)]).exit_code == 0
    for name in ["comparison.csv", "comparison_by_class.csv",
                 "frames_uniform.npy", "frames_tds.npy", "frames_tss.npy"]:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_simulate_global_seed_used_when_config_omits_it(runner, tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(_base_config()))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert runner.invoke(main, ["--seed", "1", "--out", str(out_a),
                                "simulate", str(cfg_path)]).exit_code == 0
    assert runner.invoke(main, ["--seed", "2", "--out", str(out_b),
                                "simulate", str(cfg_path)]).exit_code == 0
    a = (out_a / "frames_uniform.npy").read_bytes()
    b = (out_b / "frames_uniform.npy").read_bytes()
    assert a != b


def test_simulate_unknown_config_key(runner, tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(_base_config(tpyo=1)))
    result = runner.invoke(main, ["--out", str(tmp_path / "o"), "simulate",
                                  str(cfg_path)])
    assert result.exit_code == 2


def test_simulate_malformed_json(runner, tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text("{not json")
    result = runner.invoke(main, ["--out", str(tmp_path / "o"), "simulate",
                                  str(cfg_path)])
    assert result.exit_code == 2


def test_simulate_missing_config(runner, tmp_path):
    result = runner.invoke(main, ["--out", str(tmp_path / "o"), "simulate",
                                  str(tmp_path / "ghost.json")])
    assert result.exit_code == 1


# ---------------------------------------------------------------------------
# global behavior


def test_version_flag(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "0.1.0" in result.output


def test_log_env_accepted(runner, tmp_path):
    result = runner.invoke(
        main,
        ["--out", str(tmp_path), "schedule", "--preset", "pasd", "--steps", "3"],
        env={"TSS_LOG": "DEBUG"},
    )
    assert result.exit_code == 0
