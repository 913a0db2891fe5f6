import csv
import json
import os
import re
import subprocess
import sys

import pytest

from trajflow.cli import main, resolve_config
from trajflow.errors import ConfigError

SMALL_NET = ["--set", 'model.net={"base_channels": 8, "depth": 1, "groups": 2, "time_embed_dim": 8}']


def _run(*argv):
    return main(list(argv))


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _maze(out, n=100, horizon=16):
    return ["--output-dir", str(out), "--set", "domain.kind=maze", "--set", f"domain.n={n}", "--set", f"domain.horizon={horizon}"]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert _run("generate", *_maze(out, n=40)) == 0
    assert _run("train", *_maze(out, n=40), *SMALL_NET, "--steps", "10", "--set", "trainer.batch_size=8") == 0
    return out


def test_generate_maze_writes_manifest(tmp_path):
    assert _run("generate", *_maze(tmp_path)) == 0
    manifest = json.loads((tmp_path / "data" / "manifest.json").read_text())
    assert manifest["num_trajectories"] == 100
    assert manifest["counts"] == {"train": 80, "val": 10, "test": 10}
    assert len(_rows(tmp_path / "data" / "train_trajectories.csv")) == 1 + 80 * 16
    assert (tmp_path / "generate.config.json").exists()


def test_generate_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run("generate", *_maze(a, n=30)) == 0
    assert _run("generate", *_maze(b, n=30)) == 0
    for name in os.listdir(a / "data"):
        if name.endswith(".csv"):
            assert (a / "data" / name).read_bytes() == (b / "data" / name).read_bytes()


def test_pursuit_manifest_reports_rate(tmp_path):
    args = ["--output-dir", str(tmp_path), "--set", "domain.kind=pursuit", "--set", "domain.n=400", "--set", "domain.history=50"]
    assert _run("generate", *args) == 0
    rate = json.loads((tmp_path / "data" / "manifest.json").read_text())["realized_detection_rate"]
    assert abs(rate - 0.44) <= 0.02


def test_flight_split_counts(tmp_path):
    args = ["--output-dir", str(tmp_path), "--set", "domain.kind=flight", "--set", "domain.n=474"]
    assert _run("generate", *args) == 0
    counts = json.loads((tmp_path / "data" / "manifest.json").read_text())["counts"]
    assert counts == {"train": 379, "val": 47, "test": 48}


def test_train_writes_one_loss_row_per_step(trained):
    rows = _rows(trained / "loss.csv")
    assert rows[0] == ["step", "loss"]
    assert [int(r[0]) for r in rows[1:]] == list(range(1, 11))
    assert (trained / "model.ckpt").exists()


def test_resume_continues_numbering(trained, tmp_path):
    out = tmp_path / "resumed"
    assert _run("generate", *_maze(out, n=40)) == 0
    args = [*_maze(out, n=40), *SMALL_NET, "--steps", "5", "--set", "trainer.batch_size=8"]
    assert _run("train", *args, "--resume", str(trained / "model.ckpt")) == 0
    assert [int(r[0]) for r in _rows(out / "loss.csv")[1:]] == list(range(11, 16))


def test_eval_single_step_count(trained):
    assert _run("eval", *_maze(trained, n=40), "--n-list", "1", "--num-samples", "2") == 0
    reports = sorted(p.name for p in (trained / "eval").glob("report_N*.txt"))
    assert reports == ["report_N1.txt"]
    text = (trained / "eval" / "report_N1.txt").read_text()
    assert "maze_score=" in text and "collision_rate=" in text and "time_" not in text


def test_svg_series_come_from_csv_columns(trained):
    assert _run("eval", *_maze(trained, n=40), "--n-list", "1,2", "--num-samples", "2") == 0
    svg = (trained / "eval" / "ade_vs_horizon.svg").read_text()
    series = set(re.findall(r'data-series="([^"]+)"', svg))
    header = set(_rows(trained / "eval" / "ade_vs_horizon.csv")[0])
    assert series and series <= header


def test_sample_writes_csv_and_svg(trained):
    assert _run("sample", *_maze(trained, n=40), "--num-steps", "2", "--num-samples", "3", "--index", "1") == 0
    rows = _rows(trained / "samples" / "samples_test1_N2.csv")
    assert rows[0][:2] == ["sample_id", "t_index"] and len(rows) == 1 + 3 * 16
    assert (trained / "samples" / "samples_test1_N2.svg").exists()


def test_sample_endpoints_match_context_exactly(trained):
    assert _run("sample", *_maze(trained, n=40), "--num-steps", "1", "--num-samples", "2", "--index", "0") == 0
    ctx = _rows(trained / "data" / "test_contexts.csv")[1]
    rows = _rows(trained / "samples" / "samples_test0_N1.csv")[1:]
    starts = [r[2:] for r in rows if r[1] == "0"]
    goals = [r[2:] for r in rows if r[1] == "15"]
    assert all([float(v) for v in s] == [float(v) for v in ctx[1:3]] for s in starts)
    assert all([float(v) for v in g] == [float(v) for v in ctx[3:5]] for g in goals)


def test_benchmark_rows_and_calls(trained):
    assert _run("benchmark", *_maze(trained, n=40), "--n-list", "1,3", "--repetitions", "3") == 0
    rows = _rows(trained / "benchmark" / "benchmark.csv")
    head, body = rows[0], rows[1:]
    assert len(body) == 2
    calls = {int(r[head.index("n_steps")]): int(r[head.index("network_calls")]) for r in body}
    assert calls == {1: 1, 3: 3}
    assert len(_rows(trained / "benchmark" / "speedup.csv")) == 2


def test_rerun_from_persisted_config_is_bit_identical(trained):
    assert _run("eval", *_maze(trained, n=40), "--n-list", "1,2", "--num-samples", "2") == 0
    before = {p.name: p.read_bytes() for p in (trained / "eval").glob("*.csv")}
    before |= {p.name: p.read_bytes() for p in (trained / "eval").glob("report_*.txt")}
    assert _run("eval", "--config", str(trained / "eval.config.json")) == 0
    after = {p.name: p.read_bytes() for p in (trained / "eval").glob("*.csv")}
    after |= {p.name: p.read_bytes() for p in (trained / "eval").glob("report_*.txt")}
    assert before == after


def test_train_rerun_is_bit_identical(trained):
    loss = (trained / "loss.csv").read_bytes()
    ckpt = (trained / "model.ckpt").read_bytes()
    assert _run("train", "--config", str(trained / "train.config.json")) == 0
    assert (trained / "loss.csv").read_bytes() == loss
    assert (trained / "model.ckpt").read_bytes() == ckpt


def test_unknown_key_is_config_error(tmp_path, capsys):
    assert _run("generate", "--output-dir", str(tmp_path), "--set", "domain.bogus=1") == 2
    assert "unknown config key" in capsys.readouterr().err


def test_bad_values_exit_2(tmp_path):
    assert _run("generate", "--output-dir", str(tmp_path), "--set", "domain.kind=weather") == 2
    assert _run("generate", "--output-dir", str(tmp_path), "--set", "domain.n=0") == 2
    assert _run("sample", "--output-dir", str(tmp_path), "--num-steps", "0") == 2


def test_missing_config_file_exits_2(tmp_path):
    assert _run("train", "--config", str(tmp_path / "nope.json")) == 2


def test_missing_dataset_exits_3(tmp_path):
    assert _run("train", "--output-dir", str(tmp_path / "empty")) == 3


def test_corrupt_checkpoint_exits_3(trained, tmp_path):
    bad = tmp_path / "bad.ckpt"
    data = bytearray((trained / "model.ckpt").read_bytes())
    data[100] ^= 0xFF
    bad.write_bytes(bytes(data))
    assert _run("sample", *_maze(trained, n=40), "--checkpoint", str(bad)) == 3


def test_unwritable_output_exits_3(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert _run("generate", "--output-dir", str(blocker / "out")) == 3


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TRAJFLOW_OUTPUT_ROOT", str(tmp_path))
    assert _run("generate", "--output-dir", "rel", "--set", "domain.n=10", "--set", "domain.horizon=8") == 0
    assert (tmp_path / "rel" / "data" / "manifest.json").exists()


def test_resolve_config_defaults_seeds():
    cfg = resolve_config({"seed": 7})
    assert cfg["trainer"]["seed"] == 7 and cfg["sampler"]["seed"] == 7
    with pytest.raises(ConfigError):
        resolve_config({}, [("trainer.nope", 1)])


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "trajflow.cli", "generate", "--output-dir", str(tmp_path), "--set", "domain.n=5", "--set", "domain.horizon=8"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
