import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

import strokesense.cli as cli
from strokesense.cli import main
from strokesense.ingest import Frame, encode_frame

BASE_TRAIN = ["--epochs", "8", "--patience", "8", "--batch-size", "8",
              "--val-fraction", "0.2"]


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("data") / "tiny"
    code = main(["synth", "--out", str(d), "--classes", "2", "--writers", "2",
                 "--per-class", "6", "--seed", "1"])
    assert code == 0
    return d


@pytest.fixture(scope="module")
def model_path(tmp_path_factory, synth_dir):
    out = tmp_path_factory.mktemp("model") / "model.ckpt"
    code = main(["train", "--data", str(synth_dir), "--model-out", str(out),
                 "--seed", "2"] + BASE_TRAIN)
    assert code == 0
    return out


# -- synth -------------------------------------------------------------------

def test_synth_writes_dataset_and_json(tmp_path, capsys):
    d = tmp_path / "ds"
    code, out, err = run(capsys, ["synth", "--out", str(d), "--classes", "2",
                                  "--writers", "2", "--per-class", "2",
                                  "--seed", "3", "--json"])
    assert code == 0
    assert (d / "manifest.csv").exists()
    assert (d / "classes.csv").exists()
    assert (d / "metadata.json").exists()
    lines = out.strip().splitlines()
    assert len(lines) == 1  # stdout carries exactly the JSON summary
    summary = json.loads(lines[0])
    assert summary["items"] == 8
    assert summary["classes"] == ["a", "b"]
    assert "wrote" in err


def test_synth_reruns_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        code, _, _ = run(capsys, ["synth", "--out", str(d), "--classes", "2",
                                  "--writers", "2", "--per-class", "2",
                                  "--seed", "9"])
        assert code == 0
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_synth_explicit_glyphs(tmp_path, capsys):
    d = tmp_path / "ds"
    code, out, _ = run(capsys, ["synth", "--out", str(d), "--glyphs", "ce",
                                "--writers", "2", "--per-class", "2",
                                "--seed", "0", "--json"])
    assert code == 0
    assert json.loads(out)["classes"] == ["c", "e"]


def test_synth_too_many_classes(tmp_path, capsys):
    code, _, err = run(capsys, ["synth", "--out", str(tmp_path / "x"),
                                "--classes", "99", "--writers", "2"])
    assert code == 2
    assert "insufficient templates" in err


# -- ingest ------------------------------------------------------------------

def _session_stream():
    chunks = []
    t = 0
    for button, n in ((False, 3), (True, 12), (False, 4), (True, 12), (False, 3)):
        for _ in range(n):
            raw = (100, -200, 16384, 10, -10, 20)
            chunks.append(encode_frame(Frame(button=button, t_ms=t, raw=raw)))
            t += 10
    return b"".join(chunks)


def test_ingest_round_trip(tmp_path, capsys):
    raw = tmp_path / "stream.bin"
    raw.write_bytes(_session_stream())
    d = tmp_path / "ds"
    code, out, err = run(capsys, ["ingest", "--raw", str(raw), "--out", str(d),
                                  "--labels", "ab", "--writer", "w1", "--json"])
    assert code == 0
    summary = json.loads(out)
    assert summary["sessions"] == 2
    assert summary["skipped_bytes"] == 0
    assert (d / "manifest.csv").exists()


def test_ingest_label_count_mismatch(tmp_path, capsys):
    raw = tmp_path / "stream.bin"
    raw.write_bytes(_session_stream())
    code, _, err = run(capsys, ["ingest", "--raw", str(raw),
                                "--out", str(tmp_path / "ds"),
                                "--labels", "abc", "--writer", "w1"])
    assert code == 2
    assert "label count 3 does not match session count 2" in err


def test_ingest_empty_stream(tmp_path, capsys):
    raw = tmp_path / "empty.bin"
    raw.write_bytes(b"\x00" * 64)
    code, _, err = run(capsys, ["ingest", "--raw", str(raw),
                                "--out", str(tmp_path / "ds"),
                                "--labels", "a", "--writer", "w1"])
    assert code == 2
    assert "no sessions found" in err


# -- augment -----------------------------------------------------------------

def test_augment_cli(synth_dir, tmp_path, capsys):
    out = tmp_path / "aug"
    code, js, _ = run(capsys, ["augment", "--data", str(synth_dir),
                               "--out", str(out), "--windows", "2",
                               "--strides", "2", "--noise-copies", "1",
                               "--seed", "4", "--json"])
    assert code == 0
    summary = json.loads(js)
    assert summary["in_items"] == 24
    assert summary["out_items"] == 24 * 3
    assert (out / "manifest.csv").exists()


def test_augment_refuses_in_place_output(synth_dir, capsys):
    code, _, err = run(capsys, ["augment", "--data", str(synth_dir),
                                "--out", str(synth_dir)])
    assert code == 1
    assert "never modified" in err


def test_augment_does_not_touch_input(synth_dir, tmp_path, capsys):
    before = {p: p.read_bytes() for p in sorted(synth_dir.rglob("*")) if p.is_file()}
    code, _, _ = run(capsys, ["augment", "--data", str(synth_dir),
                              "--out", str(tmp_path / "aug2"), "--seed", "4"])
    assert code == 0
    after = {p: p.read_bytes() for p in sorted(synth_dir.rglob("*")) if p.is_file()}
    assert before == after


# -- train / eval ------------------------------------------------------------

def test_train_writes_model_history_figures(synth_dir, tmp_path, capsys):
    model = tmp_path / "m.ckpt"
    hist = tmp_path / "history.csv"
    figs = tmp_path / "figs"
    code, out, err = run(capsys, ["train", "--data", str(synth_dir),
                                  "--model-out", str(model),
                                  "--history-csv", str(hist),
                                  "--figures", str(figs),
                                  "--seed", "2", "--json",
                                  "--epochs", "3", "--patience", "3",
                                  "--batch-size", "8", "--val-fraction", "0.2"])
    assert code == 0
    assert model.exists()
    summary = json.loads(out)
    assert summary["epochs"] <= 3
    rows = hist.read_text().strip().splitlines()
    assert rows[0] == "epoch,loss,train_accuracy,val_accuracy"
    assert len(rows) == summary["epochs"] + 1
    assert (figs / "history.png").exists()


def test_eval_reports_accuracy(synth_dir, model_path, tmp_path, capsys):
    csv_path = tmp_path / "confusion.csv"
    figs = tmp_path / "figs"
    code, out, err = run(capsys, ["eval", "--model", str(model_path),
                                  "--data", str(synth_dir),
                                  "--confusion-csv", str(csv_path),
                                  "--figures", str(figs), "--json"])
    assert code == 0
    summary = json.loads(out)
    assert 0.0 <= summary["accuracy"] <= 1.0
    assert summary["n_test"] == 24
    assert set(summary["per_class_accuracy"]) == {"a", "b"}
    assert csv_path.exists()
    assert (figs / "confusion.png").exists()
    assert "accuracy" in err


def test_eval_missing_model(synth_dir, tmp_path, capsys):
    code, _, err = run(capsys, ["eval", "--model", str(tmp_path / "nope.ckpt"),
                                "--data", str(synth_dir)])
    assert code == 2
    assert "data error" in err


# -- protocol ----------------------------------------------------------------

def test_protocol_pooled_outputs(synth_dir, tmp_path, capsys):
    out_dir = tmp_path / "run"
    argv = ["protocol", "--data", str(synth_dir), "--protocol", "pooled",
            "--test-fraction", "0.25", "--no-augment", "--seed", "5",
            "--out-dir", str(out_dir), "--json"] + BASE_TRAIN
    code, out, err = run(capsys, argv)
    assert code == 0
    summary = json.loads(out)
    assert summary["protocol"] == "pooled"
    assert summary["n_test"] == 6
    for name in ("confusion.csv", "confusion.png", "history.png"):
        assert (out_dir / name).exists(), name


def test_protocol_rerun_byte_identical(synth_dir, tmp_path, capsys):
    dirs = [tmp_path / "r1", tmp_path / "r2"]
    outs = []
    for d in dirs:
        argv = ["protocol", "--data", str(synth_dir), "--protocol", "pooled",
                "--test-fraction", "0.25", "--no-augment", "--seed", "5",
                "--out-dir", str(d), "--json"] + BASE_TRAIN
        code, out, _ = run(capsys, argv)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    for name in ("confusion.csv", "confusion.png", "history.png"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name


def test_protocol_writer_disjoint_derives_writers(synth_dir, capsys):
    argv = ["protocol", "--data", str(synth_dir), "--protocol",
            "writer-disjoint", "--no-augment", "--seed", "6", "--json"] + BASE_TRAIN
    code, out, _ = run(capsys, argv)
    assert code == 0
    summary = json.loads(out)
    assert summary["protocol"] == "writer-disjoint"
    assert not set(summary["train_writers"]) & set(summary["test_writers"])


def test_protocol_mixed_explicit_writers(synth_dir, capsys):
    argv = ["protocol", "--data", str(synth_dir), "--protocol", "mixed",
            "--train-writers", "w1", "--test-writers", "w1,w2",
            "--test-fraction", "0.25", "--no-augment", "--seed", "7",
            "--json"] + BASE_TRAIN
    code, out, _ = run(capsys, argv)
    assert code == 0
    summary = json.loads(out)
    assert summary["train_writers"] == ["w1"]
    assert summary["test_writers"] == ["w1", "w2"]


# -- sweeps ------------------------------------------------------------------

def test_sweep_classes_cli(synth_dir, tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    figs = tmp_path / "figs"
    argv = ["sweep-classes", "--data", str(synth_dir),
            "--samples-per-class", "4", "--counts", "2", "--repeats", "2",
            "--out-csv", str(csv_path), "--figures", str(figs), "--seed", "8",
            "--json", "--epochs", "2", "--patience", "2", "--batch-size", "8"]
    code, out, err = run(capsys, argv)
    assert code == 0
    points = json.loads(out)["points"]
    assert [p["x"] for p in points] == [2]
    assert points[0]["n_repeats"] == 2
    rows = csv_path.read_text().strip().splitlines()
    assert rows[0] == "x,mean_accuracy,std_accuracy,n_repeats"
    assert len(rows) == 2
    assert (figs / "sweep_classes.png").exists()


def test_sweep_size_cli(synth_dir, tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    argv = ["sweep-size", "--data", str(synth_dir), "--sizes", "2,4",
            "--repeats", "2", "--out-csv", str(csv_path), "--seed", "8",
            "--json", "--epochs", "2", "--patience", "2", "--batch-size", "8"]
    code, out, err = run(capsys, argv)
    assert code == 0
    points = json.loads(out)["points"]
    assert [p["x"] for p in points] == [2, 4]
    rows = csv_path.read_text().strip().splitlines()
    assert len(rows) == 3


# -- decode ------------------------------------------------------------------

@pytest.fixture
def dict_file(tmp_path):
    f = tmp_path / "words.txt"
    f.write_text("cat\ndog\nhouse\n", encoding="utf-8")
    return f


def test_decode_plain_output(dict_file, capsys):
    code, out, err = run(capsys, ["decode", "--dictionary", str(dict_file),
                                  "--words", "dat,hose,dog"])
    assert code == 0
    assert out.splitlines() == ["cat", "house", "dog"]


def test_decode_json_with_truth(dict_file, capsys):
    code, out, _ = run(capsys, ["decode", "--dictionary", str(dict_file),
                                "--words", "dat,hose", "--truth", "cat,house",
                                "--json"])
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 1
    summary = json.loads(lines[0])
    assert summary["words"] == ["cat", "house"]
    assert summary["distances"] == [1, 1]
    assert summary["accuracy"] == 1.0
    assert summary["uncorrected_accuracy"] == 0.0


def test_decode_uncorrectable_word(dict_file, capsys):
    code, out, _ = run(capsys, ["decode", "--dictionary", str(dict_file),
                                "--words", "zzzzzz", "--json"])
    assert code == 0
    summary = json.loads(out)
    assert summary["words"] == ["zzzzzz"]
    assert summary["distances"] == [-1]


# -- gradcheck ---------------------------------------------------------------

def test_gradcheck_exit_codes(monkeypatch, capsys):
    monkeypatch.setattr(cli, "grad_check", lambda p, s, h: (2.0e-5, 100, 3))
    code, out, err = run(capsys, ["gradcheck", "--json"])
    assert code == 0
    summary = json.loads(out)
    assert summary["ok"] is True
    assert summary["max_rel_error"] == 2.0e-5
    assert summary["skipped"] == 3
    assert "max relative error" in err

    monkeypatch.setattr(cli, "grad_check", lambda p, s, h: (0.5, 100, 0))
    code, out, _ = run(capsys, ["gradcheck", "--json"])
    assert code == 3
    assert json.loads(out)["ok"] is False


# -- shared behavior ----------------------------------------------------------

def test_usage_errors_exit_1(capsys):
    code, _, err = run(capsys, ["augment", "--data", "x"])  # missing --out
    assert code == 1
    code, _, _ = run(capsys, ["no-such-command"])
    assert code == 1
    code, _, _ = run(capsys, ["train", "--data", "x", "--model-out", "y",
                              "--epochs", "lots"])
    assert code == 1


def test_missing_dataset_exits_2(tmp_path, capsys):
    code, _, err = run(capsys, ["train", "--data", str(tmp_path / "absent"),
                                "--model-out", str(tmp_path / "m.ckpt")])
    assert code == 2
    assert "data error" in err


def test_config_file_drives_training(synth_dir, tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        "seed = 2\n[train]\nmax_epochs = 2\npatience = 2\nbatch_size = 8\n"
        "val_fraction = 0.2\n",
        encoding="utf-8",
    )
    code, out, _ = run(capsys, ["train", "--data", str(synth_dir),
                                "--model-out", str(tmp_path / "m.ckpt"),
                                "--config", str(cfg), "--json"])
    assert code == 0
    assert json.loads(out)["epochs"] <= 2


def test_unknown_config_key_exits_1(synth_dir, tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text("typo_key = 1\n", encoding="utf-8")
    code, _, err = run(capsys, ["train", "--data", str(synth_dir),
                                "--model-out", str(tmp_path / "m.ckpt"),
                                "--config", str(cfg)])
    assert code == 1
    assert "unknown config key" in err


def test_data_dir_env_resolves_relative_paths(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("STROKESENSE_DATA_DIR", str(tmp_path))
    code, _, _ = run(capsys, ["synth", "--out", "envds", "--classes", "2",
                              "--writers", "2", "--per-class", "2",
                              "--seed", "1"])
    assert code == 0
    assert (tmp_path / "envds" / "manifest.csv").exists()
    out = tmp_path / "envaug"
    code, js, _ = run(capsys, ["augment", "--data", "envds",
                               "--out", str(out), "--seed", "1", "--json"])
    assert code == 0
    assert json.loads(js)["in_items"] == 8
