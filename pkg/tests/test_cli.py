import json

import pytest

from multiwalk.cli import main, parse_family
from multiwalk.graphs import FamilySpec
from multiwalk.harness import ExperimentConfig


def test_parse_family():
    assert parse_family("cycle{n=64}") == FamilySpec("cycle", n=64)
    assert parse_family("torus{d=2,side=16}") == FamilySpec("torus", d=2, side=16)
    import argparse
    with pytest.raises(argparse.ArgumentTypeError):
        parse_family("cycle{n}")


def test_generate_and_analyze(tmp_path, capsys):
    edges = tmp_path / "c4.edges"
    assert main(["generate", "--family", "cycle{n=4}", "--out", str(edges)]) == 0
    assert edges.read_text().splitlines()[0] == "4 4"
    assert main(["analyze", "--edges", str(edges), "--k", "4"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["partial_mixing"]["1/4"] == 2
    assert out["large_hit"]["1/4"]["time"] == 3
    assert out["conductance"] == 0.25


def test_analyze_writes_profile(tmp_path):
    assert main(["analyze", "--family", "cycle{n=8}", "--out", str(tmp_path / "a")]) == 0
    assert (tmp_path / "a" / "profile.csv").read_text().startswith("t,d,s\n")


def test_estimate_threads_do_not_matter(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    common = ["estimate", "--family", "cycle{n=12}", "--k", "1,3", "--trials", "50", "--seed", "4"]
    assert main(common + ["--out", str(a)]) == 0
    assert main(common + ["--threads", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rec = json.loads(a.read_text())
    assert [r["k"] for r in rec] == [1, 3]


def test_sweep_verify_report(tmp_path, capsys):
    cfg = ExperimentConfig(families=[FamilySpec("cycle", n=16)], k_grid=[1, 2, 4], seed=1, trials=40)
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "s")]) == 0
    assert main(["verify", "--config", str(path), "--out", str(tmp_path / "v")]) == 0
    assert "failures" in capsys.readouterr().out
    assert main(["report", str(tmp_path / "v"), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "bounds.csv").exists()


def test_verify_single_criterion(capsys):
    assert main(["verify", "--suite", "acceptance:10"]) == 0
    assert "[PASS] criterion 10" in capsys.readouterr().out


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"families": [], "k_grid": [1], "seed": 1}))
    assert main(["sweep", "--config", str(path)]) == 2
    assert "error" in capsys.readouterr().err
