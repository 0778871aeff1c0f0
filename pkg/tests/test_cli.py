import csv
import json
import math
import os

import pytest

from bqlab.cli import DEFAULT_CONFIG, main, validate_config

FAST_EXPSUM = [
    "--override", "expsum.n_values=[16,32,64]",
    "--override", "expsum.t_samples=8",
    "--override", "expsum.x_samples=33",
]


def test_validate_default_config():
    assert validate_config(DEFAULT_CONFIG) == []


def test_validate_names_beta_constraint():
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    cfg["strichartz"]["q"] = 1.0
    cfg["strichartz"]["p"] = "inf"
    msgs = validate_config(cfg)
    assert msgs  # p must be numeric per schema
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    cfg["strichartz"]["beta"] = 3.0
    msgs = validate_config(cfg)
    assert any("2q/(q+1)" in m for m in msgs)


def test_validate_negative_n():
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    cfg["expsum"]["n_values"] = [-2, 8]
    msgs = validate_config(cfg)
    assert any("N must be >= 1" in m for m in msgs)


def test_validate_unknown_field():
    cfg = {"expsum": {"bogus": 1}}
    msgs = validate_config(cfg)
    assert any("unknown field" in m for m in msgs)
    assert any("bogus" in m for m in msgs)


def test_missing_config_file(tmp_path):
    rc = main(["expsum", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert rc == 2


def test_malformed_config_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json }", encoding="utf-8")
    rc = main(["expsum", "--config", str(bad), "--out", str(tmp_path)])
    assert rc == 2
    assert ":" in capsys.readouterr().err  # line/column diagnostics


def test_inadmissible_beta_exits_2(tmp_path, capsys):
    rc = main([
        "strichartz", "--out", str(tmp_path),
        "--override", "strichartz.beta=3.0",
    ])
    assert rc == 2
    assert "2q/(q+1)" in capsys.readouterr().err


def test_expsum_run_writes_reports(tmp_path):
    rc = main(["expsum", "--out", str(tmp_path), "--seed", "9"] + FAST_EXPSUM)
    assert rc == 0
    base = tmp_path / "expsum"
    for name in ("report.json", "decay.csv", "decay.png", "manifest.json"):
        assert (base / name).is_file()
    report = json.loads((base / "report.json").read_text(encoding="utf-8"))
    assert report["seeds"]["seed_omega"] == 9
    assert report["checks"]["decay_spread_across_N"]["passed"] is True
    manifest = json.loads((base / "manifest.json").read_text(encoding="utf-8"))
    assert set(manifest["outputs"]) >= {"report.json", "decay.csv", "decay.png"}
    assert "duration_seconds" in manifest


def test_expsum_csv_is_rfc4180_with_seed_comments(tmp_path):
    main(["expsum", "--out", str(tmp_path)] + FAST_EXPSUM)
    lines = (tmp_path / "expsum" / "decay.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# seed_omega=")
    data_lines = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.reader(data_lines))
    header, body = rows[0], rows[1:]
    assert header == ["N", "side", "t", "x_at_max", "magnitude", "bound", "ratio"]
    n_col = header.index("N")
    assert {r[n_col] for r in body} == {"16", "32", "64"}
    for r in body:
        float(r[header.index("ratio")])  # parses as a float


def test_reruns_are_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        main(["expsum", "--out", str(out)] + FAST_EXPSUM)
    for name in ("report.json", "decay.csv"):
        assert (out_a / "expsum" / name).read_bytes() == (out_b / "expsum" / name).read_bytes()


def test_check_failure_exits_1_and_names_invariant(tmp_path, capsys):
    rc = main(["expsum", "--out", str(tmp_path),
               "--override", "expsum.spread_limit=1.0000001"] + FAST_EXPSUM)
    assert rc == 1
    err = capsys.readouterr().err
    assert "expsum.decay_spread_across_N" in err


def test_threads_resolution(tmp_path, monkeypatch):
    monkeypatch.setenv("BQLAB_THREADS", "3")
    main(["expsum", "--out", str(tmp_path)] + FAST_EXPSUM)
    manifest = json.loads((tmp_path / "expsum" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["threads"] == 3
    main(["expsum", "--out", str(tmp_path), "--threads", "2"] + FAST_EXPSUM)
    manifest = json.loads((tmp_path / "expsum" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["threads"] == 2


def test_no_figures_flag(tmp_path):
    rc = main(["expsum", "--out", str(tmp_path), "--no-figures"] + FAST_EXPSUM)
    assert rc == 0
    assert not (tmp_path / "expsum" / "decay.png").exists()
    assert (tmp_path / "expsum" / "report.json").is_file()


def test_config_file_and_override_precedence(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"seed": 123, "expsum": {"t_samples": 4}}), encoding="utf-8")
    rc = main([
        "expsum", "--config", str(cfg_file), "--out", str(tmp_path),
        "--override", "expsum.n_values=[16,32]",
        "--override", "expsum.x_samples=17",
    ])
    assert rc == 0
    report = json.loads((tmp_path / "expsum" / "report.json").read_text(encoding="utf-8"))
    assert report["seeds"]["seed_omega"] == 123
    assert report["config"]["t_samples"] == 4
    assert report["config"]["n_values"] == [16, 32]


def test_bad_override_exits_2(tmp_path, capsys):
    rc = main(["expsum", "--out", str(tmp_path), "--override", "garbage"])
    assert rc == 2


def test_all_subcommand_small(tmp_path):
    # shrink every experiment so the full pipeline wiring runs in seconds
    rc = main([
        "all", "--out", str(tmp_path),
        "--override", "expsum.n_values=[16,32,64]",
        "--override", "expsum.t_samples=6",
        "--override", "expsum.x_samples=33",
        "--override", "kernel.x_samples=6",
        "--override", "kernel.t_values=[0.1,1.0]",
        "--override", "kernel.cutoff=16.0",
        "--override", "kernel.window_scales=[0,1,2]",
        "--override", "strichartz.n_values=[16,32,64]",
        "--override", "strichartz.n_t=6",
        "--override", "strichartz.systems_per_n=2",
        "--override", "strichartz.rank=3",
        "--override", 'strichartz.triples=[[4.0,2.0,1.3333333333333333]]',
        "--override", "maximal.n_values=[16,32,64]",
        "--override", "maximal.n_t=6",
        "--override", "maximal.ranks=[1,2,4]",
        "--override", "maximal.line_points=512",
        "--override", "maximal.t_samples=16",
        "--override", "converge.line_points=512",
        "--override", "converge.m_range=[2,8]",
        "--override", "converge.ratio_limit=0.05",
        "--override", "randomize.khinchin_samples=4000",
        "--override", "randomize.n_samples=60",
        "--override", "randomize.torus_points=64",
        "--override", "randomize.line_points=256",
        "--override", "randomize.line_max_mode=6",
        "--override", "randomize.ball_points=64",
        "--override", "duality.batch=4",
        "--override", "duality.n_x=32",
        "--override", "duality.n_t=32",
        "--override", "duality.n_max=8",
        "--override", "duality.rank=2",
    ])
    assert rc == 0
    for sub in ("expsum", "kernel", "strichartz", "maximal", "converge", "randomize", "duality"):
        assert (tmp_path / sub / "report.json").is_file()
        assert (tmp_path / sub / "manifest.json").is_file()
