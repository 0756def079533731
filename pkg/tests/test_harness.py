import json

import numpy as np
import pytest

from polargd.cli import main
from polargd.harness import (
    ConfigError,
    ExperimentConfig,
    format_csv,
    run_bler_experiment,
    run_calibration,
    run_estimate,
    run_softout_compare,
    run_turbo,
)


def small(**kw):
    base = dict(code="rm:5,3", frozen="convolutional", list_size=2, trials=1200, chunk_size=300, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        small(code="bogus:1,2").validate()
    with pytest.raises(ConfigError):
        small(rule="crc").validate()
    with pytest.raises(ConfigError):
        small(crc="0x30").validate()
    with pytest.raises(ConfigError):
        small(trials=0).validate()
    with pytest.raises(ConfigError):
        small(epsilon=1.0).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"no_such_key": 1})


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"code": "rm:5,3", "trials": 10, "seed": 3}))
    cfg = ExperimentConfig.load(str(path), {"trials": 20, "seed": None})
    assert (cfg.code, cfg.trials, cfg.seed) == ("rm:5,3", 20, 3)
    assert ExperimentConfig.from_json(json.dumps(cfg.to_dict())) == cfg


def test_zero_noise_limit():
    rows = run_bler_experiment(small(ebn0_db=40.0, trials=500))
    assert rows[0]["bler"] == 0 and rows[0]["trials"] == 500


@pytest.mark.parametrize("workers", [2, 3])
def test_csv_identical_across_workers(workers):
    cfg = small(ebn0_db="2:1:3", target_errors=40)
    ref = format_csv(run_bler_experiment(cfg), cfg)
    other = small(ebn0_db="2:1:3", target_errors=40, workers=workers)
    assert format_csv(run_bler_experiment(other), other) == ref


def test_written_csv_identical_across_workers(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_calibration(small(out=str(a), trials=900))
    run_calibration(small(out=str(b), trials=900, workers=2))
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("# trials per point")


def test_target_errors_stops_on_chunk_boundary():
    rows = run_bler_experiment(small(ebn0_db=1.0, target_errors=10, trials=100000))
    assert rows[0]["trials"] == 300 and rows[0]["errors"] >= 10


def test_budget_truncates_last_chunk():
    assert run_bler_experiment(small(trials=1000))[0]["trials"] == 1000


def test_crc_and_forney_rules():
    crc = run_bler_experiment(small(code="nr5g:32,22", frozen="static", rule="crc", crc="0x30", trials=600))
    assert 0 <= crc[0]["uer"] <= crc[0]["bler"] <= 1
    fr = run_bler_experiment(small(rule="forney", forney_t=0.1, trials=600))
    assert 0 <= fr[0]["mdr"] <= 1


def test_uer_monotone_in_epsilon():
    uer = [run_bler_experiment(small(epsilon=e, trials=3000, ebn0_db=2.0))[0]["undetected"] for e in (0.5, 0.1, 0.01)]
    assert uer[0] >= uer[1] >= uer[2]


def test_calibration_rows():
    rows = run_calibration(small(trials=600))
    metrics = {r["metric"] for r in rows}
    assert metrics == {"proposed", "list", "forney"}
    assert all(0 <= r["bin"] <= 9 for r in rows)
    assert sum(r["count"] for r in rows if r["metric"] == "proposed") <= 600


def test_softout_rows():
    rows = run_softout_compare(small(frozen="static", trials=300, ebn0_db=3.0))
    assert [r["method"] for r in rows] == ["bcjr", "proposed_L1", "proposed_L2", "pyndiah_L1", "pyndiah_L2"]
    assert all(r["bits"] == 300 * 32 for r in rows)


def test_turbo_rows():
    rows = run_turbo(small(code="rm:4,2", frozen="static", trials=10, chunk_size=5, ebn0_db=3.0, imax=2))
    assert rows[0]["blocks"] == 10 and 0.5 <= rows[0]["avg_iterations"] <= 2


def test_estimate_rows(tmp_path):
    out = tmp_path / "est.csv"
    rows = run_estimate(small(code="rm:6,3", trials=5, out=str(out)))
    assert len(rows) == 61 and sum(r["is_argmax"] for r in rows) == 1
    assert "rmse=" in out.read_text()


def test_cli_end_to_end(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--code", "rm:5,3", "--trials", "200", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].startswith("ebn0_db,trials,errors")
    assert len(lines) == 2
    assert main(["simulate", "--code", "nope"]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"code": "rm:5,3", "trials": 100, "ebn0_db": "2:1:3"}))
    assert main(["simulate", "--config", str(cfg), "--trials", "50"]) == 0
    text = capsys.readouterr().out
    body = [l for l in text.splitlines() if not l.startswith("#")]
    assert len(body) == 3 and body[1].split(",")[1] == "50"
