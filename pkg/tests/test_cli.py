import json
import os

import pytest

from dcfsim.cli import main, parse_param

TINY = {
    "experiment": {"kind": "toy_a", "n_bss": 2, "n_sim": 1, "horizon_s": 1.0},
    "output_prefix": "t",
}


def write_config(tmp_path, body, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return str(path)


def test_run_produces_expected_files(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    rc = main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    names = {os.path.basename(p) for p in out}
    assert {"t_run0_intervals.csv", "t_run0_delays.csv", "t_run0_summary.json",
            "t_aggregate_summary.json"} <= names
    for p in out:
        assert os.path.exists(p)


def test_missing_config_exits_2(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "nope.json")])
    assert rc == 2
    assert "nope.json" in capsys.readouterr().err


def test_invalid_config_lists_errors(tmp_path, capsys):
    cfg = write_config(tmp_path, {"experiment": {"n_bss": 10}, "polcy": {}})
    rc = main(["run", "--config", cfg])
    assert rc == 2
    err = capsys.readouterr().err
    assert "unknown config key: polcy" in err


def test_validation_failure_lists_all_violations(tmp_path, capsys):
    cfg = write_config(tmp_path, {"experiment": {"n_bss": 10, "horizon_s": -1}})
    rc = main(["run", "--config", cfg])
    assert rc == 2
    err = capsys.readouterr().err
    assert "n_bss" in err and "horizon_s" in err


def test_same_seed_yields_byte_identical_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    for sub in ("a", "b"):
        rc = main(["run", "--config", cfg, "--seed", "42", "--out", str(tmp_path / sub),
                   "--dump-deployment", "--trace"])
        assert rc == 0
    capsys.readouterr()
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == sorted(os.listdir(tmp_path / "b"))
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_summary_echoes_resolved_config(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    rc = main(["run", "--config", cfg, "--seed", "7", "--out", str(tmp_path / "out")])
    assert rc == 0
    capsys.readouterr()
    summary = json.loads((tmp_path / "out" / "t_run0_summary.json").read_text())
    assert summary["config"]["master_seed"] == 7
    assert summary["config"]["experiment"]["kind"] == "toy_a"
    assert summary["seed"] == 7


def test_unwritable_output_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    rc = main(["run", "--config", cfg, "--out", os.devnull + "/x"])
    assert rc == 3


def test_parse_param_forms():
    assert parse_param("n_bss=1..3") == ("n_bss", [1, 2, 3])
    assert parse_param("n_bss=1..1") == ("n_bss", [1])
    assert parse_param("policy=beb,db,iyt") == ("policy", ["beb", "db", "iyt"])
    assert parse_param("cw0=5,16") == ("cw0", [5, 16])
    assert parse_param("frobnicate=1..2") == (None, None)
    assert parse_param("n_bss") == (None, None)
    assert parse_param("policy=") == (None, None)


def test_sweep_over_bss_count(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "experiment": {"kind": "overlap", "n_bss": 1, "n_sim": 2, "horizon_s": 0.5},
        "output_prefix": "sw",
    })
    rc = main(["sweep", "--config", cfg, "--out", str(tmp_path / "out"),
               "--param", "n_bss=1..2"])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    names = {os.path.basename(p) for p in out}
    assert "sw_n_bss_1_aggregate_summary.json" in names
    assert "sw_n_bss_2_aggregate_summary.json" in names
    assert "sw_sweep.csv" in names
    sweep = (tmp_path / "out" / "sw_sweep.csv").read_text().splitlines()
    assert sweep[0] == "param,value,policy,metric,mean,min,max,median,q1,q3"
    assert len(sweep) > 1


def test_sweep_over_policy(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "experiment": {"kind": "overlap", "n_bss": 2, "n_sim": 1, "horizon_s": 0.5},
        "output_prefix": "pol",
    })
    rc = main(["sweep", "--config", cfg, "--out", str(tmp_path / "out"),
               "--param", "policy=beb,db,iyt"])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    names = {os.path.basename(p) for p in out}
    assert {"pol_policy_beb_aggregate_summary.json",
            "pol_policy_db_aggregate_summary.json",
            "pol_policy_iyt_aggregate_summary.json"} <= names


def test_sweep_unknown_parameter_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    rc = main(["sweep", "--config", cfg, "--param", "bogus=1..2"])
    assert rc == 2
    assert "bogus" in capsys.readouterr().err
