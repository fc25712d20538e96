import json
import os
import subprocess
import sys

import pytest

from mechaudit.cli import main
from mechaudit.config import parse_config
from mechaudit.env import ConfigError
from mechaudit.report import emit_report, run_scenario
from mechaudit.scenarios import BUILTIN_NAMES, build_instance, builtin_scenario

MINIMAL = {
    "environment": {
        "n": 3,
        "space": {"kind": "finite", "labels": ["a", "b"]},
        "distribution": {"kind": "categorical", "probs": {"a": 0.5, "b": 0.5}},
        "utility": {"kind": "table", "values": {"a": [1.0, 0.0], "b": [0.0, 1.0]}},
        "utility_bound": 1.0,
    },
    "mechanism": {
        "family": "histogram",
        "partition": {"kind": "labels", "blocks": [["a"], ["b"]]},
        "chooser": {"name": "plurality"},
    },
}


def test_minimal_config_gets_documented_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.seed == 0
    assert cfg.workers == 1
    assert cfg.budgets["mc_samples"] == 100_000
    assert cfg.budgets["enumeration_states"] == 10_000_000
    assert cfg.audits["privacy"]["eps_grid"] == [0.1, 0.2, 0.5, 1.0]
    assert not cfg.seed_explicit


def test_unknown_chooser_is_named_in_the_error():
    bad = json.loads(json.dumps(MINIMAL))
    bad["mechanism"]["chooser"]["name"] = "borda"
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    assert "chooser" in str(err.value)


def test_probabilities_must_sum_to_one():
    bad = json.loads(json.dumps(MINIMAL))
    bad["environment"]["distribution"]["probs"] = {"a": 0.5, "b": 0.4}
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_unknown_top_level_field_rejected():
    bad = dict(MINIMAL, surprise=1)
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    assert "surprise" in str(err.value)


def test_roundtrip_parse_emit_parse():
    cfg = parse_config(MINIMAL)
    echoed = cfg.echo()
    again = parse_config(echoed)
    assert again.echo() == echoed


def test_all_builtins_parse_and_build():
    for name in BUILTIN_NAMES:
        cfg = parse_config(builtin_scenario(name))
        env, mech = build_instance(cfg.data)
        assert env.n >= 2


def test_unknown_builtin_lists_names():
    with pytest.raises(ConfigError) as err:
        builtin_scenario("lottery")
    msg = str(err.value)
    for name in BUILTIN_NAMES:
        assert name in msg


def test_config_text_and_path_inputs(tmp_path):
    text = json.dumps(MINIMAL)
    from_text = parse_config(text)
    path = tmp_path / "scenario.json"
    path.write_text(text)
    from_path = parse_config(path)
    assert from_text.echo() == from_path.echo()


def test_report_roundtrip_and_csv(tmp_path):
    cfg = parse_config(dict(MINIMAL, seed=5))
    doc = run_scenario(cfg)
    out = tmp_path / "report.json"
    emit_report(doc, "json", str(out))
    loaded = json.loads(out.read_text())
    assert loaded["config"]["seed"] == 5
    assert "workers" not in loaded["config"]

    written = emit_report(doc, "csv", str(tmp_path / "report.csv"))
    privacy_csv = tmp_path / "report_privacy.csv"
    truth_csv = tmp_path / "report_truthfulness.csv"
    assert str(privacy_csv) in written and str(truth_csv) in written
    header = privacy_csv.read_text().splitlines()[0]
    assert header == ("scenario_id,i,I_size,eps,delta_measured,delta_ci_radius,"
                      "exhaustive_flag,method")
    theader = truth_csv.read_text().splitlines()[0]
    assert theader.startswith("scenario_id,k,r,gain,gain_ci_radius,bound_thm1,"
                              "verdict,exhaustive_flag")


def test_cli_example_emits_valid_config(capsys):
    code = main(["example", "voting"])
    assert code == 0
    out = capsys.readouterr().out
    parse_config(json.loads(out))


def test_cli_example_unknown_name(capsys):
    assert main(["example", "lottery"]) == 1


def test_cli_run_roundtrip(tmp_path, capsys):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(MINIMAL))
    out_path = tmp_path / "report.json"
    code = main(["run", str(cfg_path), "--seed", "9", "--out", str(out_path),
                 "--mc-samples", "1000"])
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report["config"]["seed"] == 9
    assert report["config"]["budgets"]["mc_samples"] == 1000
    assert "meta" not in report

    code = main(["run", str(cfg_path), "--seed", "9", "--out",
                 str(tmp_path / "timed.json"), "--timing"])
    assert code == 0
    timed = json.loads((tmp_path / "timed.json").read_text())
    assert "meta" in timed and "wall_clock_seconds" in timed["meta"]


def test_cli_run_bad_config_exits_1(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text("{not json")
    assert main(["run", str(cfg_path)]) == 1
    missing = tmp_path / "missing.json"
    assert main(["run", str(missing)]) == 1


def test_cli_seed_resolution_order(tmp_path, monkeypatch, capsys):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(MINIMAL))

    monkeypatch.setenv("MECHAUDIT_SEED", "77")
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "env.json")]) == 0
    assert json.loads((tmp_path / "env.json").read_text())["config"]["seed"] == 77

    # the flag wins over the environment
    assert main(["run", str(cfg_path), "--seed", "5",
                 "--out", str(tmp_path / "flag.json")]) == 0
    assert json.loads((tmp_path / "flag.json").read_text())["config"]["seed"] == 5

    # an explicit config seed wins over the environment
    cfg_path.write_text(json.dumps(dict(MINIMAL, seed=3)))
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "cfg.json")]) == 0
    assert json.loads((tmp_path / "cfg.json").read_text())["config"]["seed"] == 3


def test_cli_io_error_exits_3(tmp_path):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(MINIMAL))
    assert main(["run", str(cfg_path), "--out",
                 str(tmp_path / "no_such_dir" / "report.json")]) == 3


def test_console_entry_point_installed():
    proc = subprocess.run([sys.executable, "-m", "mechaudit.cli", "example",
                           "public_project"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert '"public_project"' in proc.stdout or "public_project" in proc.stdout
