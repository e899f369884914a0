import json

import pytest

from softqec import cli
from softqec.experiments import ConfigError, ExperimentConfig, load_config_file, run


def run_cli(*args):
    return cli.main(list(args))


def test_seed_required(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("bounds")
    assert exc.value.code == cli.EXIT_CONFIG


def test_invalid_fields_are_listed(capsys, tmp_path):
    code = run_cli("memory", "--seed", "1", "--d", "4", "--p", "0.7", "--output", str(tmp_path))
    err = capsys.readouterr().err
    assert code == cli.EXIT_CONFIG
    assert "d:" in err and "p:" in err


def test_unknown_config_field(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("colour = 'blue'\n")
    assert run_cli("bounds", "--seed", "1", "--config", str(cfg)) == cli.EXIT_CONFIG


def test_runtime_error_exit_code(tmp_path):
    missing = tmp_path / "nope.json"
    code = run_cli("hierarchical", "--seed", "1", "--joint", str(missing), "--trials", "1",
                   "--output", str(tmp_path / "o"), "--quiet")
    assert code == cli.EXIT_RUNTIME


def test_rep_exact_outputs(tmp_path):
    out = tmp_path / "rep"
    assert run_cli("rep-exact", "--seed", "0", "--n", "12", "--p", "0.05", "--discard", "0.002",
                   "--output", str(out)) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["failure_after"] == pytest.approx(3.75e-10, rel=0.01)
    assert (out / "table.csv").read_text().startswith("phi_units,phi,mass")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n"] == 12 and "git" in manifest and manifest["wall_seconds"] >= 0


def test_bounds_outputs(tmp_path):
    assert run_cli("bounds", "--seed", "0", "--V", "4", "--p", "0.05", "--epsilon", "1e-9",
                   "--output", str(tmp_path)) == 0
    b = json.loads((tmp_path / "bounds.json").read_text())
    assert b["epsilon_bound"] <= 1e-9 and b["discard_bound"] <= 0.5


def test_rerun_is_byte_identical(tmp_path):
    args = ["phi-sweep", "--seed", "4", "--d", "3", "--trials", "3000", "--quiet"]
    assert run_cli(*args, "--output", str(tmp_path / "a")) == 0
    assert run_cli(*args, "--threads", "2", "--output", str(tmp_path / "b")) == 0
    for name in ("histogram.csv", "joint.json", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_reproduces_run(tmp_path):
    assert run_cli("postselect", "--seed", "2", "--d", "3", "--T", "2", "--trials", "2000",
                   "--discard", "0.05", "--quiet", "--output", str(tmp_path / "a")) == 0
    manifest = tmp_path / "a" / "manifest.json"
    cfg = ExperimentConfig.from_mapping(load_config_file(manifest))
    cfg.output = str(tmp_path / "b")
    run(cfg)
    assert (tmp_path / "a" / "summary.json").read_text() == (tmp_path / "b" / "summary.json").read_text()


def test_toml_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('d = 3\np = 0.05\ntrials = 500\nT_mem = 100\nk = 3\n')
    assert run_cli("memory", "--seed", "5", "--config", str(cfg), "--quiet", "--output", str(tmp_path / "m")) == 0
    summary = json.loads((tmp_path / "m" / "summary.json").read_text())
    assert summary["trials"] == 500 and summary["extrapolated"]["k"] == 3


@pytest.mark.parametrize("n,d,r,T", [(1054, 5, 10, 49), (1054, 5, 3, 163), (100, 3, 1, 90)])
def test_round_rule(n, d, r, T):
    cfg = ExperimentConfig("memory", 0, n=n, d=d, r=r)
    assert cfg.rounds == T


def test_round_rule_needs_n():
    with pytest.raises(ConfigError):
        ExperimentConfig("memory", 0, r=2.0).validate()


def test_qclp_info(tmp_path):
    assert run_cli("qclp-info", "--seed", "0", "--output", str(tmp_path)) == 0
    info = json.loads((tmp_path / "code.json").read_text())
    assert info["n"] == 1054 and info["k"] == 140 and info["checks_commute"]


def test_small_hierarchical_run(tmp_path):
    out = tmp_path / "h"
    assert run_cli("hierarchical", "--seed", "1", "--d", "3", "--T", "2", "--p", "0.03",
                   "--inner-trials", "4000", "--outer-rounds", "1", "--trials", "4", "--quiet",
                   "--output", str(out)) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["trials"] == 4 and 0 <= summary["p_value"] <= 1
    assert (out / "paired.csv").read_text().count("\n") == 5
