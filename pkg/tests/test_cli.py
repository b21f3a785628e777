"""Command-line interface: precedence, sharded merge, output formats."""

import json

import pytest

from decay_spectra.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


BASE = ("--alpha", "1.0", "--n", "200", "--trials", "2", "--seed", "9")


class TestRunCommands:
    def test_local_stdout_json(self, capsys):
        code, out, _ = run_cli(capsys, "local", *BASE)
        assert code == 0
        doc = json.loads(out)
        assert doc["config"]["experiment"] == "local"
        assert doc["config"]["trials"] == 2
        assert len(doc["rows"]) == 2

    def test_flags_override_config_file(self, tmp_path, capsys):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"alpha": 0.5, "n": 200.0, "trials": 2,
                                       "master_seed": 9}))
        code, out, _ = run_cli(capsys, "local", "--config", str(cfgfile),
                               "--trials", "1")
        assert code == 0
        doc = json.loads(out)
        assert doc["config"]["alpha"] == 0.5
        assert doc["config"]["trials"] == 1

    def test_window_flag_parsing(self, capsys):
        # the equals form keeps a leading minus out of argparse's option scan
        code, out, _ = run_cli(capsys, "local", *BASE, "--window=-3.0,3.0")
        assert code == 0
        assert json.loads(out)["config"]["window"] == [-3.0, 3.0]
        with pytest.raises(SystemExit):
            main(["local", "--window", "nonsense"])

    def test_env_seed_override(self, capsys, monkeypatch):
        monkeypatch.setenv("DECAY_SPECTRA_SEED", "555")
        code, out, _ = run_cli(capsys, "local", *BASE)
        assert code == 0
        assert json.loads(out)["config"]["master_seed"] == 555

    def test_unknown_config_key_fails(self, tmp_path, capsys):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"alpha": 1.0, "bogus": 2}))
        code, _, err = run_cli(capsys, "local", "--config", str(cfgfile))
        assert code == 2
        assert "unknown config keys: bogus" in err

    def test_csv_requires_out(self, capsys):
        code, _, err = run_cli(capsys, "local", *BASE, "--format", "csv")
        assert code == 2
        assert "requires --out" in err

    def test_trial_range_flags(self, capsys):
        code, out, _ = run_cli(capsys, "local", *BASE, "--trial-start", "1",
                               "--trial-stop", "2")
        assert code == 0
        doc = json.loads(out)
        assert [row["trial"] for row in doc["rows"]] == [1]


class TestMergeCommand:
    def test_sharded_runs_merge_to_full_run(self, tmp_path, capsys):
        full = tmp_path / "full.json"
        p1 = tmp_path / "p1.json"
        p2 = tmp_path / "p2.json"
        argv = ["local", *BASE, "--trials", "3"]
        assert main(argv + ["--out", str(full)]) == 0
        assert main(argv + ["--trial-stop", "2", "--out", str(p1)]) == 0
        assert main(argv + ["--trial-start", "2", "--out", str(p2)]) == 0
        merged = tmp_path / "merged.json"
        assert main(["merge", str(p1), str(p2), "--out", str(merged)]) == 0
        assert merged.read_bytes() == full.read_bytes()
        capsys.readouterr()

    def test_merge_mismatched_configs_fails(self, tmp_path, capsys):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert main(["local", *BASE, "--out", str(a)]) == 0
        assert main(["local", "--alpha", "0.25", "--n", "200", "--trials", "2",
                     "--seed", "9", "--out", str(b)]) == 0
        code, _, err = run_cli(capsys, "merge", str(a), str(b))
        assert code == 2
        assert "different configs" in err

    def test_missing_report_file(self, capsys):
        code, _, err = run_cli(capsys, "merge", "/nonexistent/r.json")
        assert code == 2
        assert "r.json" in err
