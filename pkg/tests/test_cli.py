import csv
import json

import pytest

from regretlab import cli
from regretlab.harness.results import ResultRow


def _write_config(path, **fields):
    config = {"schema": 1, "id": "cli-test", "kind": "tradeoff", "prior": "bpsk", "noise_var": 1.0, "a_grid": [0.5, 1.0, 2.0]}
    config.update(fields)
    path.write_text(json.dumps(config))
    return path


def _read_rows(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _json_from(out):
    return json.loads(out[out.index("{"):])


class TestCommands:
    def test_fig2_writes_csv(self, tmp_path):
        out = tmp_path / "fig2.csv"
        code = cli.main(["fig2", "--start", "0.3", "--stop", "0.33", "--step", "0.005", "--out", str(out)])
        assert code == cli.EXIT_OK
        rows = _read_rows(out)
        assert len(rows) == 7
        assert rows[0]["experiment_id"] == "fig2-10dB"
        assert sum(r["is_min_rho"] == "true" for r in rows) == 1
        assert out.read_text().startswith("# regretlab ")

    def test_tradeoff(self, tmp_path):
        out = tmp_path / "tradeoff.csv"
        assert cli.main(["tradeoff", "--prior", "symmetric-mixture", "--gains", "0.5,2", "--out", str(out)]) == 0
        assert [r["tradeoff_holds"] for r in _read_rows(out)] == ["true", "true"]

    def test_bounds_json_output(self, tmp_path, capsys):
        code = cli.main(["bounds", "--gains", "1", "--offsets", "0.01", "--json", "--no-meta"])
        assert code == 0
        payload = _json_from(capsys.readouterr().out)
        assert payload["rows"][0]["a_hat"] == pytest.approx(1.01)
        assert payload["config"]["kind"] == "bounds"

    def test_run_strict_passes(self, tmp_path):
        config = _write_config(tmp_path / "tradeoff.json")
        out = tmp_path / "rows.csv"
        assert cli.main(["run", str(config), "--out", str(out), "--strict"]) == cli.EXIT_OK
        assert len(_read_rows(out)) == 3

    def test_run_strict_reports_violation(self, tmp_path, monkeypatch):
        config = _write_config(tmp_path / "tradeoff.json")
        monkeypatch.setattr(cli, "run", lambda cfg: [ResultRow(cfg.experiment_id, 0, {"a": 1.0, "tradeoff_holds": False})])
        assert cli.main(["run", str(config), "--strict"]) == cli.EXIT_VIOLATION
        assert cli.main(["run", str(config)]) == cli.EXIT_OK

    def test_no_meta_output_is_reproducible(self, tmp_path):
        config = _write_config(tmp_path / "tradeoff.json")
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(["run", str(config), "--out", str(first), "--no-meta", "--workers", "1"]) == 0
        assert cli.main(["run", str(config), "--out", str(second), "--no-meta", "--workers", "3"]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text().startswith("experiment_id,row,")

    def test_json_file_output(self, tmp_path):
        config = _write_config(tmp_path / "tradeoff.json")
        target = tmp_path / "rows.json"
        assert cli.main(["run", str(config), "--json-out", str(target)]) == 0
        payload = json.loads(target.read_text())
        assert payload["config"]["id"] == "cli-test"
        assert len(payload["rows"]) == 3


class TestValidate:
    def test_valid_config(self, tmp_path, capsys):
        config = _write_config(tmp_path / "ok.json")
        assert cli.main(["validate", str(config)]) == 0
        assert "3 rows" in capsys.readouterr().out

    def test_invalid_config(self, tmp_path, capsys):
        config = _write_config(tmp_path / "bad.json", noise_var=-1.0, kind="sideways")
        assert cli.main(["validate", str(config)]) == cli.EXIT_CONFIG
        err = capsys.readouterr().err
        assert "kind:" in err

    def test_schema(self, capsys):
        assert cli.main(["validate", "--schema"]) == 0
        assert "a_hat_rule" in _json_from(capsys.readouterr().out)

    def test_needs_path_or_schema(self):
        assert cli.main(["validate"]) == cli.EXIT_CONFIG


class TestUsage:
    def test_unknown_command(self):
        assert cli.main(["sideways"]) == cli.EXIT_CONFIG

    def test_missing_required_option(self):
        assert cli.main(["tradeoff", "--out", "x.csv"]) == cli.EXIT_CONFIG

    def test_bad_prior(self, tmp_path):
        assert cli.main(["fig2", "--prior", "laplace:0,1", "--out", str(tmp_path / "x.csv")]) == cli.EXIT_CONFIG

    def test_no_command(self):
        assert cli.main([]) == cli.EXIT_CONFIG
