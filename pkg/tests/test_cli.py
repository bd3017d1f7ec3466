import json

import pytest

from dispatchsim import cli
from dispatchsim.cli import main


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def test_run_table6(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "table6_demo.scn", "--out", str(out)]) == 0
    rows = _read(out / "jobs.csv").splitlines()
    waits = {int(r.split(",")[0]): float(r.split(",")[4]) for r in rows[1:]}
    assert waits == {1: 0.0, 2: 9.0, 3: 16.0, 4: 3.0, 5: 8.0}


def test_run_missing_scenario(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.scn")]) == 2
    assert "error" in capsys.readouterr().err


def test_run_invalid_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[scenario]\nname = x\n")
    assert main(["run", str(bad)]) == 2


def test_run_seed_determinism(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "paper_tables.scn", "--seed", "42", "--out", str(out_a)]) == 0
    assert main(["run", "paper_tables.scn", "--seed", "42", "--out", str(out_b)]) == 0
    for name in ("summary.csv", "rejections.csv", "jobs.csv"):
        assert _read(out_a / name) == _read(out_b / name)


def test_demo_output_and_exit(capsys):
    assert main(["demo"]) == 0
    out = capsys.readouterr().out
    assert "order: 1 4 2 5 3" in out
    assert "demo: PASS" in out


def test_demo_json(capsys):
    assert main(["demo", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["order"] == [1, 4, 2, 5, 3]
    assert payload["waits"] == {"1": 0, "4": 3, "2": 9, "5": 8, "3": 16}
    assert payload["ok"] is True


def test_demo_tampered_expectations_fail(monkeypatch, capsys):
    # negative control: a wrong embedded table must trip the self-check
    monkeypatch.setattr(cli, "DEMO_EXPECTED_ORDER", [1, 2, 3, 4, 5])
    assert main(["demo"]) == 4
    assert "demo: FAIL" in capsys.readouterr().out


def test_sweep_six_levels(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(
        ["sweep", "sweep_demo.scn", "--sweep", "5,10,15,20,25,30", "--out", str(out)]
    )
    assert code == 0
    rows = _read(out / "rejections.csv").splitlines()
    assert len(rows) == 7
    assert [int(r.split(",")[0]) for r in rows[1:]] == [5, 10, 15, 20, 25, 30]


def test_sweep_single_level(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "sweep_demo.scn", "--sweep", "5", "--out", str(out)]) == 0
    assert len(_read(out / "rejections.csv").splitlines()) == 2


@pytest.mark.parametrize("levels", ["", "0,5", "10,5", "5,5", "a,b"])
def test_sweep_bad_levels(levels, tmp_path, capsys):
    assert main(["sweep", "sweep_demo.scn", "--sweep", levels]) == 2


def test_sweep_requires_user_bases(capsys):
    assert main(["sweep", "table6_demo.scn", "--sweep", "5"]) == 2


def test_validate_ok(capsys):
    assert main(["validate", "paper_tables.scn"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert [dc["id"] for dc in payload["datacenters"]] == ["DC1", "DC2", "DC3", "DC4"]


def test_validate_shows_ms_normalized_durations(capsys):
    assert main(["validate", "table6_demo.scn"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["horizon_ms"] == 86_400_000.0
    assert payload["jobs"][0]["burst_ms"] == 28_800_000.0


def test_validate_duplicate_datacenter(tmp_path, capsys):
    text = _read_bundled("paper_tables.scn")
    dup = text + "\n[datacenter.DC1]\nvms = 1\nrate = 1\nmemory = 1\nbandwidth = 1\nbandwidth_unit = units_per_ms\n"
    bad = tmp_path / "dup.scn"
    bad.write_text(dup)
    assert main(["validate", str(bad)]) == 2
    assert "duplicate" in capsys.readouterr().err


def _read_bundled(name):
    from dispatchsim.cli import _read_scenario_text

    return _read_scenario_text(name)


def test_scheduler_and_migration_overrides(tmp_path):
    out = tmp_path / "out"
    code = main(
        [
            "run",
            "migration_demo.scn",
            "--migration",
            "off",
            "--scheduler",
            "sjf",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    rows = _read(out / "rejections.csv").splitlines()
    assert rows[1].startswith("8,")
