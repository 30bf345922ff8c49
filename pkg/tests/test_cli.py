"""Command-line harness: exit codes, outputs, determinism."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from fplab.cli import derive_seed, main

from conftest import FIXTURES

COORD = str(FIXTURES / "coord.game")
SINGLE = str(FIXTURES / "single.game")
ALLSAME = str(FIXTURES / "allsame.game")


def test_validate_ok(capsys):
    assert main(["validate", COORD]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_missing_file(capsys):
    assert main(["validate", "no/such/file.game"]) == 1
    assert capsys.readouterr().err


def test_validate_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.game"
    bad.write_text("players 2\nterminal z payoffs q\n")
    assert main(["validate", str(bad)]) == 1
    assert "E_BAD_NUMBER" in capsys.readouterr().err


def test_validate_semantic_error(tmp_path, capsys):
    broken = tmp_path / "broken.game"
    text = Path(COORD).read_text().replace("terminal zAb payoffs 0\n", "")
    broken.write_text(text)
    assert main(["validate", str(broken)]) == 2
    assert "UNDECLARED_NODE" in capsys.readouterr().err


def test_info_reports_constants(capsys):
    assert main(["info", COORD, "--rho", "0.5", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["k_max"] == 5
    assert payload["lemma1_class"] is True
    assert payload["identical_interest"] is True
    assert payload["l_max"] == 2 and payload["num_terminals"] == 4


def test_info_degenerate_payoffs(capsys):
    assert main(["info", ALLSAME, "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["k_max"] is None
    assert payload["distinct_payoffs"] is False


def test_info_text_renders_na(capsys):
    assert main(["info", ALLSAME]) == 0
    assert "k_max: n/a" in capsys.readouterr().out


def test_equilibria_coord(capsys):
    assert main(["equilibria", COORD, "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert [(e["terminal"], e["payoffs"][0]) for e in payload] == [
        ("zAa", 3.0),
        ("zBb", 2.0),
    ]


def test_equilibria_single(capsys):
    assert main(["equilibria", SINGLE, "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload) == 1 and payload[0]["terminal"] == "z1"


def test_equilibria_too_large(capsys):
    assert main(["equilibria", COORD, "--max-profiles", "3"]) == 2
    assert "TOO_LARGE" in capsys.readouterr().err


def test_run_classic_rejects_rho(tmp_path, capsys):
    code = main(
        ["run", COORD, "--mode", "classic", "--rounds", "10",
         "--rho", "0.5", "--out", str(tmp_path)]
    )
    assert code == 3
    assert "rho" in capsys.readouterr().err


def test_run_classic_rejects_events(tmp_path, capsys):
    code = main(
        ["run", COORD, "--mode", "classic", "--rounds", "10",
         "--events", "--out", str(tmp_path)]
    )
    assert code == 3
    assert "events" in capsys.readouterr().err


def test_run_ifm_requires_rho(tmp_path, capsys):
    code = main(
        ["run", COORD, "--mode", "ifm", "--rounds", "10",
         "--alpha", "0.5", "--out", str(tmp_path)]
    )
    assert code == 3
    assert "rho" in capsys.readouterr().err


def test_run_outputs_and_determinism(tmp_path):
    args = [
        "run", COORD, "--mode", "ifm", "--rounds", "200", "--reps", "2",
        "--seed", "7", "--rho", "0.3", "--alpha", "0.5", "--gap-every", "50",
        "--stability-window", "50", "--no-figures",
    ]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    for rep in (1, 2):
        t1 = (out1 / f"trace_{rep:04d}.csv").read_bytes()
        t2 = (out2 / f"trace_{rep:04d}.csv").read_bytes()
        assert t1 == t2
    s1 = json.loads((out1 / "summary.json").read_text())
    s2 = json.loads((out2 / "summary.json").read_text())
    out_echo = s1["config"].pop("out")
    assert out_echo == str(out1)
    s2["config"].pop("out")
    assert s1 == s2
    header = (out1 / "trace_0001.csv").read_text().splitlines()[0]
    assert header == "round,terminal,path,max_gap,event_flags"
    row = (out1 / "trace_0001.csv").read_text().splitlines()[1]
    assert row.startswith("1,") and "h1=" in row and "/h2=" in row
    assert s1["config"]["mode"] == "ifm"
    assert s1["config"]["seed"] == 7
    assert s1["aggregate"]["absorbed_fraction"] == 1.0
    assert set(s1["aggregate"]["terminal_distribution"]) <= {"zAa", "zBb"}
    assert len(s1["per_rep"]) == 2


def test_run_renders_figures(tmp_path, capsys):
    code = main(
        ["run", COORD, "--mode", "ifm", "--rounds", "100", "--reps", "2",
         "--seed", "3", "--rho", "0.3", "--alpha", "0.5", "--gap-every", "10",
         "--stability-window", "20", "--out", str(tmp_path)]
    )
    assert code == 0
    assert (tmp_path / "absorption.png").exists()
    assert (tmp_path / "gaps.png").exists()


def test_run_event_annotation(tmp_path):
    code = main(
        ["run", COORD, "--mode", "ifm", "--rounds", "120", "--reps", "1",
         "--seed", "1", "--rho", "0.3", "--alpha", "0.5", "--events",
         "--stability-window", "50", "--no-figures", "--out", str(tmp_path)]
    )
    assert code == 0
    text = (tmp_path / "trace_0001.csv").read_text()
    assert "E" in text.splitlines()[1].split(",")[4]


def test_run_explicit_init_profile(tmp_path):
    profile = tmp_path / "f1.json"
    profile.write_text(
        json.dumps({"h1": {"A": 0.9, "B": 0.1}, "h2": {"a": 0.9, "b": 0.1}})
    )
    code = main(
        ["run", COORD, "--mode", "classic", "--rounds", "10", "--reps", "1",
         "--init", str(profile), "--no-figures",
         "--out", str(tmp_path / "out")]
    )
    assert code == 0


def test_run_bad_init_profile(tmp_path, capsys):
    profile = tmp_path / "f1.json"
    profile.write_text(json.dumps({"h1": {"A": 0.9, "B": 0.3}}))
    code = main(
        ["run", COORD, "--mode", "classic", "--rounds", "10",
         "--init", str(profile), "--no-figures", "--out", str(tmp_path / "out")]
    )
    assert code == 3


def test_diagnose(tmp_path, capsys):
    profile = tmp_path / "snap.json"
    profile.write_text(
        json.dumps({"h1": {"A": 0.99, "B": 0.01}, "h2": {"a": 0.99, "b": 0.01}})
    )
    code = main(
        ["diagnose", COORD, "--profile", str(profile), "--terminal", "zAa",
         "--rho", "0.5", "--alpha", "0.5", "--l-cap", "50", "--m-cap", "100",
         "--json"]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["k_max"] == 5
    assert payload["p_min"] == pytest.approx(2.0**-208, rel=1e-12)
    assert payload["lock_level"] == ">= 50"
    assert payload["limit_locked"] is True
    assert payload["m_t"] == ">= 100"
    assert payload["k_t"] == 0


def test_diagnose_degenerate(tmp_path, capsys):
    profile = tmp_path / "snap.json"
    profile.write_text(
        json.dumps({"h1": {"A": 0.5, "B": 0.5}, "h2": {"a": 0.5, "b": 0.5}})
    )
    code = main(["diagnose", ALLSAME, "--profile", str(profile)])
    assert code == 2


def test_derive_seed_stateless():
    assert derive_seed(7, 1) == derive_seed(7, 1)
    assert derive_seed(7, 1) != derive_seed(7, 2)
    assert derive_seed(8, 1) != derive_seed(7, 1)
