import csv
import textwrap

import pytest

from capacity_lab import cli
from capacity_lab.cli import ConfigError, fmt, load_config, main, parse_grid


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ------------------------------------------------------------ parsing

def test_parse_grid_forms():
    assert parse_grid("0.1, 0.2,0.5") == [0.1, 0.2, 0.5]
    assert parse_grid("linspace(0, 1, 5)") == pytest.approx([0, 0.25, 0.5, 0.75, 1])
    assert parse_grid("4, 8", integer=True) == [4, 8]


@pytest.mark.parametrize("text", ["", " , ", "0.3, 0.2", "0.1, 0.1", "a, b",
                                  "linspace(0, 1, 0)"])
def test_parse_grid_rejects(text):
    with pytest.raises(ConfigError):
        parse_grid(text)


def test_parse_grid_integer_check():
    with pytest.raises(ConfigError):
        parse_grid("1.5, 2", integer=True)


def test_fmt():
    assert fmt(None) == "" and fmt(float("nan")) == ""
    assert fmt(True) == "true" and fmt(False) == "false"
    assert fmt(3) == "3"
    assert fmt(0.1 + 0.2) == "0.3"


@pytest.mark.parametrize("body", [
    "[rs-profile]\nalpha = 0.5\n",                     # missing rho
    "[rs-profile]\nrho = 0.5\nalpha =\n",               # empty grid
    "[rs-profile]\nrho = 1.5\nalpha = 0.5\n",          # rho out of range
    "[capacity-curve]\nrho = 1.0\n",                   # no capacity at rho = 1
    "[rs-profile]\nrho = 0.5\nalpha = 0.5, 0.4\n",     # not increasing
    "[oracle]\nN = 30\nM = 15\nP = 4\n",               # enumeration guard
    "[simulate]\nN = 8\nalpha = 1\nensemble = gauss\n",
    "[run]\njobs = 0\n[simulate]\nN = 8\nalpha = 1\n",
    "[solver]\ntolerance = -1\n[capacity-curve]\nrho = 0.5\n",
    "[biht]\nL = 0\n[simulate]\nN = 8\nalpha = 1\n",
    "not an ini file",
])
def test_config_errors_exit_one(tmp_path, body, capsys):
    cmd = next((c for c in cli.COMMANDS if f"[{c}]" in body), "simulate")
    p = write(tmp_path, body)
    assert main([cmd, "--config", str(p), "--out", str(tmp_path / "o.csv")]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_missing_file_and_usage_errors(tmp_path):
    assert main(["oracle", "--config", str(tmp_path / "nope.ini")]) == 1
    assert main(["oracle"]) == 1
    assert main(["frobnicate", "--config", "x"]) == 1


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "[simulate]" in capsys.readouterr().out


def test_missing_output_directory(tmp_path):
    p = write(tmp_path, "[capacity-curve]\nrho = 0.5\n")
    assert main(["capacity-curve", "--config", str(p),
                 "--out", str(tmp_path / "no" / "o.csv")]) == 1


def test_cli_overrides(tmp_path):
    p = write(tmp_path, "[run]\nseed = 3\njobs = 2\nout = a.csv\n"
                        "[oracle]\nN = 6\nM = 2\nP = 1\n")
    cfg = load_config(p, "oracle", out=tmp_path / "b.csv", seed=9, jobs=1)
    assert cfg.seed == 9 and cfg.jobs == 1 and cfg.out.name == "b.csv"
    cfg = load_config(p, "oracle")
    assert cfg.seed == 3 and cfg.jobs == 2


# ------------------------------------------------------------ commands

def test_rs_profile_schema_and_partial_exit(tmp_path):
    p = write(tmp_path, "[rs-profile]\nrho = 0.5\nalpha = 0.4, 1.0, 1.2\n")
    out = tmp_path / "rs.csv"
    assert main(["rs-profile", "--config", str(p), "--out", str(out)]) == 2
    rows = read(out)
    assert list(rows[0]) == ["alpha", "regime", "q1", "q0", "chi", "Sigma",
                             "at_margin", "status"]
    assert [r["regime"] for r in rows] == ["subcritical", "critical", "supercritical"]
    assert rows[0]["status"] == "ok" and rows[2]["status"] == "ok"
    assert rows[1]["status"].startswith("error")
    assert float(rows[0]["at_margin"]) < 0
    assert all(rows[i]["q0"] != "" for i in (0, 2)) and rows[1]["q0"] == ""


def test_rs_profile_multi_rho_and_rho_one(tmp_path):
    p = write(tmp_path, "[rs-profile]\nrho = 0.3, 1.0\nalpha = 0.5\n")
    out = tmp_path / "rs.csv"
    assert main(["rs-profile", "--config", str(p), "--out", str(out)]) == 0
    rows = read(out)
    assert list(rows[0])[0] == "rho" and len(rows) == 2
    # at rho = 1 the selection layer is inert: q1 solves the plain perceptron
    assert float(rows[1]["Sigma"]) == pytest.approx(0.0, abs=1e-12)


def test_at_check_schema(tmp_path):
    p = write(tmp_path, "[at-check]\nrho = 0.5\nalpha = 0.6, 1.3\n")
    out = tmp_path / "at.csv"
    assert main(["at-check", "--config", str(p), "--out", str(out)]) == 0
    rows = read(out)
    assert list(rows[0]) == ["rho", "alpha", "regime", "lam", "lam_hat",
                             "at_margin", "at_status", "status"]
    assert rows[0]["at_status"] == "stable"
    assert rows[1]["at_status"] == "marginal"


@pytest.mark.slow
def test_capacity_curve(tmp_path):
    p = write(tmp_path, "[capacity-curve]\nrho = 0.1\n")
    out = tmp_path / "cc.csv"
    assert main(["capacity-curve", "--config", str(p), "--out", str(out)]) == 0
    (row,) = read(out)
    assert float(row["alpha_cg"]) == pytest.approx(0.2)
    assert 0.2 < float(row["alpha_vs"]) < 2.0
    assert abs(float(row["sigma_residual"])) < 1e-8


def test_oracle_rows(tmp_path):
    p = write(tmp_path, "[run]\nseed = 4\n[oracle]\nN = 8\nM = 3\nP = 1, 6, 10\n"
                        "trials = 40\n")
    out = tmp_path / "or.csv"
    assert main(["oracle", "--config", str(p), "--out", str(out)]) == 0
    rows = read(out)
    assert list(rows[0]) == ["rho", "N", "M", "P", "prob_any_subset",
                             "prob_fixed_subset", "status"]
    assert rows[0]["prob_any_subset"] == "1" and rows[0]["prob_fixed_subset"] == "1"
    for r in rows:
        assert float(r["prob_any_subset"]) >= float(r["prob_fixed_subset"])


def test_simulate_outputs(tmp_path):
    p = write(tmp_path, "[run]\nseed = 2\n[simulate]\nN = 16\nalpha = 0.5, 1.0\n"
                        "trials = 6\n")
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", str(p), "--out", str(out)]) == 0
    rows = read(out)
    assert list(rows[0]) == cli.TRIAL_HEADER and len(rows) == 12
    agg = read(tmp_path / "sim_aggregate.csv")
    assert list(agg[0]) == cli.AGG_HEADER and len(agg) == 2
    assert agg[0]["P"] == "8" and agg[1]["P"] == "16"
    assert int(agg[0]["completed"]) == 6


def test_trial_seed_is_pure():
    assert cli.trial_seed(1, 64, 51, 3) == cli.trial_seed(1, 64, 51, 3)
    assert cli.trial_seed(1, 64, 51, 3) != cli.trial_seed(1, 64, 51, 4)


@pytest.mark.parametrize("command,body", [
    ("simulate", "[simulate]\nN = 12\nalpha = 0.8, 1.2\ntrials = 5\n"),
    ("oracle", "[oracle]\nN = 8\nM = 3\nP = 2, 7, 9\ntrials = 20\n"),
])
def test_output_independent_of_jobs(tmp_path, command, body):
    p = write(tmp_path, "[run]\nseed = 7\n" + body)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([command, "--config", str(p), "--out", str(a), "--jobs", "1"]) == 0
    assert main([command, "--config", str(p), "--out", str(b), "--jobs", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main([command, "--config", str(p), "--out", str(b), "--seed", "8"]) == 0
    assert a.read_bytes() != b.read_bytes()
