import csv
import json
import math

import pytest

from cavityqis import cli


def run(tmp_path, command, cfg_text="", *extra, name="c.cfg"):
    cfg = tmp_path / name
    cfg.write_text(cfg_text)
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def report(out, command):
    return json.loads((out / f"{command}_report.json").read_text())


# --- config parsing ---------------------------------------------------------------

def test_parse_config_types_and_comments():
    cfg = cli.parse_config_text("# header\nprotocol = w  # inline\nc = 0.3\nseed = 5\n\n")
    assert cfg.values == {"protocol": "w", "c": 0.3, "seed": 5}


@pytest.mark.parametrize("text, key", [
    ("bogus = 1", "bogus"),
    ("c = abc", "c"),
    ("seed = -1", "seed"),
    ("g = nan", "g"),
    ("protocol", "protocol"),
])
def test_parse_config_errors(text, key):
    with pytest.raises(cli.ConfigError) as info:
        cli.parse_config_text(text)
    assert info.value.key == key


def test_normalization_tolerance():
    with pytest.raises(cli.ConfigError, match="not 1 within"):
        cli.secret_from(cli.parse_config_text("alpha_re = 0.6\nbeta_re = 0.81"))
    cfg = cli.parse_config_text("alpha_re = 0.6\nbeta_re = 0.8000000001")
    s = cli.secret_from(cfg)
    assert abs(s.alpha) ** 2 + abs(s.beta) ** 2 == pytest.approx(1.0, abs=1e-15)
    assert 0 < cfg.renormalized["secret"] < 1e-9


def test_w_coefficients_from_config():
    w = cli.w_from(cli.parse_config_text("c = max"))
    assert w.success_probability == pytest.approx(2 / 3)
    with pytest.raises(cli.ConfigError):
        cli.w_from(cli.parse_config_text("c = 0.7"))
    with pytest.raises(cli.ConfigError, match="not 1 within"):
        cli.w_from(cli.parse_config_text("a = 0.5\nb = 0.5\nc = 0.5"))


def test_plain_serialization():
    assert cli.plain({"z": 1 + 2j, "x": 1 / 3, "s": {"b", "a"}}) == {
        "z": [1.0, 2.0], "x": 0.333333333333, "s": ["a", "b"]}
    assert cli.plain(float("inf")) == "inf"
    with pytest.raises(TypeError):
        cli.plain(object())


# --- run ------------------------------------------------------------------------------

def test_run_ghz(tmp_path):
    code, out = run(tmp_path, "run", "protocol = ghz\nsecret = plus_i\n")
    assert code == 0
    r = report(out, "run")
    assert r["branch_count"] == 8 and r["status"] == "ok"
    assert math.fsum(b["probability"] for b in r["branches"]) == pytest.approx(1.0, abs=1e-10)
    assert all(b["fidelity"] == pytest.approx(1.0, abs=1e-10) for b in r["branches"])
    assert len(r["correction_table"]) == 8
    assert {p.name for p in out.iterdir()} == {"run_report.json", "run_summary.csv", "run_meta.json"}


def test_run_w_max_c(tmp_path):
    code, out = run(tmp_path, "run", "protocol = w\ndesignee = bob\nc = 1/sqrt3\n")
    assert code == 0
    r = report(out, "run")
    assert r["success_probability"] == 0.666666666667
    assert r["stranded"]


def test_run_sampled_requires_seed(tmp_path, capsys):
    code, out = run(tmp_path, "run", "mode = sampled\n")
    assert code == 1
    assert "seed required for sampled mode" in capsys.readouterr().err
    assert not out.exists()


def test_run_sampled_reproducible(tmp_path):
    cfg = "protocol = w\nc = 0.4\nmode = sampled\ntrials = 2000\n"
    code, out = run(tmp_path, "run", cfg, "--seed", "11")
    assert code == 0
    first = (out / "run_report.json").read_bytes()
    first_csv = (out / "run_summary.csv").read_bytes()
    code, out = run(tmp_path, "run", cfg, "--seed", "11")
    assert (out / "run_report.json").read_bytes() == first
    assert (out / "run_summary.csv").read_bytes() == first_csv
    r = json.loads(first)
    assert abs(r["sampled"]["z"]) <= 3
    assert sum(r["sampled"]["outcome_counts"].values()) == 2000


def test_unknown_key_exit(tmp_path, capsys):
    code, _ = run(tmp_path, "run", "protocl = ghz\n")
    assert code == 1
    assert "protocl" in capsys.readouterr().err


def test_bad_arguments_exit(tmp_path):
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert cli.main(["run", "--seed", "-3", "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("fmt, files", [
    ("json", {"run_report.json", "run_meta.json"}),
    ("csv", {"run_summary.csv", "run_meta.json"}),
])
def test_formats(tmp_path, fmt, files):
    code, out = run(tmp_path, "run", "", "--format", fmt)
    assert code == 0
    assert {p.name for p in out.iterdir()} == files
    meta = json.loads((out / "run_meta.json").read_text())
    assert "timestamp" in meta and meta["outputs"] == sorted(files - {"run_meta.json"})


def test_schedule_mismatch_fails(tmp_path):
    # off the reconstruction point the shared correction no longer works
    code, out = run(tmp_path, "run", "lambda_t = 0.5\n")
    assert code == 2
    assert report(out, "run")["status"] == "fail"


# --- validate --------------------------------------------------------------------------

def test_validate_single_point(tmp_path):
    code, out = run(tmp_path, "validate", "ladder = 10:100\nfock_states = 0\nn_max = 2\n")
    assert code == 0
    r = report(out, "validate")
    assert r["trend"] == "insufficient ladder" and r["trend_ok"] is None
    assert r["effective_fock_independent"]
    with open(out / "validate_summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and 0 < float(rows[0]["infidelity"]) < 1e-3


def test_validate_cutoff_too_small(tmp_path, capsys):
    code, _ = run(tmp_path, "validate", "fock_states = 0, 1\nn_max = 2\n")
    assert code == 1
    assert "n_max" in capsys.readouterr().err


def test_validate_bad_ladder(tmp_path):
    assert run(tmp_path, "validate", "ladder = 10-100\n")[0] == 1
    assert run(tmp_path, "validate", "ladder = ,\n")[0] == 1
    assert run(tmp_path, "validate", "ladder = 1:2\ng = 0\n")[0] == 1


# --- sweep --------------------------------------------------------------------------------

def test_sweep_exact(tmp_path):
    code, out = run(tmp_path, "sweep", "c_values = 0.1, 0.3, max\n", "--format", "csv")
    assert code == 0
    with open(out / "sweep_summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["c", "exact", "sampled", "sigma"]
    assert float(rows[-1]["exact"]) == pytest.approx(2 / 3, abs=1e-10)
    assert float(rows[0]["exact"]) == pytest.approx(0.02, abs=1e-10)


def test_sweep_sampled(tmp_path):
    code, out = run(tmp_path, "sweep", "c_values = 0.2, 0.5\nmode = sampled\ntrials = 4000\n", "--seed", "3")
    assert code == 0
    for row in report(out, "sweep")["rows"]:
        assert abs(row["z"]) <= 3 and row["sigma"] > 0


@pytest.mark.parametrize("grid", ["", "0.9", "-0.1", "a"])
def test_sweep_bad_grid(tmp_path, grid):
    assert run(tmp_path, "sweep", f"c_values = {grid}\n")[0] == 1


# --- scenario ---------------------------------------------------------------------------

def test_scenario_no_cooperation(tmp_path):
    code, out = run(tmp_path, "scenario", "scenario = no_cooperation\nsecret = plus\n")
    assert code == 0
    r = report(out, "scenario")
    assert r["exact"]["success_probability"] == pytest.approx(0.5, abs=1e-10)
    assert "caveat" not in r


def test_scenario_degenerate_secret(tmp_path):
    code, out = run(tmp_path, "scenario", "scenario = no_cooperation\nsecret = e\n")
    assert code == 0
    assert "caveat" in report(out, "scenario")


def test_scenario_no_cooperation_sampled(tmp_path):
    code, out = run(tmp_path, "scenario", "mode = sampled\ntrials = 3000\ndesignee = bob\n", "--seed", "8")
    assert code == 0
    assert abs(report(out, "scenario")["sampled"]["z"]) <= 3


def test_scenario_intercept_resend(tmp_path):
    cfg = "scenario = intercept_resend\nfabricated = e\ntrials = 2000\ncheck_fraction = 0.5\n"
    code, out = run(tmp_path, "scenario", cfg, "--seed", "4")
    assert code == 0
    st = report(out, "scenario")["stats"]
    assert st["checked"] > 0 and abs(st["z"]) <= 3
    assert run(tmp_path, "scenario", cfg + "check_fraction = 0\n", "--seed", "4")[0] == 1
    assert run(tmp_path, "scenario", "scenario = intercept_resend\n")[0] == 1
