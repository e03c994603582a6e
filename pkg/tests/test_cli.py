import csv
import json
import re

import pytest

from maxwell_morawetz import cli
from maxwell_morawetz.checkpoint import read_checkpoint
from maxwell_morawetz.config import ConfigError, RunConfig, parse_config
from maxwell_morawetz.runner import CSV_COLUMNS

SMALL = """
n_points = 513   # grid intervals + 1
t_final = 10
output_dt = 2
l_max = 1
"""


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# --- configuration ---------------------------------------------------------


def test_empty_config_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert (cfg.mass, cfg.l_max, cfg.t_final) == (1.0, 2, 100.0)


def test_comments_and_overrides():
    cfg = parse_config("# header\nmass = 2  # heavier\nmodes = 1:0, 2:-1\n", {"threads": "3"})
    assert cfg.mass == 2.0 and cfg.threads == 3
    assert cfg.mode_pairs() == [(1, 0), (2, -1)]
    assert parse_config("amp2 = -0.5+1j").amp2 == complex(-0.5, 1)


@pytest.mark.parametrize(
    "text,key",
    [
        ("mass = -1", "mass"),
        ("cfl = 0.9", "cfl"),
        ("n_points = ten", "n_points"),
        ("colour = red", "colour"),
        ("family = dust", "family"),
        ("modes = 0:0", "modes"),
        ("modes = 1", "modes"),
        ("r_star_min = -5", "r_star_min"),
        ("center = 500", "center"),
        ("checkpoint = maybe", "checkpoint"),
        ("just some words", "just some words"),
    ],
)
def test_rejected_configs_name_the_key(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    msg = str(err.value)
    assert err.value.key == key
    assert msg.startswith(f"config error: {key}:") and "\n" not in msg


def test_resolution_scale():
    cfg = parse_config("n_points = 101")
    assert cfg.scaled(2).n_points == 201
    with pytest.raises(ConfigError):
        cfg.scaled(0)


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as ex:
        cli.main(["--help"])
    assert ex.value.code == 0
    out = capsys.readouterr().out
    assert "t_final = 100.0" in out and "coulomb-check" in out


# --- exit codes ---------------------------------------------------------


def test_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["evolve", "--config", _write(tmp_path, "mass = -1")]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err.strip()
    assert err == "config error: mass: must be positive, got -1.0"
    assert cli.main(["evolve", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG


def test_evolve_writes_csv_and_checkpoint(tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["evolve", "--config", _write(tmp_path, SMALL), "--out-dir", str(out)])
    assert code == cli.EXIT_OK, capsys.readouterr().err
    with open(out / "diagnostics.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 1 + 6
    num = re.compile(r"^-?\d\.\d{16}e[+-]\d{2}$|^nan$")
    for row in rows[1:]:
        assert all(num.match(v) for v in row), row
    assert float(rows[-1][0]) == 10.0
    states = read_checkpoint(out / "final.chk")
    assert [(s.l, s.m) for s in states] == [(1, -1), (1, 0), (1, 1)]
    assert "morawetz ratio" in capsys.readouterr().out


def test_evolve_is_deterministic_across_threads(tmp_path):
    cfg = _write(tmp_path, SMALL)
    cli.main(["evolve", "--config", cfg, "--out-dir", str(tmp_path / "a"), "--threads", "1"])
    cli.main(["evolve", "--config", cfg, "--out-dir", str(tmp_path / "b"), "--threads", "3"])
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()


def test_evolve_assertion_failure_exit_code(tmp_path, capsys):
    # an absurdly tight drift tolerance must trip the invariant check
    text = SMALL + "drift_tol = 1e-300\n"
    code = cli.main(["evolve", "--config", _write(tmp_path, text), "--out-dir", str(tmp_path / "o")])
    assert code == cli.EXIT_ASSERT
    assert "energy drift" in capsys.readouterr().err


def test_l_max_flag(tmp_path):
    out = tmp_path / "o"
    cli.main(["evolve", "--config", _write(tmp_path, SMALL), "--l-max", "2", "--out-dir", str(out)])
    assert len(read_checkpoint(out / "final.chk")) == 8


def test_coulomb_check_passes(tmp_path, capsys):
    code = cli.main(["coulomb-check", "--out-dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == cli.EXIT_OK
    assert "steps            1000" in out and out.strip().endswith("coulomb-check PASS")


def test_coulomb_family_evolve(tmp_path):
    text = "family = coulomb\nq_E = 1\nq_B = 1\nn_points = 257\nt_final = 5\n"
    assert cli.main(["evolve", "--config", _write(tmp_path, text), "--out-dir", str(tmp_path)]) == cli.EXIT_OK


def test_certify_subcommand(tmp_path, capsys):
    code = cli.main(["certify", "--out-dir", str(tmp_path), "--threads", "2"])
    assert code == cli.EXIT_OK
    data = json.loads((tmp_path / "certificates.json").read_text())
    assert all(entry["verdict"] == "certified" for entry in data)
    assert (tmp_path / "certificates.txt").read_text().count("\n") == len(data)
    assert f"{len(data)}/{len(data)} certified" in capsys.readouterr().out


# --- convergence -----------------------------------------------------------


def test_richardson_order():
    assert cli.richardson_order((16.0, 1.0, 1 / 16)) == pytest.approx(4.0)
    assert cli.richardson_order((0.0, 0.0, 0.0)) is None
    assert cli.richardson_order((1.0, 2.0, 1.0)) is None
    assert cli.richardson_order((1.0, float("nan"), 0.0)) is None


def test_converge_on_zero_data_reports_na(tmp_path, capsys):
    text = "amp0 = 0\namp2 = 0\nn_points = 129\nt_final = 2\nl_max = 1\nmodes = 1:0\nwidth = 8\n"
    assert cli.main(["converge", "--config", _write(tmp_path, text), "--out-dir", str(tmp_path)]) == 0
    table = (tmp_path / "convergence.txt").read_text().splitlines()
    assert len(table) == 5
    assert all(line.split()[-1] == "n/a" for line in table[1:])


def test_converge_underresolved_warns(tmp_path, capsys):
    text = "n_points = 129\nt_final = 2\nmodes = 1:0\namp2 = -1\n"
    assert cli.main(["converge", "--config", _write(tmp_path, text), "--out-dir", str(tmp_path)]) == 0
    cap = capsys.readouterr()
    assert "warning: pulse width" in cap.err
    assert "unclaimed" in cap.out


def test_converge_resolved_energy_order(tmp_path, capsys):
    text = "n_points = 513\nt_final = 80\noutput_dt = 10\nmodes = 1:0\namp2 = -1\nwidth = 4\n"
    assert cli.main(["converge", "--config", _write(tmp_path, text), "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr()
    assert "warning" not in out.err
    rows = {line.split()[0]: line.split() for line in out.out.splitlines()[1:]}
    assert float(rows["energy_drift"][-1]) == pytest.approx(4.0, abs=0.2)
    assert float(rows["flux_balance"][-1]) == pytest.approx(4.0, abs=0.2)
