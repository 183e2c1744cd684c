import dataclasses
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adobs.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, cmd_verify, format_config, main, parse_config, write_csv
from adobs.densemat import adjugate_det
from adobs.engine import ScenarioConfig, run_scenario
from adobs.errors import ConfigParseError, ConfigurationError

from conftest import short_config


def test_empty_config_gives_defaults():
    cfg = parse_config("")
    default = ScenarioConfig()
    assert cfg.theta_true == (1.0, 1.0, -1.0)
    assert cfg.x0 == (-1.0, 0.0, 2.0)
    assert cfg.gpebo.k_gain == (3.0, 3.0, 1.0)
    assert cfg.gpebo.k_amp == 1e7 and cfg.gpebo.sigma == 5.0
    assert (cfg.est.rho, cfg.est.gamma0, cfg.est.gamma1) == (0.1, 1e-4, 1.0)
    assert (cfg.t_end, cfg.h, cfg.log_every) == (default.t_end, default.h, default.log_every)


def test_config_file_with_comments_and_vectors():
    text = """
    # a comment line
    theta_true = 2, 0.5, -1   # trailing comment
    sigma = 3
    log_every = 20
    """
    cfg = parse_config(text)
    assert cfg.theta_true == (2.0, 0.5, -1.0)
    assert cfg.gpebo.sigma == 3.0
    assert cfg.log_every == 20


def test_overrides_win_over_file():
    cfg = parse_config("sigma = 3\n", overrides=["sigma=4", "theta_true=1.5,1,-1"])
    assert cfg.gpebo.sigma == 4.0
    assert cfg.theta_true == (1.5, 1.0, -1.0)


def test_negative_sigma_names_key():
    with pytest.raises(ConfigurationError) as exc:
        parse_config("sigma = -1\n")
    assert exc.value.key == "sigma"


def test_zero_theta_component_names_key():
    with pytest.raises(ConfigurationError) as exc:
        parse_config("theta_true = 1, 0, -1\n")
    assert exc.value.key == "theta_true"


@pytest.mark.parametrize(
    "text, line, key",
    [
        ("sigma = 5\nk_amp = 1e7x\n", 2, "k_amp"),
        ("\n\nx0 = 1, , 2\n", 3, "x0"),
        ("log_every = 2.5\n", 1, "log_every"),
        ("rho 0.1\n", 1, None),
        ("bogus = 1\n", 1, "bogus"),
        ("rho = 1\nrho = 2\n", 2, "rho"),
    ],
)
def test_parse_errors_carry_line(text, line, key):
    with pytest.raises(ConfigParseError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert exc.value.key == key
    assert f"line {line}" in str(exc.value)


def test_bad_override():
    with pytest.raises(ConfigParseError):
        parse_config("", overrides=["sigma"])
    with pytest.raises(ConfigParseError):
        parse_config("", overrides=["nope=1"])


finite = st.floats(0.1, 1e3, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(
    theta=st.tuples(finite, finite, finite),
    sigma=finite,
    k_amp=st.floats(1.0, 1e30),
    h=st.floats(1e-6, 1e-2),
    log_every=st.integers(1, 1000),
)
def test_format_parse_round_trip(theta, sigma, k_amp, h, log_every):
    text = (
        f"theta_true = {theta[0]!r}, {theta[1]!r}, {-theta[2]!r}\n"
        f"sigma = {sigma!r}\nk_amp = {k_amp!r}\nh = {h!r}\nlog_every = {log_every}\n"
    )
    cfg = parse_config(text)
    again = parse_config(format_config(cfg))
    assert again == cfg
    assert format_config(again) == format_config(cfg)
    assert again.theta_true == cfg.theta_true
    assert again.gpebo.k_amp == k_amp and again.h == h


def test_csv_layout(tmp_path):
    sim = run_scenario(short_config(t_end=0.01, log_every=100))
    path = tmp_path / "out.csv"
    write_csv(sim, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").split("\n")
    assert lines[-1] == ""
    assert lines[0] == (
        "t,x1,x2,x3,xhat1,xhat2,xhat3,thab1,thab2,thab3,l1,l2,l3,"
        "delta,m_theta,m_ab,m_l,y,u,y_tilde,x_err_norm,alpha"
    )
    body = lines[1:-1]
    assert len(body) == len(sim) == 2
    values = np.array([[float(v) for v in line.split(",")] for line in body])
    assert np.array_equal(values, sim.table())
    assert values[0, 0] == 0.0 and values[-1, 0] == pytest.approx(0.01)


def test_cli_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(["run", "--out", str(out), "--set", "t_end=0.02", "--set", "log_every=10"])
    assert code == EXIT_OK
    assert "wrote 21 rows" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) == 22


def test_cli_run_from_config_file(tmp_path):
    conf = tmp_path / "c.conf"
    conf.write_text("t_end = 0.01\nlog_every = 50\n")
    out = tmp_path / "run.csv"
    assert main(["run", "--config", str(conf), "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 4


def test_cli_usage_errors(tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    assert main(["run", "--out", out, "--set", "sigma=-1"]) == EXIT_USAGE
    assert "sigma" in capsys.readouterr().err
    assert main(["run", "--out", out, "--set", "k_amp=abc"]) == EXIT_USAGE
    assert main(["run", "--out", out, "--config", str(tmp_path / "missing.conf")]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_cli_runtime_failure_exit_code(tmp_path, capsys):
    """An unwritable output path is a runtime failure, not a usage error."""
    out = str(tmp_path / "no" / "such" / "dir.csv")
    assert main(["run", "--out", out, "--set", "t_end=0.01"]) == EXIT_FAIL
    assert capsys.readouterr().err


def test_cli_excitation(capsys):
    code = main(["excitation", "--window", "0:0.5", "--set", "t_end=0.5"])
    assert code == EXIT_OK
    text = capsys.readouterr().out
    assert "lambda_min" in text and "window [0, 0.5]" in text


def test_cli_excitation_window_outside_horizon(capsys):
    assert main(["excitation", "--window", "0:5", "--set", "t_end=1"]) == EXIT_USAGE


def test_verify_passes(capsys):
    code = cmd_verify(cfg=ScenarioConfig(t_end=3.5), out=io.StringIO())
    assert code == EXIT_OK


def test_verify_reports_broken_adjugate():
    def broken(m):
        adj, d = adjugate_det(m)
        return adj, d * (1.0 + 1e-3)

    out = io.StringIO()
    code = cmd_verify(adjugate=broken, cfg=ScenarioConfig(t_end=3.5), out=out)
    assert code == EXIT_FAIL
    text = out.getvalue()
    assert "FAIL adjugate identity" in text
    assert "PASS cascade round-trip" in text


def test_verify_output_lines():
    out = io.StringIO()
    cmd_verify(cfg=ScenarioConfig(t_end=3.5), out=out)
    lines = out.getvalue().splitlines()
    names = [line.split(":")[0] for line in lines if line.startswith(("PASS", "FAIL", "INFO"))]
    assert names == [
        "PASS adjugate identity",
        "PASS jacobi extremes",
        "PASS cascade round-trip",
        "PASS eigen-placement",
        "PASS heterogeneity scaling",
        "PASS mixing residual",
        "PASS finite excitation",
        "INFO dead zone",
    ]
    assert math.isfinite(float(lines[-2].split("max Delta = ")[1].split()[0]))


def test_partial_override_keeps_rest():
    cfg = parse_config("theta_true = 2,3,5\n")
    default = ScenarioConfig()
    assert cfg.theta_true == (2.0, 3.0, 5.0)
    assert cfg.x0 == default.x0 and cfg.gpebo.sigma == default.gpebo.sigma


def test_one_row_log_gives_two_lines(tmp_path):
    sim = run_scenario(short_config(t_end=0.01, log_every=100))
    one = dataclasses.replace(
        sim,
        **{
            f.name: getattr(sim, f.name)[:1]
            for f in dataclasses.fields(sim)
            if isinstance(getattr(sim, f.name), np.ndarray)
        },
    )
    path = tmp_path / "one.csv"
    write_csv(one, path)
    assert path.read_text(encoding="utf-8").count("\n") == 2


def test_cli_verify_exit_zero(capsys):
    assert main(["verify"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert out.count("PASS ") == 7
