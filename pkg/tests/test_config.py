import math

import pytest

from polaritonsim.config import (
    DEFAULTS,
    ConfigError,
    load_config,
    params_from_config,
    parse_config,
)


def test_defaults_pass_through():
    cfg = parse_config("")
    assert cfg == DEFAULTS
    assert cfg["n_cavity"] == 14
    assert cfg["theta"] == 0.3
    assert cfg["lock_drive"] is True


def test_parse_basic_syntax():
    text = """
    # run setup
    g = 0.25          # coupling
    theta = 0.5
    n_cavity = 10
    lock_drive = false
    """
    cfg = parse_config(text)
    assert cfg["g"] == 0.25
    assert cfg["theta"] == 0.5
    assert cfg["n_cavity"] == 10
    assert cfg["lock_drive"] is False
    # untouched keys keep defaults
    assert cfg["gamma_a"] == DEFAULTS["gamma_a"]


@pytest.mark.parametrize(
    "line",
    [
        "mystery_knob = 3",
        "g 0.3",
        "g = not_a_number",
        "n_cavity = 2.5",
        "lock_drive = yes",
    ],
)
def test_parse_rejects_bad_lines(line):
    with pytest.raises(ConfigError):
        parse_config(line)


def test_parse_rejects_duplicates():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("g = 0.1\ng = 0.2")


@pytest.mark.parametrize(
    "line",
    [
        "n_cavity = 1",
        "theta = 1.2",
        "theta = -0.1",
        "omega_g = 0",
        "g = -0.2",
        "gamma_a = -1",
        "drive_frequency = 0",
        "omega_0 = -1",
        "sweep_points = 1",
        "tau_points = 1",
        "tau_max = 0",
        "cycle_tol = 0",
        "max_periods = 1",
        "spectrum_levels = 0",
    ],
)
def test_parse_rejects_out_of_range(line):
    with pytest.raises(ConfigError):
        parse_config(line)


def test_error_messages_carry_origin_and_line():
    with pytest.raises(ConfigError, match=r"run\.cfg:2"):
        parse_config("g = 0.1\nbad_key = 1", origin="run.cfg")


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("g = 0.4\ntheta = 0.25\n")
    cfg = load_config(path)
    assert cfg["g"] == 0.4
    assert load_config(None) == DEFAULTS
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")


def test_params_from_config_units_and_override():
    cfg = parse_config("theta = 0.5\ng = 0.3\ndrive_amplitude = 2e-3")
    p = params_from_config(cfg)
    assert p.theta == pytest.approx(0.5 * math.pi)
    assert p.g == 0.3
    assert p.Omega == 2e-3
    assert p.omega_l == cfg["drive_frequency"]
    p2 = params_from_config(cfg, g=0.55)
    assert p2.g == 0.55
    assert p2.theta == p.theta
