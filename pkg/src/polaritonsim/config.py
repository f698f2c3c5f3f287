"""Flat key = value run configuration.

One assignment per line, ``#`` starts a comment, blank lines are
ignored.  Every key must be known; unknown keys abort the run rather
than being silently dropped.  Frequencies and rates are in units of the
cavity frequency, the coupling angle ``theta`` is in units of pi, and
delay times are in units of the inverse cavity frequency.
"""

from __future__ import annotations

import math
from pathlib import Path

from .model import SystemParams

__all__ = ["ConfigError", "DEFAULTS", "parse_config", "load_config", "params_from_config"]


class ConfigError(ValueError):
    """Malformed, unknown, or out-of-range configuration input."""


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    raise ValueError(f"expected true or false, got {text!r}")


# key -> (type parser, default).  A None default means "decided at run
# time" (documented per command).
_SCHEMA: dict[str, tuple] = {
    # system
    "n_cavity": (int, 14),
    "omega_g": (float, 1.0),
    "g": (float, 0.6),
    "theta": (float, 0.3),              # units of pi
    "gamma_a": (float, 1e-2),
    "gamma_sigma": (float, 1e-2),
    "drive_amplitude": (float, 1e-3),
    "drive_frequency": (float, 1.0),    # used only when lock_drive = false
    "lock_drive": (_parse_bool, True),
    "omega_0": (float, None),           # defaults to the cavity frequency
    # sweep axes (meaning depends on the command)
    "sweep_start": (float, None),
    "sweep_stop": (float, None),
    "sweep_points": (int, None),
    "spectrum_levels": (int, 8),
    # delay maps
    "sc_g": (float, 0.08),
    "usc_g": (float, 0.6),
    "tau_max": (float, 800.0),          # units of 1/omega_c
    "tau_points": (int, 64),
    # limit cycle
    "cycle_tol": (float, 1e-9),
    "max_periods": (int, 6000),
}

DEFAULTS = {key: default for key, (_, default) in _SCHEMA.items()}


def parse_config(text: str, origin: str = "<config>") -> dict:
    """Parse config text into a fully defaulted dict.

    Raises :class:`ConfigError` on unknown keys, bad syntax, or values
    that fail to parse.
    """
    values = dict(DEFAULTS)
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        parser = _SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value for {key}: {exc}") from None
    _validate(values, origin)
    return values


def load_config(path: str | Path | None) -> dict:
    """Load a config file, or just the defaults when no path is given."""
    if path is None:
        return dict(DEFAULTS)
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config(text, origin=str(p))


def _validate(cfg: dict, origin: str) -> None:
    if cfg["n_cavity"] < 2:
        raise ConfigError(f"{origin}: n_cavity must be >= 2")
    if not 0.0 <= cfg["theta"] <= 1.0:
        raise ConfigError(f"{origin}: theta is in units of pi and must lie in [0, 1]")
    for key in ("omega_g", "drive_frequency"):
        if cfg[key] <= 0:
            raise ConfigError(f"{origin}: {key} must be positive")
    for key in ("g", "gamma_a", "gamma_sigma", "drive_amplitude", "sc_g", "usc_g"):
        if cfg[key] is not None and cfg[key] < 0:
            raise ConfigError(f"{origin}: {key} must be non-negative")
    if cfg["omega_0"] is not None and cfg["omega_0"] <= 0:
        raise ConfigError(f"{origin}: omega_0 must be positive")
    if cfg["sweep_points"] is not None and cfg["sweep_points"] < 2:
        raise ConfigError(f"{origin}: sweep_points must be >= 2")
    if cfg["tau_points"] < 2:
        raise ConfigError(f"{origin}: tau_points must be >= 2")
    if cfg["tau_max"] <= 0:
        raise ConfigError(f"{origin}: tau_max must be positive")
    if cfg["cycle_tol"] <= 0:
        raise ConfigError(f"{origin}: cycle_tol must be positive")
    if cfg["max_periods"] < 2:
        raise ConfigError(f"{origin}: max_periods must be >= 2")
    if cfg["spectrum_levels"] < 1:
        raise ConfigError(f"{origin}: spectrum_levels must be >= 1")


def params_from_config(cfg: dict, g: float | None = None) -> SystemParams:
    """Build :class:`SystemParams` from a config dict.

    ``g`` overrides the configured coupling (sweeps call this per point).
    The drive frequency is the configured one; resonance locking happens
    at the point where the dressed energies are known.
    """
    return SystemParams(
        g=cfg["g"] if g is None else g,
        theta=cfg["theta"] * math.pi,
        omega_g=cfg["omega_g"],
        gamma_a=cfg["gamma_a"],
        gamma_sigma=cfg["gamma_sigma"],
        Omega=cfg["drive_amplitude"],
        omega_l=cfg["drive_frequency"],
        omega_0=cfg["omega_0"],
    )
