"""INI experiment configuration with validation and a resolved echo.

Sections and keys (all optional; missing keys take the defaults below)::

    [model]   d_a, d_b, mass, omega, lambda, alpha, scramble, scramble_seed
    [sweep]   seed, n_samples, step_sigma, walk_mode, time_mode, qml_guard,
              state_width, aggregate, descent, n_jobs
    [cpo]     n_restarts, max_iters, tol
    [output]  directory, emit_plots

``lambda`` and ``alpha`` accept ``auto``.  Unknown sections or keys are
errors, reported with their line number.
"""

from __future__ import annotations

import configparser
import io
import os
import re
from dataclasses import dataclass

from .mereology import OscillatorModel, SweepConfig

OUTPUT_ENV = "QMEREOLOGY_OUTPUT_DIR"

DEFAULTS = {
    "model": {"d_a": "5", "d_b": "5", "mass": "9.0", "omega": "0.3333333333333333",
              "lambda": "auto", "alpha": "auto", "scramble": "0.0", "scramble_seed": "0"},
    "sweep": {"seed": "0", "n_samples": "50", "step_sigma": "0.05", "walk_mode": "cumulative",
              "time_mode": "coefficient", "qml_guard": "2.0", "state_width": "0.0",
              "aggregate": "mean_of_max", "descent": "false", "n_jobs": "1"},
    "cpo": {"n_restarts": "8", "max_iters": "200", "tol": "1e-12"},
    "output": {"directory": "qmereology-output", "emit_plots": "false"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the location when known."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: OscillatorModel
    sweep: SweepConfig
    scramble: float
    scramble_seed: int
    n_jobs: int
    output_dir: str
    emit_plots: bool
    resolved: dict

    def to_ini(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_dict(self.resolved)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _line_of(text, section, key=None):
    """1-based line number of a section header or of a key inside it."""
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section:
            m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
            if m and m.group(1).strip().lower() == key:
                return n
    return None


def _where(text, section, key=None):
    n = _line_of(text, section, key) if text else None
    loc = f"[{section}]" + (f" {key}" if key else "")
    return f"line {n}: {loc}" if n else loc


def _convert(text, section, key, raw, kind):
    try:
        if kind is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind is float:
            return float(raw)
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "auto_float":
            return None if raw.strip().lower() == "auto" else float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{_where(text, section, key)}: invalid value {raw!r}") from None


KINDS = {
    "model": {"d_a": int, "d_b": int, "mass": float, "omega": float, "lambda": "auto_float",
              "alpha": "auto_float", "scramble": float, "scramble_seed": int},
    "sweep": {"seed": int, "n_samples": int, "step_sigma": float, "walk_mode": str,
              "time_mode": str, "qml_guard": float, "state_width": float, "aggregate": str,
              "descent": bool, "n_jobs": int},
    "cpo": {"n_restarts": int, "max_iters": int, "tol": float},
    "output": {"directory": str, "emit_plots": bool},
}


def load_config(path=None, text=None):
    """Parse a config file (or string) into an :class:`ExperimentConfig`.

    Raises :class:`ConfigError` with line information on any problem.  The
    output directory is overridden by ``$QMEREOLOGY_OUTPUT_DIR`` when set.
    """
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    text = text or ""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"{_where(text, section)}: unknown section")
        for key in cp[section]:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{_where(text, section, key)}: unknown key")

    resolved = {s: dict(keys) for s, keys in DEFAULTS.items()}
    values = {}
    for section, keys in DEFAULTS.items():
        values[section] = {}
        for key in keys:
            raw = cp.get(section, key, fallback=keys[key]) if cp.has_section(section) else keys[key]
            resolved[section][key] = raw.strip()
            values[section][key] = _convert(text, section, key, raw, KINDS[section][key])

    env_dir = os.environ.get(OUTPUT_ENV)
    if env_dir:
        values["output"]["directory"] = env_dir
        resolved["output"]["directory"] = env_dir

    m, sw, c = values["model"], values["sweep"], values["cpo"]
    for key in ("d_a", "d_b"):
        d = m[key]
        if d < 3 or d % 2 == 0:
            raise ConfigError(f"{_where(text, 'model', key)}: odd dimension >= 3 required, got {d}")
    if m["d_a"] * m["d_b"] > 81:
        raise ConfigError(f"{_where(text, 'model')}: d_a * d_b = {m['d_a'] * m['d_b']} "
                          "exceeds the supported 81")
    for key in ("mass", "omega"):
        if not m[key] > 0:
            raise ConfigError(f"{_where(text, 'model', key)}: must be positive")
    if m["alpha"] is not None and not m["alpha"] > 0:
        raise ConfigError(f"{_where(text, 'model', 'alpha')}: must be positive")
    if m["scramble"] < 0:
        raise ConfigError(f"{_where(text, 'model', 'scramble')}: must be nonnegative")
    if sw["n_jobs"] == 0:
        raise ConfigError(f"{_where(text, 'sweep', 'n_jobs')}: must be nonzero")
    model = OscillatorModel(d=m["d_a"], d_b=m["d_b"], mass=m["mass"], omega=m["omega"],
                            lam=m["lambda"], alpha=m["alpha"])
    try:
        sweep = SweepConfig(seed=sw["seed"], n_samples=sw["n_samples"], step_sigma=sw["step_sigma"],
                            walk_mode=sw["walk_mode"], state_width=sw["state_width"],
                            time_mode=sw["time_mode"], qml_guard=sw["qml_guard"],
                            aggregate=sw["aggregate"], n_restarts=c["n_restarts"],
                            max_iters=c["max_iters"], tol=c["tol"], descent=sw["descent"])
    except ValueError as exc:
        name = str(exc).split()[0]
        section = "cpo" if name in KINDS["cpo"] else "sweep"
        key = name if name in KINDS[section] else None
        raise ConfigError(f"{_where(text, section, key)}: {exc}") from None
    return ExperimentConfig(model=model, sweep=sweep, scramble=m["scramble"],
                            scramble_seed=m["scramble_seed"], n_jobs=sw["n_jobs"],
                            output_dir=values["output"]["directory"],
                            emit_plots=values["output"]["emit_plots"], resolved=resolved)
