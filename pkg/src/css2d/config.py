"""Flat key-value run configuration.

Format: one ``section.key = value`` per line, ``#`` starts a comment, blank
lines ignored.  Unknown keys and malformed lines raise ConfigError with the
line number.  Keys under ``data.`` other than ``data.preset`` and
``data.snapshot`` are passed through as preset parameters.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class RunConfig:
    n_points: int = 64
    side_length: float = 20.0
    dt: float = 2e-3
    T: float = 0.5
    scheme: str = "rk4"
    kappa: float = 1.0
    m_bound: float = 1.0
    preset: str = "bump"
    preset_params: dict = field(default_factory=dict)
    snapshot: str | None = None
    raw_profile: str | None = None
    out_dir: str = "out"
    snapshot_stride: int = 0       # 0: only final snapshot
    diagnostics_stride: int = 10
    s: float = 1.1
    rng_seed: int = 0

    def validate(self):
        if self.n_points < 8 or (self.n_points & (self.n_points - 1)) != 0:
            raise ConfigError(f"grid.n_points must be a power of two >= 8, got {self.n_points}")
        if self.side_length <= 0:
            raise ConfigError("grid.side_length must be positive")
        if self.dt <= 0:
            raise ConfigError("time.dt must be positive")
        if self.T <= 0:
            raise ConfigError("time.T must be positive")
        if self.scheme not in ("rk4", "trig"):
            raise ConfigError(f"time.scheme must be rk4 or trig, got {self.scheme!r}")
        if self.kappa <= 0:
            raise ConfigError("physics.kappa must be positive")
        if not 1.0 / (2.0 * self.kappa**2) <= self.m_bound:
            raise ConfigError(
                f"physics: need 1/(2 kappa^2) <= m_bound, got "
                f"{1.0 / (2.0 * self.kappa**2):g} > {self.m_bound:g}")
        if self.diagnostics_stride < 1:
            raise ConfigError("output.diagnostics_stride must be >= 1")
        if self.snapshot_stride < 0:
            raise ConfigError("output.snapshot_stride must be >= 0")
        if self.s <= 1.0:
            warnings.warn(
                f"norms.s = {self.s} is at or below the well-posedness regime s > 1; "
                "continuing (near-critical exploration)", stacklevel=2)
        return self


_INT_KEYS = {"grid.n_points": "n_points", "output.snapshot_stride": "snapshot_stride",
             "output.diagnostics_stride": "diagnostics_stride", "seeds.rng_seed": "rng_seed"}
_FLOAT_KEYS = {"grid.side_length": "side_length", "time.dt": "dt", "time.T": "T",
               "physics.kappa": "kappa", "physics.m_bound": "m_bound", "norms.s": "s"}
_STR_KEYS = {"time.scheme": "scheme", "data.preset": "preset", "data.snapshot": "snapshot",
             "data.raw_profile": "raw_profile", "output.directory": "out_dir"}


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                setattr(cfg, _INT_KEYS[key], int(value))
            elif key in _FLOAT_KEYS:
                setattr(cfg, _FLOAT_KEYS[key], float(value))
            elif key in _STR_KEYS:
                setattr(cfg, _STR_KEYS[key], value)
            elif key.startswith("data."):
                cfg.preset_params[key[len("data."):]] = float(value)
            else:
                raise ConfigError(f"unknown key {key!r}", lineno)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from exc
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text)
