"""Run configuration: a flat ``key = value`` file with command-line overrides.

Recognised keys (unknown keys are an error)::

    mode               theoretical | resolvable
    A, C3              construction constants (A >= 2)
    C2_guess, T        growth constant and horizon used to choose s / C4
    precision          decimal digits for theoretical constants (>= 50)
    n                  grid points per direction (power of two >= 32)
    initial            omega0 | eigenfunction | random
    delta, delta1, s   resolvable-mode construction parameters
    cfl_number, max_dt, t_end, snapshot_interval, dealias, filter, blowup_factor
    checkpoint_every   snapshots between checkpoints
    output             output directory
    seed               RNG seed for ``initial = random``
    acknowledge_unresolved   allow delta < 8h or s < 2h
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

SIMULATION_KEYS = {"n", "t_end"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "resolvable"
    A: float = 2.0
    C3: float = 1.0
    C2_guess: float = 1.0
    T: float = 1.0
    precision: int = 50
    n: int = 256
    initial: str = "omega0"
    delta: float = 0.1
    delta1: float = 0.05
    s: float = 0.02
    cfl_number: float = 0.5
    max_dt: float = 0.01
    t_end: float = 1.0
    snapshot_interval: float = 0.1
    dealias: bool = True
    filter: bool = False
    blowup_factor: float = 100.0
    checkpoint_every: int = 10
    output: str = "out"
    seed: int = 0
    acknowledge_unresolved: bool = False
    explicit: set = field(default_factory=set, repr=False, compare=False)

    @property
    def h(self) -> float:
        return 2.0 / self.n

    def validate(self, simulate: bool = True) -> "RunConfig":
        if self.mode not in ("theoretical", "resolvable"):
            raise ConfigError(f"mode must be theoretical or resolvable, got {self.mode!r}")
        if self.A < 2:
            raise ConfigError(f"A must be >= 2, got {self.A}")
        if self.C3 <= 0:
            raise ConfigError("C3 must be positive")
        if self.mode == "theoretical":
            if self.precision < 50:
                raise ConfigError("precision must be at least 50 digits")
            bad = SIMULATION_KEYS & self.explicit
            if bad:
                raise ConfigError(f"theoretical mode is constants-only; remove {sorted(bad)}")
            if simulate:
                raise ConfigError("theoretical mode does not simulate; use mode = resolvable")
            return self
        if self.n < 32 or self.n & (self.n - 1):
            raise ConfigError(f"n must be a power of two >= 32, got {self.n}")
        if self.initial not in ("omega0", "eigenfunction", "random"):
            raise ConfigError(f"unknown initial {self.initial!r}")
        if self.initial == "omega0" and not self.acknowledge_unresolved:
            if self.delta < 8 * self.h:
                raise ConfigError(f"delta={self.delta} < 8h={8 * self.h}; refine n or set acknowledge_unresolved")
            if self.s < 2 * self.h:
                raise ConfigError(f"s={self.s} < 2h={2 * self.h}; refine n or set acknowledge_unresolved")
        if not 0 < self.cfl_number <= 1:
            raise ConfigError("cfl_number must lie in (0, 1]")
        if self.snapshot_interval <= 0 or self.max_dt <= 0 or self.t_end < 0:
            raise ConfigError("snapshot_interval and max_dt must be positive, t_end nonnegative")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig) if f.name != "explicit"}


def _coerce(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELDS[key].type
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_lines(lines, cfg: RunConfig | None = None) -> RunConfig:
    cfg = cfg or RunConfig()
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        setattr(cfg, key, _coerce(key, value))
        cfg.explicit.add(key)
    return cfg


def load_config(path: str | Path | None = None, overrides=()) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        cfg = parse_lines(Path(path).read_text(encoding="utf-8").splitlines(), cfg)
    return parse_lines(overrides, cfg)


def dump_config(cfg: RunConfig) -> str:
    out = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, bool):
            value = int(value)
        elif isinstance(value, float):
            value = repr(value)
        out.append(f"{name} = {value}")
    return "\n".join(out) + "\n"
