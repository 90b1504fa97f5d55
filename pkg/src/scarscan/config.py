"""Run configuration: one flat key set, mirrored by file and CLI flags."""

import secrets
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from scarscan._validation import check_error_rate, check_length
from scarscan.hilbert import MAX_LENGTH


@dataclass
class RunConfig:
    """Knobs of the simulation/analysis pipeline.

    Every output artifact embeds the full configuration (seed included), so
    any result can be reproduced from its own metadata.
    """

    length: int = 10
    boundary: str = "pbc"
    rabi: float = 1.0
    t_start: float = 0.0
    t_end: float = 10.0
    timesteps: int = 20
    shots: int = 500
    error_rate: float = 0.0
    scale_min: int = 2
    scale_max: int = 0  # 0 means "up to the chain length"
    plateau_window: int = 3
    plateau_tol: float = 0.15
    bootstrap: int = 0
    seed: int = field(default_factory=lambda: secrets.randbelow(2**31))
    jobs: int = 1

    def __post_init__(self):
        self.length = check_length(self.length)
        if self.length > MAX_LENGTH:
            raise ValueError(f"length {self.length} exceeds the supported maximum {MAX_LENGTH}")
        if self.boundary not in ("pbc", "obc"):
            raise ValueError(f"boundary must be 'pbc' or 'obc', got {self.boundary!r}")
        self.error_rate = check_error_rate(self.error_rate)
        if self.timesteps < 1:
            raise ValueError("timesteps must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.scale_max == 0:
            self.scale_max = self.length
        if not (2 <= self.scale_min <= self.scale_max):
            raise ValueError(f"need 2 <= scale_min <= scale_max, got ({self.scale_min}, {self.scale_max})")
        if self.plateau_window < 2:
            raise ValueError("plateau_window must be >= 2")
        if self.plateau_tol <= 0:
            raise ValueError("plateau_tol must be positive")
        if self.bootstrap < 0 or self.jobs < 1:
            raise ValueError("bootstrap must be >= 0 and jobs >= 1")

    @property
    def periodic(self):
        return self.boundary == "pbc"

    def times(self):
        """Measurement grid: ``timesteps`` points evenly spaced over (t_start, t_end]."""
        step = (self.t_end - self.t_start) / self.timesteps
        return self.t_start + step * np.arange(1, self.timesteps + 1)

    def scale_range(self):
        return list(range(self.scale_min, self.scale_max + 1))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


_TYPES = {
    "length": int, "boundary": str, "rabi": float, "t_start": float, "t_end": float,
    "timesteps": int, "shots": int, "error_rate": float, "scale_min": int,
    "scale_max": int, "plateau_window": int, "plateau_tol": float, "bootstrap": int,
    "seed": int, "jobs": int,
}


def read_config_file(path):
    """Parse a flat ``key = value`` file ('#' starts a comment)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = (s.strip() for s in line.partition("="))
            if key not in _TYPES:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = _TYPES[key](value)
    return out


def write_config_file(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in config.to_dict().items():
            fh.write(f"{key} = {value}\n")


def config_header_lines(config):
    """Config echo for '#'-comment headers of CSV artifacts."""
    return [f"{k} = {v}" for k, v in config.to_dict().items()]
