"""Run configuration: resource caps and tolerances in one record."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import InputError


@dataclass(frozen=True)
class RunConfig:
    # largest b - a of any window [a, b]
    max_window: int = 16
    max_paths: int = 1_000_000
    max_ell: int = 400
    max_n: int = 50
    max_lag: int = 3
    max_entry: int = 4
    # dense dimension of the stack-algebra model used past concrete windows
    max_model_dim: int = 1200
    # exponent cap for eventual-positivity certificates
    max_certificate_power: int = 64
    float_slack: float = 1e-9
    undecided_threshold: float = 1e-8
    output: str = "json"
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            if f.name.startswith("max_") and getattr(self, f.name) <= 0:
                raise InputError(f"cap {f.name} must be positive")
        for name in ("float_slack", "undecided_threshold"):
            tol = getattr(self, name)
            if not 0 < tol <= 1e-3:
                raise InputError(f"tolerance {name}={tol} outside (0, 1e-3]")
        if self.output not in ("json", "table"):
            raise InputError(f"unknown output mode {self.output!r}")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


DEFAULT_CONFIG = RunConfig()
