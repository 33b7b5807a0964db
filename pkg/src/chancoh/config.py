"""Numerical tolerances shared by every module.

One frozen record holds the defaults; functions take an optional ``tol``
argument that falls back to :data:`DEFAULT`.  The CLI builds its own
record from flags (or from the JSON file named by ``CHANCOH_TOLERANCES``).
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

ENV_TOLERANCE_FILE = "CHANCOH_TOLERANCES"


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-9
    psd: float = 1e-9
    channel: float = 1e-8
    classification: float = 1e-9
    solver_gap: float = 1e-9
    support: float = 1e-10
    branch_drop: float = 1e-12

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"tolerance {f.name} must be > 0")

    def replace(self, **overrides) -> "Tolerances":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **overrides)

    @classmethod
    def from_file(cls, path: str) -> "Tolerances":
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_env(cls) -> "Tolerances":
        path = os.environ.get(ENV_TOLERANCE_FILE)
        return cls.from_file(path) if path else cls()


DEFAULT = Tolerances()
