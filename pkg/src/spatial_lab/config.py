"""Tolerances and experiment configuration"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .errors import DescriptorError


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by all checks"""

    psd: float = 1e-9            # relative to the largest eigenvalue magnitude
    rank_cutoff: float = 1e-10   # relative to the largest singular value
    symmetry: float = 1e-12
    algebraic: float = 1e-12
    generic: float = 1e-10
    roundtrip: float = 1e-9

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"tolerance {f.name} must be positive")

    def updated(self, values: dict[str, float]) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(values) - known
        if unknown:
            raise KeyError(f"unknown tolerances: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in values.items()})


DEFAULT_TOLERANCES = Tolerances()


EXPERIMENTS = (
    "check-cpd",
    "kolmogorov",
    "ce-split",
    "semigroup",
    "trotter-converge",
    "trotter-algebra",
    "product-index",
    "automorphism",
    "scalar-tensor",
    "decompose-tuple",
    "free-flow-verify",
    "suite",
)


@dataclass
class ExperimentConfig:
    """One batch run of the laboratory"""

    experiment: str = "suite"
    inputs: dict[str, Path] = field(default_factory=dict)
    tolerances: Tolerances = DEFAULT_TOLERANCES
    n_max: int = 4
    h: float = 1 / 32
    truncation: int = 3
    seed: int = 42
    out: Path | None = None
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.n_max < 0 or self.truncation < 1:
            raise ValueError("n_max must be >= 0 and truncation >= 1")
        if not self.h > 0:
            raise ValueError("grid step h must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an ExperimentConfig from a JSON file; relative paths resolve against the file"""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as e:
        raise DescriptorError(f"cannot read config: {e}", str(path)) from e
    except json.JSONDecodeError as e:
        raise DescriptorError(e.msg, str(path), line=e.lineno) from e
    if not isinstance(raw, dict):
        raise DescriptorError("config must be a JSON object", str(path), line=1)

    base = path.parent
    try:
        inputs = {name: base / value for name, value in raw.get("inputs", {}).items()}
        tolerances = DEFAULT_TOLERANCES.updated(raw.get("tolerances", {}))
        out = raw.get("out")
        return ExperimentConfig(
            experiment=raw.get("experiment", "suite"),
            inputs=inputs,
            tolerances=tolerances,
            n_max=int(raw.get("n_max", 4)),
            h=float(raw.get("h", 1 / 32)),
            truncation=int(raw.get("truncation", 3)),
            seed=int(raw.get("seed", 42)),
            out=base / out if out else None,
            options=dict(raw.get("options", {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DescriptorError(str(e), str(path)) from e
