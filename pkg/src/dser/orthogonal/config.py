"""Run configuration shared by every subcommand.

Values come from built-in defaults, then an optional YAML file, then explicit
command-line flags. ``DSER_BUDGET`` replaces the default enumeration budget.
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import RingError, UsageError
from .grouplab import default_budget
from .matrix import coerce_matrix
from .quadspace import QuadSetup
from .ring import RingSpec

CONFIG_FIELDS = ("ring", "n", "m", "phi", "seed", "trials", "budget", "output")


class RunConfig(BaseModel):
    ring: str = "zmod:5"
    n: int = Field(default=1, ge=1)
    m: int = Field(default=2, ge=0)
    phi: list[list[str]] | None = None
    seed: int = 42
    trials: int = Field(default=100, ge=1)
    budget: int = Field(default_factory=default_budget, ge=1)
    output: Path | None = None

    @field_validator("ring")
    @classmethod
    def _check_ring(cls, value: str) -> str:
        try:
            spec = RingSpec.parse(value)
        except RingError as error:
            raise ValueError(str(error)) from None
        if not spec.has_half:
            raise ValueError("2 not invertible")
        return spec.label

    @field_validator("phi", mode="before")
    @classmethod
    def _split_phi(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [row.split() for row in value.replace(";", "\n").splitlines() if row.strip()]
        if isinstance(value, list):
            return [[str(x) for x in row] if isinstance(row, list) else str(row).split() for row in value]
        return value

    def ring_spec(self) -> RingSpec:
        return RingSpec.parse(self.ring)

    def setup(self, m: int | None = None) -> QuadSetup:
        ring = self.ring_spec()
        phi = None if self.phi is None else coerce_matrix(ring, [[ring.parse_value(x) for x in row] for row in self.phi])
        return QuadSetup.standard(ring, self.n, self.m if m is None else m, phi)

    def rng(self, *labels: object) -> random.Random:
        """Generator seeded by the run seed plus ``labels``."""
        return random.Random(":".join(str(x) for x in (self.seed, *labels)))

    def summary(self) -> dict[str, Any]:
        return {
            "ring": self.ring,
            "n": self.n,
            "m": self.m,
            "phi": self.phi,
            "seed": self.seed,
            "trials": self.trials,
            "budget": self.budget,
        }


def load_config_file(path: Path) -> dict[str, Any]:
    """Read a YAML mapping of run settings.

    Raises:
        UsageError: If the file is unreadable, not a mapping, or has unknown keys.
    """
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as error:
        raise UsageError(f"cannot read config {path}: {error}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping")
    unknown = sorted(set(data) - set(CONFIG_FIELDS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


def resolve_config(args: argparse.Namespace, **overrides: Any) -> RunConfig:
    """Merge defaults, ``--config`` and explicit flags into a ``RunConfig``.

    Raises:
        UsageError: If any value is invalid.
    """
    values: dict[str, Any] = {k: v for k, v in overrides.items() if v is not None}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        values.update(load_config_file(config_path))
    for key in CONFIG_FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    try:
        config = RunConfig(**values)
        config.setup()
    except ValidationError as error:
        raise UsageError("; ".join(_describe(e) for e in error.errors())) from None
    except ValueError as error:
        raise UsageError(str(error)) from None
    return config


def _describe(error: dict[str, Any]) -> str:
    where = ".".join(str(x) for x in error.get("loc", ()))
    message = str(error.get("msg", "invalid value")).removeprefix("Value error, ")
    return f"{where}: {message}" if where else message

