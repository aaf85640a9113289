"""
Machine-readable run reports.

Reports are JSON with sorted keys and two-space indentation. Complex numbers are
``[re, im]`` pairs and angles are radians. Floats are written with Python's
shortest round-trip repr, so ``RunReport.from_json(text).to_json() == text``
for any report this module wrote.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
from dataclasses import asdict, dataclass, fields
from typing import Any, Iterable

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "SCHEMA_VERSION",
    "RunReport",
    "complex_pairs",
    "from_pairs",
    "derive_seed",
    "timestamp",
]

SCHEMA_VERSION = 1


def complex_pairs(values: Iterable[complex]) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(list(values), dtype=complex)]


def from_pairs(pairs) -> np.ndarray:
    a = np.asarray(pairs, dtype=float)
    return a[:, 0] + 1j * a[:, 1]


def derive_seed(master: int, *key: int) -> int:
    """63-bit seed for the stream ``SeedSequence(master, spawn_key=key)``."""
    state = np.random.SeedSequence(entropy=master, spawn_key=key).generate_state(1, np.uint64)[0]
    return int(state) >> 1


def timestamp() -> str:
    """UTC ISO-8601 time, pinned by ``SOURCE_DATE_EPOCH`` when that is set."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        try:
            when = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
        except ValueError as exc:
            raise InvalidParameterError(f"SOURCE_DATE_EPOCH must be an integer, got {epoch!r}") from exc
    else:
        when = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class RunReport:
    """
    Everything needed to audit one engineering or simulation run.

    Sections are plain JSON-ready values. ``circuit``, ``physical`` and
    ``measurement`` are ``None`` when the run skipped that stage.
    """

    tool_version: str
    timestamp: str
    master_seed: int
    target: dict[str, Any] | None
    lattice: dict[str, Any]
    engineering: dict[str, Any]
    walker_state: list[list[float]]
    basis_probabilities: list[float] | None = None
    circuit: list[dict[str, Any]] | None = None
    physical: dict[str, Any] | None = None
    measurement: dict[str, Any] | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunReport":
        """Build from parsed JSON; keys this version does not know are ignored."""
        version = data.get("schema_version")
        if not isinstance(version, int) or version < 1:
            raise InvalidParameterError(f"bad report schema version {version!r}")
        known = {f.name for f in fields(cls)}
        missing = [k for k in ("tool_version", "timestamp", "master_seed", "lattice",
                               "engineering", "walker_state") if k not in data]
        if missing:
            raise InvalidParameterError(f"report lacks required fields {missing}")
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"report is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidParameterError("report must be a JSON object")
        return cls.from_dict(data)

    @property
    def coins(self) -> list[tuple[float, float, float]]:
        return [tuple(c) for c in self.engineering["coins"]]
