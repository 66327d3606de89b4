"""Run report: per-channel step metrics, mission metrics and the stability certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..mission import MissionMetrics
from ..pida import StepMetrics


def _finite_or_none(value: float) -> float | None:
    return None if (value is None or not math.isfinite(value)) else float(value)


@dataclass
class RunReport:
    kind: str
    seed: int
    step: dict[str, StepMetrics | None] = field(default_factory=dict)
    mission: MissionMetrics | None = None
    stability: dict[str, Any] | None = None
    trajectory: str | None = None
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "seed": self.seed}
        if self.step:
            out["step"] = {
                ch: (None if m is None else m.as_dict()) for ch, m in self.step.items()
            }
        if self.mission is not None:
            out["mission"] = {k: _finite_or_none(v) for k, v in self.mission.as_dict().items()}
        if self.stability is not None:
            out["stability"] = self.stability
        out["trajectory"] = self.trajectory
        out["notes"] = list(self.notes)
        return out

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(yaml.safe_dump(self.as_dict(), sort_keys=False))
        return path
