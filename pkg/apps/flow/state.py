from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Tuple

import numpy as np

from apps.energy.breakdown import EnergyBreakdown

REASON_RUNNING = "running"
REASON_CONVERGED = "converged"
REASON_MAX_STEPS = "max_steps"


@dataclass(frozen=True, eq=False)
class FlowState:
    """Snapshot of a gradient-flow run after ``step`` completed steps.

    ``director`` holds unit vectors; for line fields they are generators of
    Theta = n (x) n and their signs carry no meaning.
    """

    step: int
    s: np.ndarray
    director: np.ndarray
    trace: Tuple[EnergyBreakdown, ...]
    ds_norm: float = float("nan")
    tangent_norm: float = 0.0
    dissipation: float = 0.0
    singular_nodes: int = 0
    min_s: float = float("nan")
    reason: str = REASON_RUNNING
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("s", "director"):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def energy(self) -> EnergyBreakdown:
        return self.trace[-1]

    @property
    def initial_energy(self) -> EnergyBreakdown:
        return self.trace[0]

    @property
    def telescoping_slack(self) -> float:
        """E(0) - E(N) - dissipation; nonnegative for a stable run."""
        return self.initial_energy.total - self.energy.total - self.dissipation

    def advance(self, **changes: Any) -> "FlowState":
        return replace(self, **changes)
