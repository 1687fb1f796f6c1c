from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional

from django.conf import settings

from apps.core.exceptions import ConfigError

CFL_REFUSE = "refuse"
CFL_WARN = "warn"

# settings.NEMATIC key -> FlowConfig field
_SETTINGS_KEYS = {
    "CG_TOL": "cg_tol",
    "CG_MAX_ITER": "cg_max_iter",
    "CFL_CONSTANT": "cfl_constant",
    "SIGMA_REG": "sigma_reg",
    "MONOTONICITY_TOL": "monotonicity_tol",
}


@dataclass(frozen=True)
class FlowConfig:
    """Parameters of the alternating gradient-flow drivers.

    ``tau`` scales the Ericksen tangent step and must lie in (0, 2); the
    uniaxial tangent step and both s-steps use ``dt``.
    """

    dt: float = 0.1
    stop_tol: float = 1e-8
    max_steps: int = 1000
    cfl_constant: float = 0.5
    cfl_mode: str = CFL_REFUSE
    sigma_reg: float = 1e-10
    tau: float = 1.0
    cg_tol: float = 1e-10
    cg_max_iter: Optional[int] = None
    monotonicity_tol: float = 1e-10
    check_monotonicity: bool = True

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ConfigError(f"time step must be positive, got {self.dt!r}.", key="flow.dt")
        if not self.stop_tol > 0.0:
            raise ConfigError(f"stopping tolerance must be positive, got {self.stop_tol!r}.", key="flow.stop_tol")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be at least 1, got {self.max_steps!r}.", key="flow.max_steps")
        if not self.cfl_constant > 0.0:
            raise ConfigError("CFL constant must be positive.", key="flow.cfl_constant")
        if self.cfl_mode not in (CFL_REFUSE, CFL_WARN):
            raise ConfigError(f"cfl_mode must be {CFL_REFUSE!r} or {CFL_WARN!r}.", key="flow.cfl_mode")
        if not 0.0 < self.tau < 2.0:
            raise ConfigError(f"tangential step scale must lie in (0, 2), got {self.tau!r}.", key="flow.tau")
        if self.sigma_reg < 0.0:
            raise ConfigError("sigma_reg must be nonnegative.", key="flow.sigma_reg")
        if not self.cg_tol > 0.0:
            raise ConfigError("CG tolerance must be positive.", key="flow.cg_tol")

    @classmethod
    def from_settings(cls, **overrides: Any) -> "FlowConfig":
        """Defaults from settings.NEMATIC, then per-experiment overrides."""
        defaults: Dict[str, Any] = {}
        nematic = getattr(settings, "NEMATIC", {})
        for key, name in _SETTINGS_KEYS.items():
            if key in nematic:
                defaults[name] = nematic[key]
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"unknown flow option(s) {unknown}.", key=f"flow.{unknown[0]}")
        defaults.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**defaults)

    def with_dt(self, dt: float) -> "FlowConfig":
        return replace(self, dt=dt)
