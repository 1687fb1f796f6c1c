from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

from apps.core.exceptions import CoercivityError, ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoercivityReport:
    L1: float
    L2: float
    L3: float
    violations: Tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class LdgElasticParams:
    """Elastic constants and weights of the standard Landau-deGennes energy.

    ``eta_b`` scales the bulk potential as 1/eta_b and ``eta_gamma`` the
    Rapini-Papoular surface term. The tensors Q_Gamma and Q_D live on
    :class:`~apps.standard_ldg.scheme.LdgProblem`.
    """

    L1: float = 1.0
    L2: float = 0.0
    L3: float = 0.0
    eta_b: float = 1.0 / 16.0
    eta_gamma: float = 0.0

    def __post_init__(self) -> None:
        if not self.eta_b > 0.0:
            raise ConfigError(f"eta_B must be positive, got {self.eta_b!r}.", key="ldg.eta_b")
        if self.eta_gamma < 0.0:
            raise ConfigError(f"eta_Gamma must be nonnegative, got {self.eta_gamma!r}.", key="ldg.eta_gamma")

    def coercivity_audit(self) -> CoercivityReport:
        """0 < L1, -L1 < L3 < 2 L1, -(3/5) L1 - (1/10) L3 < L2."""
        L1, L2, L3 = self.L1, self.L2, self.L3
        violations: List[str] = []
        if not L1 > 0.0:
            violations.append(f"L1 = {L1:g} must be positive")
        if not -L1 < L3 < 2.0 * L1:
            violations.append(f"L3 = {L3:g} must lie in (-L1, 2 L1) = ({-L1:g}, {2.0 * L1:g})")
        lower = -0.6 * L1 - 0.1 * L3
        if not L2 > lower:
            violations.append(f"L2 = {L2:g} must exceed -(3/5) L1 - (1/10) L3 = {lower:g}")
        return CoercivityReport(L1=L1, L2=L2, L3=L3, violations=tuple(violations))

    def require_coercive(self, allow_override: bool = False) -> CoercivityReport:
        report = self.coercivity_audit()
        if report.passed:
            return report
        message = "Elastic constants are not coercive: " + "; ".join(report.violations) + "."
        if not allow_override:
            raise CoercivityError(message)
        logger.warning("%s Continuing because the override is set.", message)
        return report
