from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from apps.core.exceptions import MeshError
from apps.energy.model import EnergyModel
from apps.fields.decompose import biaxiality, uniaxial_compose

from .scheme import LdgProblem, ldg_total_energy

logger = logging.getLogger(__name__)


def _relative_gap(reference: float, other: float) -> float:
    scale = abs(reference)
    if scale == 0.0:
        return 0.0 if other == reference else float("inf")
    return (reference - other) / scale


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Energies of the uniaxial minimizer Q_uni and the standard minimizer Q_LdG.

    ``model_gap`` = (E_uni[Q_uni] - E_LdG[Q_uni]) / |E_uni[Q_uni]| and
    ``final_gap`` = (E_uni[Q_uni] - E_LdG[Q_LdG]) / |E_uni[Q_uni]|.
    """

    uni_of_uni: float
    ldg_of_uni: float
    ldg_of_ldg: float
    difference: np.ndarray
    biaxiality: np.ndarray

    @property
    def model_gap(self) -> float:
        return _relative_gap(self.uni_of_uni, self.ldg_of_uni)

    @property
    def final_gap(self) -> float:
        return _relative_gap(self.uni_of_uni, self.ldg_of_ldg)

    @property
    def max_difference(self) -> float:
        return float(self.difference.max(initial=0.0))

    @property
    def max_biaxiality(self) -> float:
        return float(self.biaxiality.max(initial=0.0))

    def as_dict(self) -> Dict[str, float]:
        return {
            "E_uni[Q_uni]": self.uni_of_uni,
            "E_LdG[Q_uni]": self.ldg_of_uni,
            "E_LdG[Q_LdG]": self.ldg_of_ldg,
            "model_gap": self.model_gap,
            "final_gap": self.final_gap,
            "max_difference": self.max_difference,
            "max_biaxiality": self.max_biaxiality,
        }


def cross_model_compare(
    uniaxial: EnergyModel,
    s: np.ndarray,
    director: np.ndarray,
    problem: LdgProblem,
    q_ldg: np.ndarray,
) -> ComparisonReport:
    """Compare a uniaxial result (s, n) with a standard-model result on the same mesh."""
    if not uniaxial.mesh.same_as(problem.mesh):
        raise MeshError("Cross-model comparison needs both runs on the same mesh.")
    q_uni = uniaxial_compose(s, director).components
    q_ldg = np.asarray(q_ldg, dtype=float).reshape(q_uni.shape)
    Q_uni = problem.matrices(q_uni)
    Q_ldg = problem.matrices(q_ldg)
    diff = Q_uni - Q_ldg
    report = ComparisonReport(
        uni_of_uni=uniaxial.total_energy(s, director),
        ldg_of_uni=ldg_total_energy(problem, q_uni).total,
        ldg_of_ldg=ldg_total_energy(problem, q_ldg).total,
        difference=np.sqrt(np.einsum("nij,nij->n", diff, diff)),
        biaxiality=biaxiality(Q_ldg),
    )
    logger.info(
        "Model gap %.4g, final gap %.4g, max biaxiality %.3g.",
        report.model_gap, report.final_gap, report.max_biaxiality,
    )
    return report
