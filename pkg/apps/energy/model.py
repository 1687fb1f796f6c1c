from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from apps.core.constants import MODEL_ERICKSEN, MODEL_UNIAXIAL
from apps.core.exceptions import ConfigError
from apps.couplings.anchoring import Anchoring
from apps.couplings.electric import ElectricCoupling
from apps.fem.quadrature import LumpedMass, lumped_mass
from apps.meshes.mesh import SimplicialMesh
from apps.meshes.stiffness import StiffnessGraph, build_stiffness
from apps.potentials.wells import DoubleWell

from . import ericksen, uniaxial
from .breakdown import EnergyBreakdown

logger = logging.getLogger(__name__)

NON_ACUTE_WARNING = "mesh is not weakly acute; discrete energy inequalities may fail"


@dataclass(frozen=True, eq=False)
class EnergyModel:
    """Everything needed to evaluate and differentiate a constrained model's energy.

    For the uniaxial model the orientation argument ``n`` is a generator of
    the line field, Theta_i = n_i (x) n_i; all terms are even in each n_i.
    """

    mesh: SimplicialMesh
    graph: StiffnessGraph
    mass: LumpedMass
    model: str
    well: DoubleWell
    kappa: float = 1.0
    anchoring: Optional[Anchoring] = None
    electric: Optional[ElectricCoupling] = None
    warnings: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.model not in (MODEL_ERICKSEN, MODEL_UNIAXIAL):
            raise ConfigError(f"EnergyModel handles the constrained models only, got {self.model!r}.", key="model")
        if self.model == MODEL_UNIAXIAL:
            object.__setattr__(self, "kappa", uniaxial.uniaxial_kappa(self.mesh.dim))
        if not self.graph.weakly_acute and NON_ACUTE_WARNING not in self.warnings:
            logger.warning("Energies on %s: %s.", self.mesh, NON_ACUTE_WARNING)
            object.__setattr__(self, "warnings", self.warnings + (NON_ACUTE_WARNING,))

    @classmethod
    def build(
        cls,
        mesh: SimplicialMesh,
        model: str,
        well: DoubleWell,
        kappa: float = 1.0,
        anchoring: Optional[Anchoring] = None,
        electric: Optional[ElectricCoupling] = None,
        graph: Optional[StiffnessGraph] = None,
        mass: Optional[LumpedMass] = None,
    ) -> "EnergyModel":
        return cls(
            mesh=mesh,
            graph=graph if graph is not None else build_stiffness(mesh),
            mass=mass if mass is not None else lumped_mass(mesh),
            model=model,
            well=well,
            kappa=kappa,
            anchoring=anchoring,
            electric=electric,
        )

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def is_uniaxial(self) -> bool:
        return self.model == MODEL_UNIAXIAL

    @cached_property
    def stiffness(self):
        return self.graph.laplacian

    # -- energies -------------------------------------------------------

    def main_energy(self, s: np.ndarray, n: np.ndarray) -> float:
        if self.is_uniaxial:
            return uniaxial.uni_main_energy(self.graph, s, n)
        return ericksen.erk_main_energy(self.graph, s, n, self.kappa)

    def bulk_energy(self, s: np.ndarray) -> float:
        return self.well.bulk_weight * float(np.dot(self.mass.weights, self.well.eval_psi(s)))

    def residual(self, s: np.ndarray, n: np.ndarray, tilde: bool = False) -> float:
        if self.is_uniaxial:
            return uniaxial.uni_residual(self.graph, s, n, tilde=tilde)
        return ericksen.erk_residual(self.graph, s, n, tilde=tilde)

    def aux_energy(self, s: np.ndarray, n: np.ndarray, tilde: bool = False) -> float:
        if self.is_uniaxial:
            return uniaxial.uni_aux_energy(self.graph, s, n, tilde=tilde)
        return ericksen.erk_aux_energy(self.graph, s, n, self.kappa, tilde=tilde)

    def breakdown(self, s: np.ndarray, n: np.ndarray) -> EnergyBreakdown:
        return EnergyBreakdown(
            main=self.main_energy(s, n),
            bulk=self.bulk_energy(s),
            anchoring=self.anchoring.energy(s, n) if self.anchoring else 0.0,
            electric=self.electric.energy(s, n) if self.electric else 0.0,
            residual=self.residual(s, n),
            warnings=self.warnings,
        )

    def total_energy(self, s: np.ndarray, n: np.ndarray) -> float:
        return self.breakdown(s, n).total

    # -- first variations -----------------------------------------------

    def delta_s(self, s: np.ndarray, n: np.ndarray, z: np.ndarray) -> float:
        """Variation of the total energy in s along z."""
        if self.is_uniaxial:
            value = uniaxial.uni_delta_s(self.graph, s, n, z)
        else:
            value = ericksen.erk_delta_s(self.graph, s, n, self.kappa, z)
        value += self.well.bulk_weight * float(np.dot(self.mass.weights, self.well.eval_dpsi(s) * np.asarray(z)))
        if self.anchoring:
            value += self.anchoring.delta_s(s, n, z)
        if self.electric:
            value += self.electric.delta_s(s, n, z)
        return value

    def delta_dir(self, s: np.ndarray, n: np.ndarray, v: np.ndarray) -> float:
        """Variation of the total energy in the orientation along nodal vectors v.

        For line fields this is the variation in Theta along n (x) v + v (x) n.
        """
        if self.is_uniaxial:
            value = uniaxial.uni_delta_theta(self.graph, s, n, uniaxial.tangent_variation(n, v))
        else:
            value = ericksen.erk_delta_n(self.graph, s, n, v)
        if self.anchoring:
            value += self.anchoring.delta_n(s, n, v)
        if self.electric:
            value += self.electric.delta_n(s, n, v)
        return value

    # -- assembly helpers for the flows ----------------------------------

    def ring_node_sums(self, n: np.ndarray) -> np.ndarray:
        if self.is_uniaxial:
            return ericksen.ring_node_sums(self.graph, uniaxial.projectors(n))
        return ericksen.ring_node_sums(self.graph, n)

    def coupling_director_matrices(self, s: np.ndarray) -> Optional[np.ndarray]:
        """Sum of coupling node matrices G; the couplings' n-energy is 1/2 sum m n^T G n."""
        total = None
        for coupling in (self.anchoring, self.electric):
            if coupling is None:
                continue
            G = coupling.director_matrices(s)
            total = G if total is None else total + G
        return total

    def coupling_s_terms(self, n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        diag = np.zeros(self.mesh.n_nodes)
        rhs = np.zeros(self.mesh.n_nodes)
        for coupling in (self.anchoring, self.electric):
            if coupling is None:
                continue
            d, r = coupling.s_system_terms(n)
            diag += d
            rhs += r
        return diag, rhs
