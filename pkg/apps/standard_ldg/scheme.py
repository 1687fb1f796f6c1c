"""Semi-implicit convex-splitting gradient flow of the standard Landau-deGennes energy.

Given Q^k, Q^{k+1} solves, for every traceless P vanishing on Gamma_D,

    (Q^{k+1}/dt, P)_h + a(Q^{k+1}, P) + ((A + D)/eta_B)(Q^{k+1}, P)_h
        + eta_Gamma (Q^{k+1}, P)_Gamma + J'(Q^{k+1}; P)
    = (Q^k/dt, P)_h + eta_Gamma (Q_Gamma, P)_Gamma
        + (1/eta_B)(D Q^k + B dev((Q^k)^2) - C tr((Q^k)^2) Q^k, P)_h
        + (K_ext/2) eps_a (dev(E (x) E), P)_h + colloid anchoring target

with lumped volume and boundary masses. Testing against the traceless
basis projects every right-hand side onto its deviatoric part.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from django.conf import settings

from apps.core.exceptions import ConfigError, FieldError, MonotonicityError, NonFiniteError
from apps.couplings.anchoring import TensorAnchoring
from apps.couplings.electric import ElectricCoupling
from apps.energy.breakdown import EnergyBreakdown
from apps.fem.operators import SparseSymOperator, eliminate_dirichlet, expand_solution
from apps.fem.quadrature import LumpedMass, boundary_lumped_mass, lumped_mass
from apps.fem.solvers import cg_solve
from apps.fields.decompose import basis_tensors, biaxiality, components_to_matrices, uniaxial_compose
from apps.fields.fields import QTensorField, n_components
from apps.flow.config import FlowConfig
from apps.flow.state import REASON_CONVERGED, REASON_MAX_STEPS, REASON_RUNNING
from apps.meshes.mesh import SimplicialMesh
from apps.potentials.tensor import LdgBulkPotential

from .elastic import assemble_elastic_form, component_dofs, component_mass
from .params import LdgElasticParams

logger = logging.getLogger(__name__)

DEFAULT_MONOTONICITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LdgProblem:
    """Everything a standard-model flow needs besides the state.

    ``dirichlet_values`` and ``surface_tensor`` hold components in the
    layout of :class:`~apps.fields.fields.QTensorField`; ``surface_tensor``
    is the nodal interpolant of Q_Gamma on the whole mesh.
    """

    mesh: SimplicialMesh
    params: LdgElasticParams
    potential: LdgBulkPotential = field(default_factory=LdgBulkPotential)
    dirichlet_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dirichlet_values: Optional[np.ndarray] = None
    surface_labels: Tuple[str, ...] = ()
    surface_tensor: Optional[np.ndarray] = None
    anchoring: Optional[TensorAnchoring] = None
    electric: Optional[ElectricCoupling] = None
    allow_non_coercive: bool = False

    def __post_init__(self) -> None:
        self.params.require_coercive(self.allow_non_coercive)
        nc = n_components(self.mesh.dim)
        nodes = np.asarray(self.dirichlet_nodes, dtype=np.int64).reshape(-1)
        values = np.zeros((0, nc)) if self.dirichlet_values is None else np.asarray(self.dirichlet_values, dtype=float)
        if values.shape != (nodes.size, nc):
            raise FieldError(f"Dirichlet tensor data needs shape {(nodes.size, nc)}, got {values.shape}.")
        object.__setattr__(self, "dirichlet_nodes", nodes)
        object.__setattr__(self, "dirichlet_values", values)
        object.__setattr__(self, "surface_labels", tuple(self.surface_labels))
        if self.params.eta_gamma > 0.0:
            if not self.surface_labels:
                raise ConfigError("Surface anchoring needs at least one boundary label.", key="ldg.surface_labels")
            if self.surface_tensor is None or np.shape(self.surface_tensor) != (self.mesh.n_nodes, nc):
                raise ConfigError(
                    f"Surface anchoring needs Q_Gamma with shape {(self.mesh.n_nodes, nc)}.", key="ldg.surface"
                )

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def n_components(self) -> int:
        return n_components(self.dim)

    @cached_property
    def mass(self) -> LumpedMass:
        return lumped_mass(self.mesh)

    @cached_property
    def mass_matrix(self) -> sp.csr_matrix:
        return component_mass(self.mass.weights, self.dim)

    @cached_property
    def elastic(self) -> SparseSymOperator:
        return assemble_elastic_form(self.params, self.mesh)

    @cached_property
    def boundary_weights(self) -> np.ndarray:
        if not self.surface_labels:
            return np.zeros(self.mesh.n_nodes)
        return boundary_lumped_mass(self.mesh, self.surface_labels)

    @cached_property
    def fixed_dofs(self) -> np.ndarray:
        return component_dofs(self.dirichlet_nodes, self.dim)

    @property
    def fixed_values(self) -> np.ndarray:
        return self.dirichlet_values.reshape(-1)

    def matrices(self, q: np.ndarray) -> np.ndarray:
        return components_to_matrices(np.asarray(q, dtype=float).reshape(-1, self.n_components), self.dim)

    def test_against(self, weights: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Nodal load vector of sum_i w_i X_i : P_i for every basis P, flattened."""
        E = basis_tensors(self.dim)
        return (np.asarray(weights, dtype=float)[:, None] * np.einsum("nij,cij->nc", X, E)).reshape(-1)

    def impose(self, q: np.ndarray) -> np.ndarray:
        q = np.array(q, dtype=float, copy=True).reshape(self.mesh.n_nodes, self.n_components)
        q[self.dirichlet_nodes] = self.dirichlet_values
        return q


def ldg_total_energy(problem: LdgProblem, q: np.ndarray) -> EnergyBreakdown:
    """Elastic, bulk, surface, colloid anchoring and electric parts of E_LdG."""
    flat = np.asarray(q, dtype=float).reshape(-1)
    Q = problem.matrices(flat)
    p = problem.params
    w = problem.mass.weights
    main = 0.5 * problem.elastic.quadratic_form(flat)
    bulk = float(np.dot(w, problem.potential.psi(Q))) / p.eta_b
    offset = problem.potential.K * problem.mass.total / p.eta_b
    surface = 0.0
    if p.eta_gamma > 0.0:
        diff = Q - problem.matrices(problem.surface_tensor)
        surface = 0.5 * p.eta_gamma * float(np.dot(problem.boundary_weights, np.einsum("nij,nij->n", diff, diff)))
    anchoring = problem.anchoring.energy(Q) if problem.anchoring is not None else 0.0
    electric = problem.electric.tensor_energy(Q) if problem.electric is not None else 0.0
    return EnergyBreakdown(
        main=main,
        bulk=bulk,
        anchoring=anchoring,
        electric=electric,
        surface=surface,
        offset=offset,
    )


def ldg_operator(problem: LdgProblem, dt: float) -> SparseSymOperator:
    """Implicit operator of one step; it does not depend on the state."""
    p = problem.params
    pot = problem.potential
    dim = problem.dim
    M = problem.mass_matrix
    lhs = problem.elastic.matrix + (1.0 / dt + (pot.A + pot.D) / p.eta_b) * M
    if p.eta_gamma > 0.0:
        lhs = lhs + p.eta_gamma * component_mass(problem.boundary_weights, dim)
    if problem.anchoring is not None:
        lhs = lhs + component_mass(problem.anchoring.node_weights(), dim)
    return SparseSymOperator.from_matrix(lhs, check=False)


def ldg_rhs(problem: LdgProblem, q: np.ndarray, dt: float) -> np.ndarray:
    p = problem.params
    flat = np.asarray(q, dtype=float).reshape(-1)
    Q = problem.matrices(flat)
    w = problem.mass.weights
    rhs = problem.mass_matrix @ flat / dt
    rhs = rhs + problem.test_against(w, problem.potential.expansive_part_variation(Q)) / p.eta_b
    if p.eta_gamma > 0.0:
        rhs = rhs + p.eta_gamma * problem.test_against(
            problem.boundary_weights, problem.matrices(problem.surface_tensor)
        )
    if problem.electric is not None:
        e = problem.electric
        E = e.nodal_field
        rhs = rhs + 0.5 * e.params.k_ext * e.params.eps_a * problem.test_against(w, np.einsum("ni,nj->nij", E, E))
    if problem.anchoring is not None:
        a = problem.anchoring
        weight = a.k_normal * a.colloid.interface_weight
        rhs = rhs + weight * problem.test_against(w, a.weighted_target())
    return rhs


def ldg_flow_step(
    problem: LdgProblem,
    q: np.ndarray,
    dt: float,
    config: Optional[FlowConfig] = None,
    operator: Optional[SparseSymOperator] = None,
) -> np.ndarray:
    """One semi-implicit step; returns the new components with shape (N, n_components)."""
    config = config or FlowConfig(dt=dt)
    op = operator if operator is not None else ldg_operator(problem, dt)
    q = problem.impose(q)
    rhs = ldg_rhs(problem, q, dt)
    if not np.all(np.isfinite(rhs)):
        raise NonFiniteError("Non-finite bulk terms in the standard-model step.")
    fixed = problem.fixed_dofs
    reduced, reduced_rhs, free = eliminate_dirichlet(op, rhs, fixed, problem.fixed_values)
    flat = q.reshape(-1)
    result = cg_solve(reduced, reduced_rhs, tol=config.cg_tol, max_iter=config.cg_max_iter, x0=flat[free])
    new = expand_solution(op.dimension, free, result.x, fixed, problem.fixed_values)
    return new.reshape(q.shape)


@dataclass(frozen=True, eq=False)
class LdgFlowResult:
    step: int
    q: np.ndarray
    trace: Tuple[EnergyBreakdown, ...]
    dq_norm: float = float("nan")
    reason: str = REASON_RUNNING
    dim: int = 3

    def __post_init__(self) -> None:
        arr = np.array(self.q, dtype=float, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "q", arr)

    @property
    def energy(self) -> EnergyBreakdown:
        return self.trace[-1]

    @property
    def initial_energy(self) -> EnergyBreakdown:
        return self.trace[0]

    @cached_property
    def field(self) -> QTensorField:
        return QTensorField(components=self.q, dim=self.dim)

    @cached_property
    def biaxiality(self) -> np.ndarray:
        return biaxiality(self.field.matrices)

    @cached_property
    def degree(self) -> np.ndarray:
        """d/(d-1) times the largest eigenvalue; s for uniaxial Q with s >= 0."""
        lam = np.linalg.eigvalsh(self.field.matrices)[:, -1]
        return self.dim / (self.dim - 1.0) * lam

    @property
    def min_degree(self) -> float:
        return float(self.degree.min())


LdgCallback = Callable[[LdgFlowResult], None]


def _monotonicity_tol(override: Optional[float]) -> float:
    if override is not None:
        return override
    return float(getattr(settings, "NEMATIC", {}).get("LDG_MONOTONICITY_TOL", DEFAULT_MONOTONICITY_TOL))


def run_ldg_flow(
    problem: LdgProblem,
    q0: np.ndarray,
    config: FlowConfig,
    callback: Optional[LdgCallback] = None,
    monotonicity_tol: Optional[float] = None,
) -> LdgFlowResult:
    """Iterate :func:`ldg_flow_step` until ||Q^{k+1} - Q^k||_{L^2} < stop_tol.

    Raises:
        MonotonicityError: the energy rose by more than the relative tolerance.
        NonFiniteError: an energy became NaN or infinite.
    """
    tol = _monotonicity_tol(monotonicity_tol)
    q = problem.impose(q0)
    QTensorField(components=q, dim=problem.dim)
    op = ldg_operator(problem, config.dt)
    state = LdgFlowResult(step=0, q=q, trace=(ldg_total_energy(problem, q),), dim=problem.dim)
    logger.info(
        "Starting standard LdG flow on %s: E = %.10g, dt = %g, up to %d steps.",
        problem.mesh, state.energy.total, config.dt, config.max_steps,
    )
    if callback is not None:
        callback(state)

    M = problem.mass_matrix
    for step in range(1, config.max_steps + 1):
        before = state.energy
        q_new = ldg_flow_step(problem, q, config.dt, config=config, operator=op)
        after = ldg_total_energy(problem, q_new)
        if not np.isfinite(after.total):
            raise NonFiniteError(f"Standard-model energy became non-finite at step {step}.")
        diff = (q_new - q).reshape(-1)
        dq_norm = float(np.sqrt(max(float(diff @ (M @ diff)), 0.0)))
        if config.check_monotonicity and after.total > before.total + tol * abs(before.total):
            logger.error("Energy increased at step %d: %.12g -> %.12g.", step, before.total, after.total)
            raise MonotonicityError(
                step, before.total, after.total,
                {"before": before.as_dict(), "after": after.as_dict(), "dq_norm": dq_norm},
            )
        q = q_new
        converged = dq_norm < config.stop_tol
        reason = REASON_CONVERGED if converged else (REASON_MAX_STEPS if step == config.max_steps else REASON_RUNNING)
        state = replace(state, step=step, q=q, trace=state.trace + (after,), dq_norm=dq_norm, reason=reason)
        logger.debug("step %d: E = %.12g, |dQ| = %.3e", step, after.total, dq_norm)
        if callback is not None:
            callback(state)
        if reason != REASON_RUNNING:
            break

    logger.info("Standard LdG flow finished after %d steps (%s): E = %.10g.", state.step, state.reason, state.energy.total)
    return state


def uniform_tensor(dim: int, n_nodes: int, s: float, director: Sequence[float]) -> np.ndarray:
    """Components of s (n (x) n - I/d) repeated on every node."""
    n = np.asarray(director, dtype=float)
    n = n / np.linalg.norm(n)
    return uniaxial_compose(np.full(n_nodes, s), np.tile(n, (n_nodes, 1))).components
