from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np

from apps.core.exceptions import FieldError, MonotonicityError, NonFiniteError
from apps.energy.model import EnergyModel
from apps.fields.defects import MIN_DEGREE
from apps.fields.fields import BoundaryData, DegreeField, DirectorField, LineField

from .config import FlowConfig
from .degree import s_step
from .state import REASON_CONVERGED, REASON_MAX_STEPS, REASON_RUNNING, FlowState
from .tangent import check_cfl, erk_tangent_step, project_director, project_line, uni_tangent_step

logger = logging.getLogger(__name__)

FlowCallback = Callable[[FlowState], None]


def _validated_initial(model: EnergyModel, s0: np.ndarray, n0: np.ndarray, boundary: BoundaryData):
    s, n = boundary.apply(s0, n0)
    degree = DegreeField(values=s, model=model.model, dim=model.dim)
    if n.shape != (model.mesh.n_nodes, model.dim):
        raise FieldError(f"Expected orientation of shape {(model.mesh.n_nodes, model.dim)}, got {n.shape}.")
    orientation = LineField(vectors=n) if model.is_uniaxial else DirectorField(vectors=n)
    return degree.values, orientation.vectors


def _singular_count(s: np.ndarray) -> int:
    return int(np.count_nonzero(np.abs(s) < MIN_DEGREE))


def run_flow(
    model: EnergyModel,
    s0: np.ndarray,
    n0: np.ndarray,
    boundary: BoundaryData,
    config: FlowConfig,
    callback: Optional[FlowCallback] = None,
) -> FlowState:
    """Alternate tangent step, projection and s-step until the s-increment is small.

    Raises:
        MonotonicityError: the total energy increased beyond the tolerance.
        NonFiniteError: an energy became NaN or infinite.
        CFLViolation: uniaxial run with dt above the CFL limit in refuse mode.
    """
    s, n = _validated_initial(model, s0, n0, boundary)
    if model.is_uniaxial:
        check_cfl(model, config)
    fixed_dir = boundary.director_nodes

    energy = model.breakdown(s, n)
    state = FlowState(
        step=0,
        s=s,
        director=n,
        trace=(energy,),
        singular_nodes=_singular_count(s),
        min_s=float(s.min()),
    )
    logger.info(
        "Starting %s flow on %s: E = %.10g, dt = %g, up to %d steps.",
        model.model, model.mesh, energy.total, config.dt, config.max_steps,
    )
    if callback is not None:
        callback(state)

    dissipation = 0.0
    for step in range(1, config.max_steps + 1):
        before = state.energy
        if model.is_uniaxial:
            update = uni_tangent_step(model, s, n, fixed_dir, config, enforce_cfl=False)
            n_new = project_line(n, update.t, fixed_dir)
        else:
            update = erk_tangent_step(model, s, n, fixed_dir, config)
            n_new = project_director(n, update.t, fixed_dir)
        degree = s_step(model, s, n_new, boundary, config)
        s_new = degree.s

        after = model.breakdown(s_new, n_new)
        if not np.isfinite(after.total):
            raise NonFiniteError(f"Energy became non-finite at step {step}.")
        if model.is_uniaxial:
            dissipation += (update.norm ** 2 + degree.ds_norm ** 2) / config.dt
        else:
            dissipation += degree.ds_norm ** 2 / config.dt

        allowed = before.total + config.monotonicity_tol * abs(before.total)
        if config.check_monotonicity and after.total > allowed:
            diagnostics = {
                "before": before.as_dict(),
                "after": after.as_dict(),
                "ds_norm": degree.ds_norm,
                "tangent_norm": update.norm,
                "clamped_nodes": degree.clamped_nodes,
                "min_s": float(s_new.min()),
            }
            logger.error("Energy increased at step %d: %.12g -> %.12g.", step, before.total, after.total)
            raise MonotonicityError(step, before.total, after.total, diagnostics)

        s, n = s_new, n_new
        converged = degree.ds_norm < config.stop_tol
        reason = REASON_CONVERGED if converged else (REASON_MAX_STEPS if step == config.max_steps else REASON_RUNNING)
        state = state.advance(
            step=step,
            s=s,
            director=n,
            trace=state.trace + (after,),
            ds_norm=degree.ds_norm,
            tangent_norm=update.norm,
            dissipation=dissipation,
            singular_nodes=_singular_count(s),
            min_s=float(s.min()),
            reason=reason,
        )
        logger.debug(
            "step %d: E = %.12g, |ds| = %.3e, |t| = %.3e, CG %d+%d, singular nodes %d",
            step, after.total, degree.ds_norm, update.norm, update.iterations, degree.iterations, state.singular_nodes,
        )
        if callback is not None:
            callback(state)
        if reason != REASON_RUNNING:
            break

    state = state.advance(diagnostics={**state.diagnostics, "telescoping_slack": state.telescoping_slack})
    logger.info(
        "Flow finished after %d steps (%s): E = %.10g, min s = %.4g.",
        state.step, state.reason, state.energy.total, state.min_s,
    )
    return state
