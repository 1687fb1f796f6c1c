from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from apps.fields.decompose import orthonormal_traceless_basis

from .tensor import LdgBulkPotential
from .wells import DoubleWell

logger = logging.getLogger(__name__)

CURVATURE_TOL = 1e-10


@dataclass(frozen=True)
class ConvexityReport:
    bounds: Tuple[float, float]
    samples: int
    min_convex_curvature: float
    min_expansive_curvature: float
    worst_convex_s: float
    worst_expansive_s: float

    @property
    def convex_part_ok(self) -> bool:
        return self.min_convex_curvature >= -CURVATURE_TOL

    @property
    def expansive_part_ok(self) -> bool:
        return self.min_expansive_curvature >= -CURVATURE_TOL

    @property
    def passed(self) -> bool:
        return self.convex_part_ok and self.expansive_part_ok

    def summary_lines(self) -> List[str]:
        lo, hi = self.bounds
        return [
            f"range: [{lo:g}, {hi:g}] ({self.samples} samples)",
            f"min psi_c curvature: {self.min_convex_curvature:.6g} at s = {self.worst_convex_s:.6g}",
            f"min psi_e curvature: {self.min_expansive_curvature:.6g} at s = {self.worst_expansive_s:.6g}",
            f"convex split: {'yes' if self.passed else 'no'}",
        ]


def _tensor_curvatures(potential: LdgBulkPotential, s: np.ndarray, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """Smallest Hessian eigenvalues of psi_c and psi_e at Q = s (e_d (x) e_d - I/d)."""
    basis = orthonormal_traceless_basis(dim)
    nb = basis.shape[0]
    e = np.zeros(dim)
    e[-1] = 1.0
    Q = s[:, None, None] * (np.outer(e, e) - np.eye(dim) / dim)[None]
    n = s.size
    Hc = np.empty((n, nb, nb))
    He = np.empty((n, nb, nb))
    for a in range(nb):
        Pa = np.broadcast_to(basis[a], (n, dim, dim))
        for b in range(a, nb):
            Pb = np.broadcast_to(basis[b], (n, dim, dim))
            Hc[:, a, b] = Hc[:, b, a] = potential.convex_hessian(Q, Pa, Pb)
            He[:, a, b] = He[:, b, a] = potential.expansive_hessian(Q, Pa, Pb)
    return np.linalg.eigvalsh(Hc)[:, 0], np.linalg.eigvalsh(He)[:, 0]


def convexity_audit(
    well: Union[DoubleWell, LdgBulkPotential],
    bounds: Optional[Tuple[float, float]] = None,
    samples: int = 1000,
    dim: int = 3,
) -> ConvexityReport:
    """Sample the curvature of both parts of the split on an interval of s.

    Scalar wells are sampled through psi_c'' and psi_e''. The tensor potential is
    sampled at uniaxial Q = s (e_z (x) e_z - I/d) through the smallest eigenvalue
    of each Hessian on traceless symmetric directions.
    """
    if bounds is None:
        bounds = well.bounds if isinstance(well, DoubleWell) else (-1.0 / (dim - 1), 1.0)
    s = np.linspace(bounds[0], bounds[1], samples)
    if isinstance(well, DoubleWell):
        conv, expa = well.d2psi_c(s), well.d2psi_e(s)
    else:
        conv, expa = _tensor_curvatures(well, s, dim)
    ic, ie = int(np.argmin(conv)), int(np.argmin(expa))
    report = ConvexityReport(
        bounds=(float(bounds[0]), float(bounds[1])),
        samples=samples,
        min_convex_curvature=float(conv[ic]),
        min_expansive_curvature=float(expa[ie]),
        worst_convex_s=float(s[ic]),
        worst_expansive_s=float(s[ie]),
    )
    if not report.passed:
        logger.warning("Bulk potential split is not convex on [%g, %g].", *report.bounds)
    return report
