"""Scalar double wells psi(s) = psi_c(s) - psi_e(s) with both parts convex.

Inside the admissible interval both parts are polynomials. Outside it they are
continued by their second-order Taylor expansion at the nearest endpoint, and
the convex part additionally gets a steep quartic barrier, so value, slope and
curvature match at the endpoints and flow iterates that overshoot before the
nodal clamp are pushed back.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar

from apps.core.constants import MODEL_ERICKSEN, MODEL_UNIAXIAL
from apps.core.exceptions import ConfigError
from apps.fields.fields import admissible_range

logger = logging.getLogger(__name__)

BARRIER_STRENGTH = 1.0e4


@dataclass(frozen=True, eq=False)
class DoubleWell:
    """Convex-concave split of a bulk potential in the degree of orientation."""

    name: str
    model: str
    convex: Polynomial
    expansive: Polynomial
    bounds: Tuple[float, float]
    eta_b: float = 1.0
    s_star_seed: Optional[float] = None
    barrier: float = BARRIER_STRENGTH

    def __post_init__(self) -> None:
        if not self.eta_b > 0.0:
            raise ConfigError(f"eta_B must be positive, got {self.eta_b!r}.", key="well.eta_b")
        lo, hi = self.bounds
        if not lo < hi:
            raise ConfigError(f"Empty admissible interval [{lo}, {hi}].", key="well")

    # -- evaluation -----------------------------------------------------

    def _split(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo, hi = self.bounds
        s = np.asarray(s, dtype=float)
        edge = np.clip(s, lo, hi)
        return s, edge, s - edge

    @staticmethod
    def _taylor2(poly: Polynomial, edge: np.ndarray, off: np.ndarray, order: int) -> np.ndarray:
        """Derivative ``order`` of the second-order Taylor continuation of ``poly``."""
        d1, d2 = poly.deriv(1), poly.deriv(2)
        if order == 0:
            return poly(edge) + d1(edge) * off + 0.5 * d2(edge) * off ** 2
        if order == 1:
            return d1(edge) + d2(edge) * off
        return d2(edge) + 0.0 * off

    def _convex(self, s: np.ndarray, order: int) -> np.ndarray:
        s, edge, off = self._split(s)
        base = self._taylor2(self.convex, edge, off, order)
        inside = off == 0.0
        exact = self.convex.deriv(order)(s) if order else self.convex(s)
        barrier = (
            self.barrier * off ** 4 if order == 0
            else 4.0 * self.barrier * off ** 3 if order == 1
            else 12.0 * self.barrier * off ** 2
        )
        return np.where(inside, exact, base + barrier)

    def _expansive(self, s: np.ndarray, order: int) -> np.ndarray:
        s, edge, off = self._split(s)
        exact = self.expansive.deriv(order)(s) if order else self.expansive(s)
        return np.where(off == 0.0, exact, self._taylor2(self.expansive, edge, off, order))

    def psi_c(self, s):
        return self._convex(s, 0)

    def psi_e(self, s):
        return self._expansive(s, 0)

    def dpsi_c(self, s):
        return self._convex(s, 1)

    def dpsi_e(self, s):
        return self._expansive(s, 1)

    def d2psi_c(self, s):
        return self._convex(s, 2)

    def d2psi_e(self, s):
        return self._expansive(s, 2)

    def eval_psi(self, s):
        return self.psi_c(s) - self.psi_e(s)

    def eval_dpsi(self, s):
        return self.dpsi_c(s) - self.dpsi_e(s)

    def eval_dpsi_split(self, s_new, s_old):
        """psi_c'(s_new) - psi_e'(s_old)."""
        return self.dpsi_c(s_new) - self.dpsi_e(s_old)

    # -- properties -----------------------------------------------------

    @property
    def convex_is_quadratic(self) -> bool:
        return self.convex.trim(tol=0.0).degree() <= 2

    @cached_property
    def s_star(self) -> float:
        """Global minimizer of psi on the admissible interval."""
        lo, hi = self.bounds
        grid = np.linspace(lo, hi, 2001)
        seed = float(grid[int(np.argmin(self.eval_psi(grid)))])
        if self.s_star_seed is not None and self.eval_psi(self.s_star_seed) <= self.eval_psi(seed):
            seed = float(self.s_star_seed)
        width = (hi - lo) / 1000.0
        result = minimize_scalar(
            lambda x: float(self.eval_psi(x)),
            bounds=(max(lo, seed - width), min(hi, seed + width)),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return float(result.x) if result.fun <= self.eval_psi(seed) else seed

    @property
    def bulk_weight(self) -> float:
        return 1.0 / self.eta_b

    def with_eta_b(self, eta_b: float) -> "DoubleWell":
        return DoubleWell(
            name=self.name,
            model=self.model,
            convex=self.convex,
            expansive=self.expansive,
            bounds=self.bounds,
            eta_b=eta_b,
            s_star_seed=self.s_star_seed,
            barrier=self.barrier,
        )

    def describe(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "psi_c": [float(c) for c in self.convex.coef],
            "psi_e": [float(c) for c in self.expansive.coef],
            "eta_b": self.eta_b,
            "s_star": self.s_star,
        }


def ericksen_well(eta_b: float = 1.0) -> DoubleWell:
    return DoubleWell(
        name="ericksen",
        model=MODEL_ERICKSEN,
        convex=Polynomial([0.0, 0.0, 63.0]),
        expansive=Polynomial([0.0, 0.0, 57.0, 64.0 / 3.0, -16.0]),
        bounds=admissible_range(MODEL_ERICKSEN, 3),
        eta_b=eta_b,
        s_star_seed=0.75,
    )


def uniaxial_well(eta_b: float = 1.0 / 16.0, dim: int = 3) -> DoubleWell:
    return DoubleWell(
        name="uniaxial",
        model=MODEL_UNIAXIAL,
        convex=Polynomial([1.0, 0.0, 36.7709]),
        expansive=Polynomial([0.0, 0.0, 39.27161, 4.51673, -7.39101]),
        bounds=admissible_range(MODEL_UNIAXIAL, dim),
        eta_b=eta_b,
        s_star_seed=0.700005531,
    )


def saturn_well(eta_b: float = 1.0 / 16.0, dim: int = 3) -> DoubleWell:
    return DoubleWell(
        name="saturn",
        model=MODEL_UNIAXIAL,
        convex=Polynomial([1.0, 0.0, 36.770913]),
        expansive=Polynomial([0.0, 0.0, 39.271614, 4.5167269, -7.3910077]),
        bounds=admissible_range(MODEL_UNIAXIAL, dim),
        eta_b=eta_b,
        s_star_seed=0.7,
    )


PRESETS = {
    "ericksen": ericksen_well,
    "uniaxial": uniaxial_well,
    "saturn": saturn_well,
}


def get_well(
    name: str,
    eta_b: Optional[float] = None,
    dim: int = 3,
    convex: Optional[Polynomial] = None,
    expansive: Optional[Polynomial] = None,
) -> DoubleWell:
    """A preset well, optionally with its eta_B or coefficients replaced."""
    if name not in PRESETS:
        raise ConfigError(f"Unknown well {name!r}; choose one of {', '.join(sorted(PRESETS))}.", key="well.name")
    factory = PRESETS[name]
    well = factory() if name == "ericksen" else factory(dim=dim)
    if eta_b is not None:
        well = well.with_eta_b(eta_b)
    if convex is not None or expansive is not None:
        well = DoubleWell(
            name=f"{name}-custom",
            model=well.model,
            convex=convex if convex is not None else well.convex,
            expansive=expansive if expansive is not None else well.expansive,
            bounds=well.bounds,
            eta_b=well.eta_b,
            s_star_seed=None,
        )
    return well
