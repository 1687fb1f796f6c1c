"""Nodal P1 fields with the pointwise constraints of the admissible classes.

All containers are frozen value types. Flow steps never mutate a field; they
build a new one, so snapshots can be shared and exported mid-run.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np

from apps.core.constants import MODEL_ERICKSEN, MODEL_STANDARD, MODEL_UNIAXIAL
from apps.core.exceptions import FieldError

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
RANGE_TOL = 1e-12


def admissible_range(model: str, dim: int) -> Tuple[float, float]:
    """Closed interval for the degree of orientation s."""
    if model == MODEL_ERICKSEN:
        return (-0.5, 1.0)
    if model in (MODEL_UNIAXIAL, MODEL_STANDARD):
        return (-1.0 / (dim - 1), 1.0)
    raise FieldError(f"Unknown model tag {model!r}.")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DegreeField:
    """Nodal degree of orientation s_h, kept inside the model's range."""

    values: np.ndarray
    model: str
    dim: int

    def __post_init__(self) -> None:
        values = _readonly(np.asarray(self.values, dtype=float).reshape(-1))
        if not np.all(np.isfinite(values)):
            raise FieldError(f"Degree field has non-finite value at node {int(np.flatnonzero(~np.isfinite(values))[0])}.")
        lo, hi = admissible_range(self.model, self.dim)
        bad = np.flatnonzero((values < lo - RANGE_TOL) | (values > hi + RANGE_TOL))
        if bad.size:
            node = int(bad[0])
            raise FieldError(f"s = {values[node]!r} at node {node} is outside [{lo:g}, {hi:g}].")
        object.__setattr__(self, "values", values)

    @classmethod
    def clamped(cls, values: np.ndarray, model: str, dim: int) -> "DegreeField":
        lo, hi = admissible_range(model, dim)
        return cls(values=np.clip(values, lo, hi), model=model, dim=dim)

    @property
    def bounds(self) -> Tuple[float, float]:
        return admissible_range(self.model, self.dim)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def with_values(self, values: np.ndarray) -> "DegreeField":
        return DegreeField(values=values, model=self.model, dim=self.dim)


def _normalize(vectors: np.ndarray) -> np.ndarray:
    v = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(v, axis=1)
    zero = np.flatnonzero(~(norms > 0.0))
    if zero.size:
        raise FieldError(f"Cannot normalize the zero vector at node {int(zero[0])}.")
    return v / norms[:, None]


def _check_unit(vectors: np.ndarray, what: str) -> np.ndarray:
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or v.shape[1] not in (2, 3):
        raise FieldError(f"{what} needs an (N, 2) or (N, 3) array, got shape {v.shape}.")
    dev = np.abs(np.linalg.norm(v, axis=1) - 1.0)
    bad = np.flatnonzero(~(dev <= UNIT_TOL))
    if bad.size:
        node = int(bad[0])
        raise FieldError(f"{what} is not unit at node {node} (|n| - 1 = {dev[node]:.3e}).")
    return _readonly(v)


@dataclass(frozen=True, eq=False)
class DirectorField:
    """Unit vectors n_i at the nodes."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "vectors", _check_unit(self.vectors, "Director"))

    @classmethod
    def normalized(cls, vectors: np.ndarray) -> "DirectorField":
        return cls(vectors=_normalize(vectors))

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


@dataclass(frozen=True, eq=False)
class LineField:
    """Rank-one projectors Theta_i = n_i (x) n_i stored through a generating n_i."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "vectors", _check_unit(self.vectors, "Line field generator"))

    @classmethod
    def normalized(cls, vectors: np.ndarray) -> "LineField":
        return cls(vectors=_normalize(vectors))

    @classmethod
    def from_projectors(cls, projectors: np.ndarray) -> "LineField":
        """Recover generators from (nearly) rank-one projectors."""
        w, v = np.linalg.eigh(np.asarray(projectors, dtype=float))
        return cls.normalized(v[:, :, -1])

    @cached_property
    def projectors(self) -> np.ndarray:
        theta = np.einsum("ni,nj->nij", self.vectors, self.vectors)
        theta.setflags(write=False)
        return theta

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


OrientationField = Union[DirectorField, LineField]


@dataclass(frozen=True, eq=False)
class AuxVectorField:
    """u_h = I_h(s_h n_h), or its tilde variant with |s_h|."""

    values: np.ndarray
    tilde: bool = False


@dataclass(frozen=True, eq=False)
class AuxTensorField:
    """U_h = I_h(s_h Theta_h), or its tilde variant with |s_h|."""

    values: np.ndarray
    tilde: bool = False


def make_aux(
    s: DegreeField,
    orientation: OrientationField,
    tilde: bool = False,
) -> Union[AuxVectorField, AuxTensorField]:
    """Nodal products s_i n_i or s_i Theta_i (|s_i| when ``tilde``)."""
    if len(s) != len(orientation):
        raise FieldError(f"Degree field has {len(s)} nodes, orientation field has {len(orientation)}.")
    weight = np.abs(s.values) if tilde else s.values
    if isinstance(orientation, LineField):
        return AuxTensorField(values=_readonly(weight[:, None, None] * orientation.projectors), tilde=tilde)
    return AuxVectorField(values=_readonly(weight[:, None] * orientation.vectors), tilde=tilde)


def truncate_nodewise(s: DegreeField, rho: float, c0: Optional[float] = None) -> DegreeField:
    """Clamp s into [lo + rho, hi - rho].

    ``c0`` is the distance of the boundary data from the range ends; rho must
    lie in [0, c0]. Without boundary data c0 defaults to half the interval.
    """
    lo, hi = s.bounds
    if c0 is None:
        c0 = 0.5 * (hi - lo)
    if not (0.0 <= rho <= c0):
        raise FieldError(f"Truncation level rho = {rho!r} is outside [0, {c0!r}].")
    return s.with_values(np.clip(s.values, lo + rho, hi - rho))


@dataclass(frozen=True, eq=False)
class QTensorField:
    """Symmetric traceless tensors through independent components.

    3D components are (q11, q12, q13, q22, q23) with q33 = -q11 - q22;
    2D components are (q11, q12) with q22 = -q11.
    """

    components: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        comps = np.asarray(self.components, dtype=float)
        expected = n_components(self.dim)
        if comps.ndim != 2 or comps.shape[1] != expected:
            raise FieldError(f"{self.dim}D Q-tensor field needs {expected} components per node, got {comps.shape}.")
        if not np.all(np.isfinite(comps)):
            raise FieldError("Q-tensor field contains non-finite components.")
        object.__setattr__(self, "components", _readonly(comps))

    @cached_property
    def matrices(self) -> np.ndarray:
        from .decompose import components_to_matrices

        mats = components_to_matrices(self.components, self.dim)
        mats.setflags(write=False)
        return mats

    @classmethod
    def from_matrices(cls, matrices: np.ndarray) -> "QTensorField":
        from .decompose import matrices_to_components

        mats = np.asarray(matrices, dtype=float)
        dim = mats.shape[-1]
        scale = max(float(np.abs(mats).max()), 1.0)
        if np.abs(mats - np.swapaxes(mats, 1, 2)).max(initial=0.0) > 1e-12 * scale:
            raise FieldError("Q-tensor matrices are not symmetric.")
        if np.abs(np.trace(mats, axis1=1, axis2=2)).max(initial=0.0) > 1e-12 * scale:
            raise FieldError("Q-tensor matrices are not traceless.")
        return cls(components=matrices_to_components(mats, dim), dim=dim)

    def __len__(self) -> int:
        return int(self.components.shape[0])

    def eigenvalue_violations(self) -> np.ndarray:
        """Nodes whose eigenvalues leave [-1/d, 1 - 1/d] (reported, not enforced)."""
        w = np.linalg.eigvalsh(self.matrices)
        lo, hi = -1.0 / self.dim, 1.0 - 1.0 / self.dim
        return np.flatnonzero((w.min(axis=1) < lo - 1e-12) | (w.max(axis=1) > hi + 1e-12))


def n_components(dim: int) -> int:
    if dim == 2:
        return 2
    if dim == 3:
        return 5
    raise FieldError(f"Unsupported dimension {dim}.")


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Prescribed nodal values on the Dirichlet parts of the boundary.

    ``degree_nodes``/``degree_values`` hold g on Gamma_s and
    ``director_nodes``/``director_values`` hold unit q on Gamma_n (the
    generators of M = q (x) q for line fields).
    """

    degree_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    degree_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    director_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    director_values: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self) -> None:
        dn = np.asarray(self.degree_nodes, dtype=np.int64).reshape(-1)
        dv = np.asarray(self.degree_values, dtype=float).reshape(-1)
        if dn.shape != dv.shape:
            raise FieldError(f"{dn.size} degree boundary nodes but {dv.size} values.")
        nn = np.asarray(self.director_nodes, dtype=np.int64).reshape(-1)
        nv = np.asarray(self.director_values, dtype=float)
        if nn.size == 0:
            nv = nv.reshape(0, nv.shape[-1] if nv.ndim == 2 else 3)
        elif nv.shape[0] != nn.size:
            raise FieldError(f"{nn.size} director boundary nodes but {nv.shape[0]} values.")
        else:
            nv = _check_unit(nv, "Boundary director")
        object.__setattr__(self, "degree_nodes", dn)
        object.__setattr__(self, "degree_values", _readonly(dv))
        object.__setattr__(self, "director_nodes", nn)
        object.__setattr__(self, "director_values", _readonly(nv))

    def c0(self, model: str, dim: int) -> float:
        """Distance of g from the ends of the admissible interval."""
        lo, hi = admissible_range(model, dim)
        if self.degree_values.size == 0:
            return 0.5 * (hi - lo)
        return float(min((self.degree_values - lo).min(), (hi - self.degree_values).min()))

    def satisfies_c0(self, model: str, dim: int) -> bool:
        return self.c0(model, dim) > 0.0

    def apply(self, s: np.ndarray, vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Copies of (s, n) with the prescribed values imposed."""
        s = np.array(s, dtype=float, copy=True)
        vectors = np.array(vectors, dtype=float, copy=True)
        s[self.degree_nodes] = self.degree_values
        if self.director_nodes.size:
            vectors[self.director_nodes] = self.director_values
        return s, vectors

    def tensor_values(self, dim: int) -> np.ndarray:
        """U = g (q (x) q - I/d) components at ``director_nodes``.

        Requires g at every director node.
        """
        from .decompose import matrices_to_components

        lookup = dict(zip(self.degree_nodes.tolist(), self.degree_values.tolist()))
        missing = [int(n) for n in self.director_nodes if int(n) not in lookup]
        if missing:
            raise FieldError(f"No prescribed degree at director boundary node {missing[0]}.")
        g = np.array([lookup[int(n)] for n in self.director_nodes])
        q = self.director_values
        mats = g[:, None, None] * (np.einsum("ni,nj->nij", q, q) - np.eye(dim) / dim)
        return matrices_to_components(mats, dim)
