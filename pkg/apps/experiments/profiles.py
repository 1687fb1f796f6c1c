"""Analytic director profiles for boundary and initial data.

Each profile maps every mesh node to a unit vector in R^d. Parameters come
from the ``bc.director.*`` / ``init.director.*`` config keys.
"""
from __future__ import annotations

import logging
from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np

from apps.core.exceptions import ConfigError
from apps.meshes.io import INCLUSION_LABEL
from apps.meshes.mesh import SimplicialMesh

logger = logging.getLogger(__name__)

Profile = Callable[[SimplicialMesh, Mapping[str, Any], np.random.Generator], np.ndarray]


def _planar(mesh: SimplicialMesh, theta: np.ndarray) -> np.ndarray:
    out = np.zeros((mesh.n_nodes, mesh.dim))
    out[:, 0] = np.cos(theta)
    out[:, 1] = np.sin(theta)
    return out


def _unit(vectors: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=-1)
    if np.any(norms == 0.0):
        raise ConfigError(f"{what} has a zero vector.", key="bc.director.direction")
    return vectors / norms[..., None]


def _center(mesh: SimplicialMesh, params: Mapping[str, Any]) -> np.ndarray:
    center = params.get("center")
    if center is None:
        lo = mesh.vertices.min(axis=0)
        hi = mesh.vertices.max(axis=0)
        return 0.5 * (lo + hi)
    c = np.zeros(mesh.dim)
    given = np.asarray(center, dtype=float)[: mesh.dim]
    c[: given.size] = given
    return c


def _direction(mesh: SimplicialMesh, params: Mapping[str, Any]) -> np.ndarray:
    direction = params.get("direction")
    if direction is None:
        direction = (0.0, 0.0, 1.0) if mesh.dim == 3 else (1.0, 0.0)
    d = np.asarray(direction, dtype=float)
    if d.size != mesh.dim:
        raise ConfigError(f"director direction needs {mesh.dim} components, got {d.size}.", key="bc.director.direction")
    return _unit(d, "Director direction")


def _param(params: Mapping[str, Any], name: str, default: float) -> float:
    value = params.get(name)
    return default if value is None else float(value)


def _angle(x: np.ndarray, center, degree: float) -> np.ndarray:
    return degree * np.arctan2(x[:, 1] - center[1], x[:, 0] - center[0])


def uniform(mesh, params, rng):
    return np.tile(_direction(mesh, params), (mesh.n_nodes, 1))


def point_defect(mesh, params, rng):
    """n = (cos m phi, sin m phi[, 0]) with phi the polar angle about the center."""
    theta = _angle(mesh.vertices, _center(mesh, params), _param(params, "degree", 1.0))
    return _planar(mesh, theta)


def twisted_half_defect(mesh, params, rng):
    """theta = (1 - z) theta_0 + z theta_1 + twist z with half-degree angles about two centers."""
    centers = params.get("centers") or (0.3, 0.3, 0.7, 0.7)
    if len(centers) != 4:
        raise ConfigError("twisted_half_defect needs centers = x0, y0, x1, y1.", key="bc.director.centers")
    degree = _param(params, "degree", 0.5)
    twist = _param(params, "twist", np.pi)
    x = mesh.vertices
    z = x[:, 2] if mesh.dim == 3 else np.zeros(mesh.n_nodes)
    theta0 = _angle(x, centers[0:2], degree)
    theta1 = _angle(x, centers[2:4], degree)
    return _planar(mesh, (1.0 - z) * theta0 + z * theta1 + twist * z)


def _inclusion_normals(mesh: SimplicialMesh, center: np.ndarray, base: np.ndarray) -> np.ndarray:
    out = np.array(base, copy=True)
    nodes = mesh.boundary_nodes([INCLUSION_LABEL]) if INCLUSION_LABEL in mesh.labels else np.zeros(0, dtype=np.int64)
    if nodes.size:
        out[nodes] = _unit(mesh.vertices[nodes] - center, "Inclusion normal")
    else:
        logger.warning("Mesh has no %r facets; the normal profile reduces to the outer directions.", INCLUSION_LABEL)
    return out


def inclusion_normal(mesh, params, rng):
    """The outward normal of the inclusion on its nodes, a constant direction elsewhere."""
    return _inclusion_normals(mesh, _center(mesh, params), uniform(mesh, params, rng))


def split_poles(mesh, params, rng):
    """-e_z below the center plane, e_z on and above it."""
    if mesh.dim != 3:
        raise ConfigError("split_poles needs a 3D mesh.", key="bc.director.profile")
    z = mesh.vertices[:, 2] - _center(mesh, params)[2]
    out = np.zeros((mesh.n_nodes, 3))
    out[:, 2] = np.where(z < 0.0, -1.0, 1.0)
    return out


def pole_interpolation(mesh, params, rng):
    """Inclusion normals; elsewhere a rotation in the x-z plane from -e_z to e_z.

    The rotation angle is linear in z over [center - width, center + width].
    """
    if mesh.dim != 3:
        raise ConfigError("pole_interpolation needs a 3D mesh.", key="bc.director.profile")
    center = _center(mesh, params)
    width = _param(params, "width", 1.0)
    if width <= 0.0:
        raise ConfigError("width must be positive.", key="bc.director.width")
    t = np.clip((mesh.vertices[:, 2] - center[2]) / width, -1.0, 1.0)
    alpha = 0.5 * np.pi * (1.0 - t)
    base = np.column_stack([np.sin(alpha), np.zeros(mesh.n_nodes), np.cos(alpha)])
    return _inclusion_normals(mesh, center, base)


def random(mesh, params, rng):
    return _unit(rng.standard_normal((mesh.n_nodes, mesh.dim)), "Random director")


PROFILES: Dict[str, Profile] = {
    "uniform": uniform,
    "point_defect": point_defect,
    "twisted_half_defect": twisted_half_defect,
    "inclusion_normal": inclusion_normal,
    "pole_interpolation": pole_interpolation,
    "split_poles": split_poles,
    "random": random,
}

PROFILE_CHOICES = tuple((name, name.replace("_", " ")) for name in PROFILES)


def evaluate_profile(
    name: str,
    mesh: SimplicialMesh,
    params: Optional[Mapping[str, Any]] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    if name not in PROFILES:
        raise ConfigError(f"unknown director profile {name!r}.", key="bc.director.profile")
    return PROFILES[name](mesh, dict(params or {}), rng if rng is not None else np.random.default_rng(0))
