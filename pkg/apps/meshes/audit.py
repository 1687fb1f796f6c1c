from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .mesh import SimplicialMesh
from .stiffness import ACUTE_TOL, StiffnessGraph, build_stiffness

# Slack on opposite-angle sums in radians.
ANGLE_TOL = 1e-12


@dataclass
class EdgeViolation:
    i: int
    j: int
    weight: float
    angle_sum: Optional[float] = None

    @property
    def angle_sum_degrees(self) -> Optional[float]:
        if self.angle_sum is None:
            return None
        return math.degrees(self.angle_sum)

    def __str__(self) -> str:
        text = f"edge ({self.i}, {self.j}): k_ij = {self.weight:.6g}"
        if self.angle_sum is not None:
            text += f", opposite angles sum to {self.angle_sum_degrees:.4f} deg"
        return text


@dataclass
class AcutenessReport:
    dim: int
    n_edges: int
    max_abs_weight: float
    min_offdiagonal: float
    row_sum_defect: float
    violations: List[EdgeViolation] = field(default_factory=list)
    max_angle_sum: Optional[float] = None

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def negative_edge_count(self) -> int:
        return len(self.violations)

    def summary_lines(self) -> List[str]:
        lines = [
            f"dimension: {self.dim}",
            f"edges: {self.n_edges}",
            f"weakly acute: {'yes' if self.passed else 'no'}",
            f"negative k_ij edges: {self.negative_edge_count}",
            f"min off-diagonal k_ij: {self.min_offdiagonal:.6g}",
            f"max |row sum| / max|k|: {self.row_sum_defect:.3e}",
        ]
        if self.max_angle_sum is not None:
            lines.append(f"max opposite-angle sum: {math.degrees(self.max_angle_sum):.4f} deg")
        return lines


def opposite_angle_sums(mesh: SimplicialMesh) -> np.ndarray:
    """For a 2D mesh, the sum of angles opposite each edge of ``mesh.edges``.

    Boundary edges carry a single angle.
    """
    if mesh.dim != 2:
        raise ValueError("Opposite-angle sums are defined for triangle meshes only.")
    x = mesh.vertices[mesh.cells]
    n = mesh.n_nodes
    edge_keys = mesh.edges[:, 0] * np.int64(n) + mesh.edges[:, 1]
    sums = np.zeros(mesh.edges.shape[0])
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        u = x[:, a] - x[:, c]
        v = x[:, b] - x[:, c]
        cos = np.einsum("tk,tk->t", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angle = np.arccos(np.clip(cos, -1.0, 1.0))
        pair = np.sort(mesh.cells[:, [a, b]], axis=1)
        keys = pair[:, 0] * np.int64(n) + pair[:, 1]
        np.add.at(sums, np.searchsorted(edge_keys, keys), angle)
    return sums


def check_weak_acuteness(mesh: SimplicialMesh, graph: Optional[StiffnessGraph] = None) -> AcutenessReport:
    """List every edge with a negative stiffness weight.

    In 2D each reported edge also carries its opposite-angle sum, which
    exceeds pi exactly when k_ij < 0.
    """
    if graph is None:
        graph = build_stiffness(mesh)

    angle_sums = opposite_angle_sums(mesh) if mesh.dim == 2 else None
    bad = set(graph.negative_edges(ACUTE_TOL).tolist())
    if angle_sums is not None:
        bad |= set(np.flatnonzero(angle_sums > math.pi + ANGLE_TOL).tolist())

    violations = [
        EdgeViolation(
            i=int(graph.edges[e, 0]),
            j=int(graph.edges[e, 1]),
            weight=float(graph.weights[e]),
            angle_sum=float(angle_sums[e]) if angle_sums is not None else None,
        )
        for e in sorted(bad)
    ]

    row_sums = np.asarray(graph.matrix.sum(axis=1)).reshape(-1)
    defect = float(np.abs(row_sums).max() / graph.max_abs) if graph.max_abs > 0 else 0.0

    return AcutenessReport(
        dim=mesh.dim,
        n_edges=int(graph.edges.shape[0]),
        max_abs_weight=graph.max_abs,
        min_offdiagonal=graph.min_offdiagonal,
        row_sum_defect=defect,
        violations=violations,
        max_angle_sum=float(angle_sums.max()) if angle_sums is not None and angle_sums.size else None,
    )
