"""Legacy-VTK ASCII snapshots of nodal fields, written and read through meshio."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import meshio
import numpy as np

from apps.core.exceptions import FieldError
from apps.meshes.mesh import SimplicialMesh

from .decompose import biaxiality as tensor_biaxiality
from .fields import DegreeField, LineField, OrientationField, QTensorField

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_CELL_TYPES = {2: "triangle", 3: "tetra"}
_DIMS = {"triangle": 2, "tetra": 3}


def _pad3(vectors: np.ndarray) -> np.ndarray:
    out = np.zeros((vectors.shape[0], 3))
    out[:, : vectors.shape[1]] = vectors
    return out


def snapshot_arrays(
    mesh: SimplicialMesh,
    degree: Optional[DegreeField] = None,
    orientation: Optional[OrientationField] = None,
    q_tensor: Optional[QTensorField] = None,
    biaxiality: Optional[np.ndarray] = None,
) -> Dict[str, np.ndarray]:
    """Point-data arrays for a snapshot after re-checking every field invariant."""
    arrays: Dict[str, np.ndarray] = {}
    n = mesh.n_nodes
    if degree is not None:
        # Re-validation: the constructor enforces the admissible range.
        degree = DegreeField(values=degree.values, model=degree.model, dim=degree.dim)
        if len(degree) != n:
            raise FieldError(f"Degree field has {len(degree)} nodes, mesh has {n}.")
        arrays["s"] = np.asarray(degree.values, dtype=float)
    if orientation is not None:
        orientation = type(orientation)(vectors=orientation.vectors)
        if len(orientation) != n:
            raise FieldError(f"Orientation field has {len(orientation)} nodes, mesh has {n}.")
        padded = _pad3(orientation.vectors)
        arrays["director"] = padded
        arrays["theta"] = np.einsum("ni,nj->nij", padded, padded).reshape(n, 9)
    if q_tensor is not None:
        q_tensor = QTensorField(components=q_tensor.components, dim=q_tensor.dim)
        if len(q_tensor) != n:
            raise FieldError(f"Q-tensor field has {len(q_tensor)} nodes, mesh has {n}.")
        arrays["Q"] = np.asarray(q_tensor.components, dtype=float)
        if biaxiality is None:
            biaxiality = tensor_biaxiality(q_tensor.matrices)
    if biaxiality is not None:
        beta = np.asarray(biaxiality, dtype=float).reshape(-1)
        bad = np.flatnonzero((beta < 0.0) | (beta > 1.0) | ~np.isfinite(beta))
        if bad.size:
            raise FieldError(f"Biaxiality {beta[bad[0]]!r} at node {int(bad[0])} is outside [0, 1].")
        arrays["biaxiality"] = beta
    return arrays


def write_snapshot(
    path: PathLike,
    mesh: SimplicialMesh,
    degree: Optional[DegreeField] = None,
    orientation: Optional[OrientationField] = None,
    q_tensor: Optional[QTensorField] = None,
    biaxiality: Optional[np.ndarray] = None,
) -> Path:
    path = Path(path)
    arrays = snapshot_arrays(mesh, degree, orientation, q_tensor, biaxiality)
    out = meshio.Mesh(
        points=_pad3(mesh.vertices),
        cells=[(_CELL_TYPES[mesh.dim], mesh.cells.astype(np.int64))],
        point_data=arrays,
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    meshio.write(path, out, file_format="vtk", binary=False)
    logger.debug("Wrote snapshot %s with arrays %s.", path, ", ".join(arrays))
    return path


@dataclass(frozen=True, eq=False)
class Snapshot:
    dim: int
    points: np.ndarray
    cells: np.ndarray
    arrays: Dict[str, np.ndarray]

    def degree(self) -> Optional[np.ndarray]:
        return self.arrays.get("s")

    def line_field(self) -> Optional[LineField]:
        if "director" not in self.arrays:
            return None
        return LineField.normalized(self.arrays["director"][:, : self.dim])

    def q_tensor(self) -> Optional[QTensorField]:
        """Q from the stored components, or composed from s and the director."""
        if "Q" in self.arrays:
            return QTensorField(components=self.arrays["Q"], dim=self.dim)
        if "s" in self.arrays and "director" in self.arrays:
            from .decompose import uniaxial_compose

            return uniaxial_compose(self.arrays["s"], self.line_field().vectors)
        return None


def read_snapshot(path: PathLike) -> Snapshot:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Snapshot {path} does not exist.")
    raw = meshio.read(path, file_format="vtk")
    block = next((c for c in raw.cells if c.type in _DIMS), None)
    if block is None:
        raise FieldError(f"Snapshot {path} has no triangle or tetra cells.")
    dim = _DIMS[block.type]
    arrays = {name: np.asarray(data, dtype=float) for name, data in raw.point_data.items()}
    for name, data in list(arrays.items()):
        if data.ndim == 2 and data.shape[1] == 1:
            arrays[name] = data[:, 0]
    return Snapshot(dim=dim, points=np.asarray(raw.points)[:, :dim], cells=np.asarray(block.data), arrays=arrays)
