"""Mesh files: the plain-text listing format, foreign formats via meshio,
and the loader for externally meshed domains with a spherical hole.

Plain-text layout::

    dim n_vertices n_cells n_bfacets
    x y [z] [signed_distance]        # n_vertices lines
    i0 i1 i2 [i3]                    # n_cells lines, 0-based
    i0 i1 [i2] label                 # n_bfacets lines

Floats are written with 17 significant digits so that write -> read is exact.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import meshio
import numpy as np

from apps.core.exceptions import MeshError, MeshFormatError

from .audit import AcutenessReport, check_weak_acuteness
from .mesh import SimplicialMesh, boundary_faces

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TEXT_SUFFIXES = (".mesh", ".txt", ".nmesh")
INCLUSION_LABEL = "inclusion"
OUTER_LABEL = "outer"

_CELL_TYPES = {2: "triangle", 3: "tetra"}
_FACET_TYPES = {2: "line", 3: "triangle"}
_TAG_KEYS = ("gmsh:physical", "medit:ref", "cell_tags")


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_mesh(path: PathLike, mesh: SimplicialMesh) -> None:
    path = Path(path)
    lines = [f"{mesh.dim} {mesh.n_nodes} {mesh.n_cells} {mesh.facets.shape[0]}"]
    sd = mesh.signed_distance
    for idx, x in enumerate(mesh.vertices):
        row = [_fmt(float(v)) for v in x]
        if sd is not None:
            row.append(_fmt(float(sd[idx])))
        lines.append(" ".join(row))
    for cell in mesh.cells:
        lines.append(" ".join(str(int(v)) for v in cell))
    for facet, label in zip(mesh.facets, mesh.facet_labels):
        lines.append(" ".join(str(int(v)) for v in facet) + f" {label}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_mesh(path: PathLike) -> SimplicialMesh:
    """Parse the plain-text format.

    Raises:
        MeshFormatError: malformed header or lines.
        MeshError: structurally invalid mesh (degenerate cell, stray facet).
    """
    path = Path(path)
    raw = path.read_text(encoding="utf-8").splitlines()
    # Keep original line numbers for diagnostics; skip blanks and comments.
    rows: List[Tuple[int, List[str]]] = [
        (n, line.split()) for n, line in enumerate(raw, start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not rows:
        raise MeshFormatError("empty mesh file", path=str(path))

    header_line, header = rows[0]
    try:
        dim, nv, nc, nf = (int(tok) for tok in header)
    except ValueError:
        raise MeshFormatError(
            "header must be 'dim n_vertices n_cells n_bfacets'", path=str(path), line=header_line
        ) from None
    if dim not in (2, 3):
        raise MeshFormatError(f"unsupported dimension {dim}", path=str(path), line=header_line)
    if len(rows) - 1 < nv + nc + nf:
        raise MeshFormatError(
            f"expected {nv + nc + nf} data lines after the header, found {len(rows) - 1}",
            path=str(path),
        )

    body = rows[1:]
    vertices = np.empty((nv, dim))
    sd_values: List[float] = []
    for k in range(nv):
        n, toks = body[k]
        if len(toks) not in (dim, dim + 1):
            raise MeshFormatError(f"vertex line needs {dim} or {dim + 1} numbers", path=str(path), line=n)
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            raise MeshFormatError("non-numeric vertex coordinate", path=str(path), line=n) from None
        vertices[k] = vals[:dim]
        if len(vals) == dim + 1:
            sd_values.append(vals[dim])
    if sd_values and len(sd_values) != nv:
        raise MeshFormatError("signed distance column present on some vertices only", path=str(path))

    cells = np.empty((nc, dim + 1), dtype=np.int64)
    for k in range(nc):
        n, toks = body[nv + k]
        if len(toks) != dim + 1:
            raise MeshFormatError(f"cell line needs {dim + 1} indices", path=str(path), line=n)
        try:
            cells[k] = [int(t) for t in toks]
        except ValueError:
            raise MeshFormatError("non-integer cell index", path=str(path), line=n) from None

    facets = np.empty((nf, dim), dtype=np.int64)
    labels: List[str] = []
    for k in range(nf):
        n, toks = body[nv + nc + k]
        if len(toks) != dim + 1:
            raise MeshFormatError(f"facet line needs {dim} indices and a label", path=str(path), line=n)
        try:
            facets[k] = [int(t) for t in toks[:dim]]
        except ValueError:
            raise MeshFormatError("non-integer facet index", path=str(path), line=n) from None
        labels.append(toks[dim])

    return SimplicialMesh(
        vertices=vertices,
        cells=cells,
        facets=facets,
        facet_labels=tuple(labels),
        signed_distance=np.asarray(sd_values) if sd_values else None,
    )


def _from_meshio(path: Path) -> SimplicialMesh:
    try:
        m = meshio.read(str(path))
    except meshio.ReadError as exc:
        raise MeshFormatError(str(exc), path=str(path)) from exc

    dim = 3 if any(block.type == "tetra" for block in m.cells) else 2
    points = np.asarray(m.points, dtype=float)[:, :dim]
    names = {int(tag): name for name, (tag, *_rest) in (m.field_data or {}).items()}

    cells = [block.data for block in m.cells if block.type == _CELL_TYPES[dim]]
    if not cells:
        raise MeshFormatError(f"no {_CELL_TYPES[dim]} cells found", path=str(path))
    cells = np.vstack(cells)

    facets: List[np.ndarray] = []
    labels: List[str] = []
    for b, block in enumerate(m.cells):
        if block.type != _FACET_TYPES[dim]:
            continue
        tags = None
        for key in _TAG_KEYS:
            if key in m.cell_data:
                tags = np.asarray(m.cell_data[key][b]).reshape(-1)
                break
        facets.append(block.data)
        if tags is None:
            labels.extend(["boundary"] * block.data.shape[0])
        else:
            labels.extend(names.get(int(t), str(int(t))) for t in tags)

    if facets:
        facet_arr = np.vstack(facets)
    else:
        facet_arr = boundary_faces(cells, points.shape[0])
        labels = ["boundary"] * facet_arr.shape[0]

    return SimplicialMesh(vertices=points, cells=cells, facets=facet_arr, facet_labels=tuple(labels))


def load_mesh(path: PathLike) -> SimplicialMesh:
    """Read a mesh file by suffix.

    Raises:
        FileNotFoundError: no such file.
        MeshFormatError: the file is malformed or describes an invalid mesh;
            ``cell`` and ``facet`` survive from the structural check.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mesh file not found: {path}")
    try:
        if path.suffix.lower() in TEXT_SUFFIXES:
            mesh = read_mesh(path)
        else:
            mesh = _from_meshio(path)
    except MeshFormatError:
        raise
    except MeshError as exc:
        error = MeshFormatError(str(exc), path=str(path))
        error.cell, error.facet = exc.cell, exc.facet
        raise error from exc
    logger.info("Loaded %s from %s", mesh, path)
    return mesh


@dataclass
class AuditedMesh:
    mesh: SimplicialMesh
    report: AcutenessReport


def mesh_with_spherical_hole(
    path: PathLike,
    center: Sequence[float],
    radius: float,
    tol: float = 1e-6,
) -> AuditedMesh:
    """Load an externally generated mesh of a domain with a spherical hole.

    Boundary facets whose vertices all lie on |x - center| = radius are
    relabelled ``inclusion``; every other boundary facet becomes ``outer``.
    The weak-acuteness audit travels with the mesh.
    """
    mesh = load_mesh(path)
    c = np.asarray(center, dtype=float)
    if c.shape != (mesh.dim,):
        raise MeshError(f"Hole center must have {mesh.dim} coordinates.")
    if radius <= 0:
        raise MeshError("Hole radius must be positive.")

    dist = np.linalg.norm(mesh.vertices[mesh.facets] - c, axis=2)
    on_sphere = np.all(np.abs(dist - radius) <= tol * max(radius, 1.0), axis=1)
    if not on_sphere.any():
        raise MeshError(f"No boundary facet of {path} lies on the sphere |x - {c.tolist()}| = {radius}.")

    labels = [INCLUSION_LABEL if hit else OUTER_LABEL for hit in on_sphere]
    relabelled = mesh.relabel(labels)
    report = check_weak_acuteness(relabelled)
    if not report.passed:
        logger.warning(
            "%s is not weakly acute: %d edges with negative k_ij.", path, report.negative_edge_count
        )
    return AuditedMesh(mesh=relabelled, report=report)
