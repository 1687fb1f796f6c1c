"""Compare the final states of two run directories."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from apps.core.exceptions import FieldError, MeshError
from apps.fields.snapshots import read_snapshot

from .runner import FINAL_SNAPSHOT, REPORT_NAME, SNAPSHOT_DIR

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _load(run_dir: Path):
    report = json.loads((run_dir / REPORT_NAME).read_text(encoding="utf-8"))
    if report.get("status") == "failed":
        raise FieldError(f"Run {run_dir} failed: {report.get('error')}")
    snapshot = read_snapshot(run_dir / SNAPSHOT_DIR / FINAL_SNAPSHOT)
    q = snapshot.q_tensor()
    if q is None:
        raise FieldError(f"Final snapshot of {run_dir} holds neither Q nor (s, director).")
    return report, snapshot, q


def compare_run_dirs(dir_a: PathLike, dir_b: PathLike) -> Dict[str, Any]:
    """Energy gap and nodal |Q_a - Q_b| between two finished runs on the same mesh.

    ``relative_gap`` = (E_a - E_b) / |E_a|.

    Raises:
        MeshError: the final snapshots live on different meshes.
        FieldError: a run failed or its snapshot carries no tensor data.
    """
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    report_a, snap_a, q_a = _load(dir_a)
    report_b, snap_b, q_b = _load(dir_b)
    if snap_a.points.shape != snap_b.points.shape or not np.allclose(snap_a.points, snap_b.points, atol=1e-12):
        raise MeshError(f"{dir_a} and {dir_b} were computed on different meshes.")

    diff = q_a.matrices - q_b.matrices
    nodal = np.sqrt(np.einsum("nij,nij->n", diff, diff))
    energy_a = float(report_a["energy"]["total"])
    energy_b = float(report_b["energy"]["total"])
    gap = (energy_a - energy_b) / abs(energy_a) if energy_a else float("nan")
    result = {
        "run_a": str(dir_a),
        "run_b": str(dir_b),
        "model_a": report_a.get("model"),
        "model_b": report_b.get("model"),
        "energy_a": energy_a,
        "energy_b": energy_b,
        "relative_gap": gap,
        "max_difference": float(nodal.max(initial=0.0)),
        "mean_difference": float(nodal.mean()) if nodal.size else 0.0,
        "breakdown_a": report_a["energy"],
        "breakdown_b": report_b["energy"],
    }
    logger.info("Compared %s with %s: relative gap %.4g, max |dQ| %.4g.", dir_a, dir_b, gap, result["max_difference"])
    return result
