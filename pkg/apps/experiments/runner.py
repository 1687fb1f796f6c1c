"""Run a validated experiment and write its artifacts.

An output directory receives:

- ``config.txt``: the canonical configuration;
- ``energy.csv``: one row per recorded step;
- ``snapshots/step_NNNNNN.vtk`` every ``output.snapshot_every`` steps plus
  ``snapshots/final.vtk``;
- ``report.json``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from django.conf import settings

from apps.core.constants import MODEL_ERICKSEN, MODEL_STANDARD, MODEL_UNIAXIAL
from apps.core.exceptions import FieldError, NematicError
from apps.energy.breakdown import CSV_COLUMNS, EnergyBreakdown
from apps.fields.decompose import uniaxial_compose
from apps.fields.defects import LoopSpec, local_minima, winding_on_loop
from apps.fields.fields import DegreeField, DirectorField, LineField
from apps.fields.snapshots import write_snapshot
from apps.flow.driver import run_flow
from apps.flow.state import REASON_RUNNING, FlowState
from apps.meshes.mesh import SimplicialMesh
from apps.standard_ldg.compare import cross_model_compare
from apps.standard_ldg.scheme import LdgFlowResult, run_ldg_flow

from .builders import BuiltExperiment, build_experiment
from .configfile import format_value
from .forms import ExperimentConfig, SOURCE_UNIAXIAL, parse_loops
from .models import EnergyRecord, ExperimentRun

logger = logging.getLogger(__name__)

CSV_NAME = "energy.csv"
REPORT_NAME = "report.json"
CONFIG_NAME = "config.txt"
SNAPSHOT_DIR = "snapshots"
FINAL_SNAPSHOT = "final.vtk"


def _cell(value: Optional[float]) -> str:
    return "" if value is None else format_value(float(value))


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


@dataclass
class EnergyRow:
    step: int
    energy: EnergyBreakdown
    ds_norm: Optional[float]
    min_s: Optional[float]
    tangent_norm: Optional[float]

    def cells(self) -> List[str]:
        e = self.energy
        return [str(self.step)] + [
            _cell(v)
            for v in (e.main, e.bulk + e.surface, e.anchoring, e.electric, e.total, self.ds_norm, self.min_s, self.tangent_norm)
        ]


class Recorder:
    """Flow callback writing CSV rows and periodic snapshots."""

    def __init__(
        self,
        out_dir: Path,
        mesh: SimplicialMesh,
        model: str,
        csv_every: int = 1,
        snapshot_every: int = 0,
        step_offset: int = 0,
    ):
        self.out_dir = out_dir
        self.mesh = mesh
        self.model = model
        self.csv_every = csv_every
        self.snapshot_every = snapshot_every
        self.step_offset = step_offset
        self.rows: List[EnergyRow] = []
        self.snapshots: List[Path] = []

    def __call__(self, state) -> None:
        final = state.reason != REASON_RUNNING
        step = state.step + self.step_offset
        if isinstance(state, LdgFlowResult):
            row = EnergyRow(step, state.energy, state.dq_norm, state.min_degree, None)
        else:
            row = EnergyRow(step, state.energy, state.ds_norm, state.min_s, state.tangent_norm)
        if step % self.csv_every == 0 or final:
            self.rows.append(row)
        if self.snapshot_every and step % self.snapshot_every == 0:
            self.snapshots.append(self.snapshot(state, f"step_{step:06d}.vtk"))

    def snapshot(self, state, name: str) -> Path:
        path = self.out_dir / SNAPSHOT_DIR / name
        if isinstance(state, LdgFlowResult):
            return write_snapshot(path, self.mesh, q_tensor=state.field, biaxiality=state.biaxiality)
        dim = self.mesh.dim
        degree = DegreeField(values=state.s, model=self.model, dim=dim)
        if self.model == MODEL_ERICKSEN:
            return write_snapshot(path, self.mesh, degree=degree, orientation=DirectorField(vectors=state.director))
        return write_snapshot(
            path,
            self.mesh,
            degree=degree,
            orientation=LineField(vectors=state.director),
            q_tensor=uniaxial_compose(degree, state.director),
        )

    def write_csv(self, path: Path) -> Path:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(row.cells())
        return path


def _leading_directors(matrices: np.ndarray) -> np.ndarray:
    _, vectors = np.linalg.eigh(matrices)
    return vectors[:, :, -1]


def defect_report(
    mesh: SimplicialMesh,
    s: np.ndarray,
    orientation,
    loops: Sequence[LoopSpec],
    minima_below: Optional[float] = None,
) -> Dict[str, Any]:
    """Windings on the configured loops and, in 2D, the interior minima of s."""
    windings = []
    for loop in loops:
        entry: Dict[str, Any] = {"loop": loop.label(), "winding": None}
        try:
            entry["winding"] = winding_on_loop(mesh, orientation, s, loop)
        except FieldError as exc:
            entry["error"] = str(exc)
            logger.warning("No winding on loop %s: %s", loop.label(), exc)
        windings.append(entry)
    out: Dict[str, Any] = {"windings": windings}
    if mesh.dim == 2:
        nodes = local_minima(mesh, s, below=minima_below)
        out["minima"] = [
            {"node": n, "x": [float(c) for c in mesh.vertices[n]], "s": float(s[n])} for n in nodes
        ]
    return out


@dataclass
class RunResult:
    name: str
    out_dir: Path
    report: Dict[str, Any]
    csv_path: Path
    snapshots: List[Path] = field(default_factory=list)
    run: Optional[ExperimentRun] = None


def _output_dir(config: ExperimentConfig, out_dir) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    configured = config["output"].get("dir")
    if configured:
        return Path(configured)
    return Path(settings.NEMATIC["OUTPUT_ROOT"]) / (config.name or "experiment")


def _run_constrained(built: BuiltExperiment, recorder: Recorder, flow=None) -> FlowState:
    return run_flow(built.model, built.s0, built.n0, built.boundary, flow or built.flow, callback=recorder)


def _base_report(config: ExperimentConfig, steps: int, reason: str, energy, initial, min_s) -> Dict[str, Any]:
    return {
        "name": config.name,
        "model": config.model,
        "steps": steps,
        "reason": reason,
        "min_s": _finite(min_s),
        "energy": energy.as_dict(),
        "initial_energy": initial.as_dict(),
    }


def make_recorder(built: BuiltExperiment, out_dir: Path) -> Recorder:
    config = built.config
    output = config["output"]
    return Recorder(
        out_dir,
        built.mesh,
        MODEL_UNIAXIAL if config.model == MODEL_STANDARD else config.model,
        csv_every=output.get("csv_every") or 1,
        snapshot_every=output.get("snapshot_every") or 0,
    )


def execute(built: BuiltExperiment, out_dir: Path, recorder: Optional[Recorder] = None) -> Dict[str, Any]:
    """Run the flow(s) of a built experiment into ``out_dir`` and return the report.

    Rows recorded so far stay on ``recorder`` when a flow raises.
    """
    config = built.config
    loops = parse_loops(config["report"].get("loops") or "")
    minima_below = config["report"].get("minima_below")
    recorder = recorder or make_recorder(built, out_dir)

    if config.model != MODEL_STANDARD:
        state = _run_constrained(built, recorder)
        recorder.snapshots.append(recorder.snapshot(state, FINAL_SNAPSHOT))
        report = _base_report(config, state.step, state.reason, state.energy, state.initial_energy, state.min_s)
        report["singular_nodes"] = state.singular_nodes
        report["telescoping_slack"] = state.telescoping_slack
        report["dissipation"] = state.dissipation
        orientation = DirectorField(vectors=state.director) if config.model == MODEL_ERICKSEN else LineField(vectors=state.director)
        report.update(defect_report(built.mesh, state.s, orientation, loops, minima_below))
    else:
        q0 = built.q0
        uni_state = None
        if config["init"].get("source") == SOURCE_UNIAXIAL:
            dt = config["init"].get("uniaxial_dt") or built.flow.dt
            # The uniaxial start writes CSV rows only.
            snapshot_every, recorder.snapshot_every = recorder.snapshot_every, 0
            uni_state = _run_constrained(built, recorder, flow=built.flow.with_dt(dt))
            recorder.snapshot_every = snapshot_every
            q0 = built.problem.impose(uniaxial_compose(uni_state.s, uni_state.director).components)
            recorder.step_offset = uni_state.step + 1
            logger.info("Uniaxial start computed in %d steps; starting the standard flow.", uni_state.step)
        result = run_ldg_flow(built.problem, q0, built.flow, callback=recorder)
        recorder.snapshots.append(recorder.snapshot(result, FINAL_SNAPSHOT))
        report = _base_report(config, result.step, result.reason, result.energy, result.initial_energy, result.min_degree)
        report["max_biaxiality"] = float(result.biaxiality.max(initial=0.0))
        orientation = LineField.normalized(_leading_directors(result.field.matrices))
        report.update(defect_report(built.mesh, result.degree, orientation, loops, minima_below))
        if uni_state is not None:
            comparison = cross_model_compare(built.model, uni_state.s, uni_state.director, built.problem, result.q)
            report["uniaxial"] = {
                "steps": uni_state.step,
                "reason": uni_state.reason,
                "energy": uni_state.energy.as_dict(),
                "telescoping_slack": uni_state.telescoping_slack,
            }
            report["comparison"] = comparison.as_dict()

    report["csv"] = CSV_NAME
    report["snapshots"] = [str(p.relative_to(out_dir)) for p in recorder.snapshots]
    recorder.write_csv(out_dir / CSV_NAME)
    report["_rows"] = recorder.rows
    return report


def _write_report(out_dir: Path, report: Dict[str, Any]) -> Path:
    path = out_dir / REPORT_NAME
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _json_safe(report: Dict[str, Any]) -> Dict[str, Any]:
    """Round-trip through JSON with NaN and infinities as null."""

    def clean(value):
        if isinstance(value, np.ndarray):
            return clean(value.tolist())
        if isinstance(value, np.generic):
            return clean(value.item())
        if isinstance(value, float):
            return _finite(value)
        if isinstance(value, dict):
            return {k: clean(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [clean(v) for v in value]
        return value

    return clean(report)


def _record_failure(
    config: ExperimentConfig,
    out: Path,
    run: Optional[ExperimentRun],
    recorder: Optional[Recorder],
    exc: Exception,
) -> Dict[str, Any]:
    """Keep the trace up to the failing step: partial CSV, rows and diagnostics."""
    report: Dict[str, Any] = {
        "name": config.name,
        "model": config.model,
        "status": "failed",
        "error": str(exc),
        "error_type": type(exc).__name__,
        "diagnostics": getattr(exc, "diagnostics", None) or {},
    }
    for key in ("step", "before", "after"):
        if getattr(exc, key, None) is not None:
            report[key] = getattr(exc, key)
    rows = recorder.rows if recorder is not None else []
    if rows:
        try:
            recorder.write_csv(out / CSV_NAME)
            report["csv"] = CSV_NAME
        except OSError as write_error:
            logger.warning("Could not write the partial energy trace: %s", write_error)
        report["recorded_steps"] = len(rows)
    report = _json_safe(report)
    try:
        _write_report(out, report)
    except OSError as write_error:
        logger.warning("Could not write the failure report: %s", write_error)
    if run is not None:
        _persist_rows(run, rows)
        run.finish(ExperimentRun.STATUS_FAILED, error=str(exc), report=report)
    logger.error("Run %s failed: %s", config.name or config.source.source, exc)
    return report


def _persist_rows(run: ExperimentRun, rows: Sequence[EnergyRow]) -> None:
    EnergyRecord.objects.bulk_create([
        EnergyRecord(
            run=run,
            step=row.step,
            e_main=row.energy.main,
            e_bulk=row.energy.bulk + row.energy.surface,
            e_anchor=row.energy.anchoring,
            e_electric=row.energy.electric,
            e_total=row.energy.total,
            ds_norm=_finite(row.ds_norm),
            min_s=_finite(row.min_s),
            tangent_norm=_finite(row.tangent_norm),
        )
        for row in rows
    ])


def run_experiment(config: ExperimentConfig, out_dir=None, persist: bool = True) -> RunResult:
    """Build, run and record one experiment.

    The CSV and snapshots depend only on the configuration, so reruns with
    the same seed give byte-identical CSV files.

    Raises:
        ConfigError: labels or vector sizes do not fit the mesh.
        NumericalError: the flow failed; ``report.json`` records the error and
            its diagnostics, and the rows recorded before it are kept.
    """
    out = _output_dir(config, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text = config.canonical_text()
    (out / CONFIG_NAME).write_text(text, encoding="utf-8")

    run = None
    if persist:
        run = ExperimentRun.objects.create(
            name=config.name or config.source.source,
            model=config.model,
            config_text=text,
            output_dir=str(out),
        )
    logger.info("Running %s into %s.", config.name or config.source.source, out)

    recorder = None
    try:
        built = build_experiment(config)
        recorder = make_recorder(built, out)
        report = execute(built, out, recorder)
    except (NematicError, OSError) as exc:
        _record_failure(config, out, run, recorder, exc)
        raise
    except Exception as exc:
        logger.exception("Run %s stopped on an unexpected error.", config.name or config.source.source)
        if run is not None:
            run.finish(ExperimentRun.STATUS_FAILED, error=f"{type(exc).__name__}: {exc}")
        raise

    rows = report.pop("_rows")
    report = _json_safe(report)
    _write_report(out, report)
    if run is not None:
        _persist_rows(run, rows)
        run.finish(
            ExperimentRun.STATUS_COMPLETED,
            steps=report["steps"],
            reason=report["reason"],
            initial_energy=report["initial_energy"]["total"],
            final_energy=report["energy"]["total"],
            min_s=report["min_s"],
            report=report,
        )
    return RunResult(
        name=config.name,
        out_dir=out,
        report=report,
        csv_path=out / CSV_NAME,
        snapshots=[out / p for p in report["snapshots"]],
        run=run,
    )
