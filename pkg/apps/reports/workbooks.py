"""Spreadsheet output for recorded runs and run comparisons."""
from __future__ import annotations

import io
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

from django.http import HttpResponse
from openpyxl import Workbook
from openpyxl.styles import Alignment, Font
from openpyxl.utils import get_column_letter

XLSX_CONTENT_TYPE = "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"

ENERGY_HEADERS = ["Step", "E_main", "E_bulk", "E_anchor", "E_electric", "E_total", "ds_norm", "min_s", "tangent_norm"]


def xlsx_response(wb: Workbook, filename: str) -> HttpResponse:
    bio = io.BytesIO()
    wb.save(bio)
    bio.seek(0)

    resp = HttpResponse(bio.getvalue(), content_type=XLSX_CONTENT_TYPE)
    resp["Content-Disposition"] = f'attachment; filename="{filename}"'
    return resp


def autosize_columns(ws):
    for col in range(1, ws.max_column + 1):
        max_len = 0
        for row in range(1, ws.max_row + 1):
            v = ws.cell(row=row, column=col).value
            if v is None:
                continue
            max_len = max(max_len, len(str(v)))
        ws.column_dimensions[get_column_letter(col)].width = min(max(12, max_len + 2), 55)


def write_sheet(ws, title: str, headers: Sequence[str], rows: Iterable[Sequence[Any]]):
    ws.title = title
    ws.append(list(headers))

    header_font = Font(bold=True)
    for i in range(1, len(headers) + 1):
        c = ws.cell(row=1, column=i)
        c.font = header_font
        c.alignment = Alignment(vertical="center")

    for r in rows:
        ws.append(list(r))

    autosize_columns(ws)


def energy_rows(records) -> List[List[Any]]:
    return [
        [
            r.step,
            r.e_main,
            r.e_bulk,
            r.e_anchor,
            r.e_electric,
            r.e_total,
            "" if r.ds_norm is None else r.ds_norm,
            "" if r.min_s is None else r.min_s,
            "" if r.tangent_norm is None else r.tangent_norm,
        ]
        for r in records
    ]


def energy_workbook(run) -> Workbook:
    wb = Workbook()
    write_sheet(wb.active, "Energy", ENERGY_HEADERS, energy_rows(run.energy_records.order_by("step")))
    summary = wb.create_sheet()
    write_sheet(summary, "Run", ["Field", "Value"], [
        ["Name", run.name],
        ["Model", run.model],
        ["Status", run.status],
        ["Steps", run.steps],
        ["Reason", run.reason],
        ["Initial energy", run.initial_energy],
        ["Final energy", run.final_energy],
        ["Min s", run.min_s],
        ["Output", run.output_dir],
    ])
    return wb


def _flatten(prefix: str, value: Any, out: List[List[Any]]) -> None:
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else str(key), value[key], out)
    elif isinstance(value, (list, tuple)):
        out.append([prefix, ", ".join(str(v) for v in value)])
    else:
        out.append([prefix, "" if value is None else value])


def write_comparison_workbook(report: Dict[str, Any], path: Union[str, Path]) -> Path:
    """Summary sheet of a two-run comparison plus the energy breakdown of each run.

    ``report`` is the mapping produced by
    :func:`apps.experiments.comparison.compare_run_dirs`.
    """
    path = Path(path)
    wb = Workbook()
    rows = [[key, report[key]] for key in (
        "run_a", "run_b", "model_a", "model_b", "energy_a", "energy_b",
        "relative_gap", "max_difference", "mean_difference",
    )]
    write_sheet(wb.active, "Comparison", ["Quantity", "Value"], rows)

    for label in ("a", "b"):
        flat: List[List[Any]] = []
        _flatten("", report[f"breakdown_{label}"], flat)
        write_sheet(wb.create_sheet(), f"Run {label.upper()}", ["Term", "Value"], flat)

    path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(path)
    return path
