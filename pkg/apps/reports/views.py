import csv

from django.contrib.auth.decorators import login_required
from django.http import HttpResponse
from django.shortcuts import get_object_or_404

from apps.energy.breakdown import CSV_COLUMNS
from apps.experiments.configfile import format_value
from apps.experiments.models import ExperimentRun

from .workbooks import energy_rows, energy_workbook, xlsx_response


def _csv_response(filename: str) -> HttpResponse:
    resp = HttpResponse(content_type="text/csv")
    resp["Content-Disposition"] = f'attachment; filename="{filename}"'
    return resp


@login_required
def export_runs_csv(request):
    qs = ExperimentRun.objects.order_by("-created_at")

    resp = _csv_response("runs.csv")
    w = csv.writer(resp)
    w.writerow(["id", "name", "model", "status", "steps", "reason", "initial_energy", "final_energy", "min_s", "created_at", "finished_at", "output_dir"])

    for r in qs:
        w.writerow([
            r.pk,
            r.name,
            r.model,
            r.status,
            r.steps,
            r.reason,
            "" if r.initial_energy is None else format_value(r.initial_energy),
            "" if r.final_energy is None else format_value(r.final_energy),
            "" if r.min_s is None else format_value(r.min_s),
            r.created_at.isoformat(),
            r.finished_at.isoformat() if r.finished_at else "",
            r.output_dir,
        ])
    return resp


@login_required
def export_energy_csv(request, pk):
    run = get_object_or_404(ExperimentRun, pk=pk)

    resp = _csv_response(f"{run.name}_energy.csv")
    w = csv.writer(resp)
    w.writerow(CSV_COLUMNS)
    for row in energy_rows(run.energy_records.order_by("step")):
        w.writerow([v if v == "" else format_value(v) for v in row])
    return resp


@login_required
def export_energy_xlsx(request, pk):
    run = get_object_or_404(ExperimentRun, pk=pk)
    return xlsx_response(energy_workbook(run), f"{run.name}_energy.xlsx")
