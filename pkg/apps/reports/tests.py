import csv
import io
import tempfile
from pathlib import Path

from django.contrib.auth import get_user_model
from django.test import SimpleTestCase, TestCase
from django.urls import reverse
from openpyxl import load_workbook

from apps.core.constants import MODEL_UNIAXIAL
from apps.energy.breakdown import CSV_COLUMNS
from apps.experiments.models import EnergyRecord, ExperimentRun

from .workbooks import ENERGY_HEADERS, write_comparison_workbook


def _run_with_records():
    run = ExperimentRun.objects.create(name="half_defect", model=MODEL_UNIAXIAL, config_text="model = uniaxial_ldg\n", output_dir="runs/half_defect")
    EnergyRecord.objects.create(run=run, step=0, e_main=2.5, e_bulk=0.25, e_total=2.75, min_s=0.5)
    EnergyRecord.objects.create(run=run, step=1, e_main=2.0, e_bulk=0.2, e_total=2.2, ds_norm=0.1, min_s=0.4, tangent_norm=0.05)
    run.finish(ExperimentRun.STATUS_COMPLETED, steps=1, reason="max_steps", initial_energy=2.75, final_energy=2.2, min_s=0.4)
    return run


class ExportTests(TestCase):
    def setUp(self):
        self.user = get_user_model().objects.create_user(username="analyst", password="x")
        self.run = _run_with_records()

    def test_exports_need_login(self):
        for url in (
            reverse("reports:export_runs_csv"),
            reverse("reports:export_energy_csv", args=[self.run.pk]),
            reverse("reports:export_energy_xlsx", args=[self.run.pk]),
        ):
            self.assertEqual(self.client.get(url).status_code, 302)

    def test_runs_csv(self):
        self.client.force_login(self.user)
        resp = self.client.get(reverse("reports:export_runs_csv"))
        self.assertEqual(resp.status_code, 200)
        self.assertEqual(resp["Content-Type"], "text/csv")
        rows = list(csv.reader(io.StringIO(resp.content.decode())))
        self.assertEqual(rows[0][:4], ["id", "name", "model", "status"])
        self.assertEqual(rows[1][1:6], ["half_defect", MODEL_UNIAXIAL, "completed", "1", "max_steps"])
        self.assertEqual(rows[1][7], "2.2000000000000002")

    def test_energy_csv_matches_run_file_columns(self):
        self.client.force_login(self.user)
        resp = self.client.get(reverse("reports:export_energy_csv", args=[self.run.pk]))
        rows = list(csv.reader(io.StringIO(resp.content.decode())))
        self.assertEqual(tuple(rows[0]), CSV_COLUMNS)
        self.assertEqual(len(rows), 3)
        self.assertEqual(rows[1][0], "0")
        self.assertEqual(rows[1][6], "")
        self.assertEqual(rows[2][8], "0.050000000000000003")

    def test_energy_csv_unknown_run(self):
        self.client.force_login(self.user)
        resp = self.client.get(reverse("reports:export_energy_csv", args=[self.run.pk + 1]))
        self.assertEqual(resp.status_code, 404)

    def test_energy_xlsx(self):
        self.client.force_login(self.user)
        resp = self.client.get(reverse("reports:export_energy_xlsx", args=[self.run.pk]))
        self.assertEqual(resp.status_code, 200)
        self.assertIn('filename="half_defect_energy.xlsx"', resp["Content-Disposition"])
        wb = load_workbook(io.BytesIO(resp.content))
        self.assertEqual(wb.sheetnames, ["Energy", "Run"])
        ws = wb["Energy"]
        self.assertEqual([c.value for c in ws[1]], ENERGY_HEADERS)
        self.assertTrue(ws["A1"].font.bold)
        self.assertEqual(ws.max_row, 3)
        self.assertEqual(ws["F3"].value, 2.2)


class ComparisonWorkbookTests(SimpleTestCase):
    def test_sheets_and_flattened_breakdowns(self):
        report = {
            "run_a": "runs/a",
            "run_b": "runs/b",
            "model_a": "uniaxial_ldg",
            "model_b": "standard_ldg",
            "energy_a": 2.0,
            "energy_b": 1.5,
            "relative_gap": 0.25,
            "max_difference": 0.1,
            "mean_difference": 0.01,
            "breakdown_a": {"main": 1.5, "bulk": 0.5, "total": 2.0},
            "breakdown_b": {"main": 1.0, "bulk": 0.5, "total": 1.5},
        }
        with tempfile.TemporaryDirectory() as tmp:
            path = write_comparison_workbook(report, Path(tmp) / "out" / "comparison.xlsx")
            wb = load_workbook(path)
        self.assertEqual(wb.sheetnames, ["Comparison", "Run A", "Run B"])
        values = {row[0]: row[1] for row in wb["Comparison"].iter_rows(min_row=2, values_only=True)}
        self.assertEqual(values["relative_gap"], 0.25)
        self.assertEqual(values["model_b"], "standard_ldg")
        terms = [row[0] for row in wb["Run B"].iter_rows(min_row=2, values_only=True)]
        self.assertEqual(terms, ["bulk", "main", "total"])
        self.assertTrue(wb["Run A"]["A1"].font.bold)
