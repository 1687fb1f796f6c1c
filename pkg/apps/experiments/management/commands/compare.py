from pathlib import Path

from django.core.management.base import BaseCommand

from apps.experiments.cli import command_errors
from apps.experiments.comparison import compare_run_dirs
from apps.reports.workbooks import write_comparison_workbook


class Command(BaseCommand):
    help = "Compare the final states of two run directories and write comparison.xlsx."

    def add_arguments(self, parser):
        parser.add_argument("run_a")
        parser.add_argument("run_b")
        parser.add_argument("--out", default=None, help="Workbook path (defaults to <run_a>/comparison.xlsx).")

    def handle(self, *args, **options):
        with command_errors():
            report = compare_run_dirs(options["run_a"], options["run_b"])
            out = Path(options["out"] or Path(options["run_a"]) / "comparison.xlsx")
            write_comparison_workbook(report, out)

        self.stdout.write(f"E_a = {report['energy_a']!r} ({report['model_a']})")
        self.stdout.write(f"E_b = {report['energy_b']!r} ({report['model_b']})")
        self.stdout.write(f"relative gap (E_a - E_b)/|E_a| = {report['relative_gap']:.6g}")
        self.stdout.write(f"max |Q_a - Q_b| = {report['max_difference']:.6g}")
        self.stdout.write(self.style.SUCCESS(f"Wrote {out}"))
