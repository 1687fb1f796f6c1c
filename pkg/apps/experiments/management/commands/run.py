from django.core.management.base import BaseCommand

from apps.experiments.cli import command_errors, load_config
from apps.experiments.runner import run_experiment


class Command(BaseCommand):
    help = "Run an experiment file or a canned experiment and write CSV, VTK snapshots and report.json."

    def add_arguments(self, parser):
        parser.add_argument("config", help="Path to an experiment file or a canned experiment name.")
        parser.add_argument("--out", default=None, help="Output directory (defaults to output.dir or runs/<name>).")
        parser.add_argument("--set", action="append", default=[], dest="overrides", metavar="KEY=VALUE")
        parser.add_argument("--no-persist", action="store_true", help="Do not record the run in the database.")

    def handle(self, *args, **options):
        with command_errors():
            config = load_config(options["config"], options["overrides"])
            result = run_experiment(config, out_dir=options["out"], persist=not options["no_persist"])

        report = result.report
        self.stdout.write(f"{result.name}: {report['steps']} steps ({report['reason']})")
        self.stdout.write(f"  E = {report['energy']['total']!r} (initial {report['initial_energy']['total']!r})")
        self.stdout.write(f"  min s = {report['min_s']!r}")
        for entry in report.get("windings", []):
            self.stdout.write(f"  winding {entry['winding']} on {entry['loop']}")
        if "comparison" in report:
            cmp = report["comparison"]
            self.stdout.write(f"  model gap {cmp['model_gap']:.4g}, final gap {cmp['final_gap']:.4g}")
        self.stdout.write(self.style.SUCCESS(f"Wrote {result.out_dir}"))
