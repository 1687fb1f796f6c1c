from django.core.management.base import BaseCommand, CommandError

from apps.core.constants import EXIT_IO_ERROR
from apps.core.exceptions import MeshError
from apps.meshes.audit import check_weak_acuteness
from apps.meshes.io import load_mesh


class Command(BaseCommand):
    help = "Load a mesh file and report weak acuteness of its stiffness graph."

    def add_arguments(self, parser):
        parser.add_argument("meshfile")
        parser.add_argument("--show", type=int, default=20, help="Number of violating edges to list.")

    def handle(self, *args, **options):
        try:
            mesh = load_mesh(options["meshfile"])
        except (OSError, MeshError) as exc:
            raise CommandError(str(exc), returncode=EXIT_IO_ERROR)

        report = check_weak_acuteness(mesh)
        self.stdout.write(str(mesh))
        for line in report.summary_lines():
            self.stdout.write(line)
        for violation in report.violations[: options["show"]]:
            self.stdout.write(f"  {violation}")
        if report.passed:
            self.stdout.write(self.style.SUCCESS("Mesh is weakly acute."))
        else:
            self.stdout.write(self.style.WARNING(f"{report.negative_edge_count} edges violate weak acuteness."))
