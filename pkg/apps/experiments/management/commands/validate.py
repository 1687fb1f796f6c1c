from django.core.management.base import BaseCommand

from apps.experiments.builders import build_mesh, check_labels
from apps.experiments.cli import command_errors, load_config


class Command(BaseCommand):
    help = "Check an experiment file: key types, cross-section rules and mesh labels."

    def add_arguments(self, parser):
        parser.add_argument("config")
        parser.add_argument("--set", action="append", default=[], dest="overrides", metavar="KEY=VALUE")
        parser.add_argument("--skip-mesh", action="store_true", help="Do not build the mesh to check labels.")

    def handle(self, *args, **options):
        with command_errors():
            config = load_config(options["config"], options["overrides"])
            if not options["skip_mesh"]:
                mesh = build_mesh(config)
                check_labels(config, mesh)
                self.stdout.write(f"{mesh}; labels {', '.join(mesh.labels)}")

        self.stdout.write(f"{len(config.source.values)} keys, model {config.model}")
        self.stdout.write(self.style.SUCCESS("Configuration is valid."))
