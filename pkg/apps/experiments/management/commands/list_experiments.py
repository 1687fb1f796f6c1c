from django.core.management.base import BaseCommand

from apps.experiments.cli import command_errors
from apps.experiments.configfile import serialize_config
from apps.experiments.registry import canned_config, describe_experiment, list_experiments


class Command(BaseCommand):
    help = "List the canned experiments."

    def add_arguments(self, parser):
        parser.add_argument("--show", default=None, help="Print the config text of one experiment.")

    def handle(self, *args, **options):
        if options["show"]:
            with command_errors():
                config = canned_config(options["show"])
            self.stdout.write(serialize_config(config.values), ending="")
            return
        for name in list_experiments():
            self.stdout.write(f"{name:26s} {describe_experiment(name)}")
