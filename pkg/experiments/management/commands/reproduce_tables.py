from experiments.management.base import ExperimentCommand
from experiments.models import REPRODUCE_TABLES
from experiments.services import run_reproduce_tables


class Command(ExperimentCommand):
    help = 'Reproduce las tablas de σ máximo y retardo máximo y las compara con las publicadas.'
    mode = REPRODUCE_TABLES

    def run(self, config):
        outcome = run_reproduce_tables(config)
        for line in outcome['summary']:
            self.stdout.write(line)
        self.stdout.write(self.style.SUCCESS(f"Tablas en {', '.join(map(str, outcome['paths']))}"))
