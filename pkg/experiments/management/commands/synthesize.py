from experiments.management.base import ExperimentCommand
from experiments.models import SYNTHESIZE
from experiments.services import run_synthesize


class Command(ExperimentCommand):
    help = 'Diseña (o certifica las publicadas) las ganancias L0, K0 y escribe gains.csv.'
    mode = SYNTHESIZE

    def run(self, config):
        outcome = run_synthesize(config)
        self.stdout.write(self.style.SUCCESS(f"{outcome['gains']} -> {outcome['path']}"))
