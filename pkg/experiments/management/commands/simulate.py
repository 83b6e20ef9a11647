from experiments.management.base import ExperimentCommand
from experiments.models import SIMULATE
from experiments.services import run_simulate


class Command(ExperimentCommand):
    help = 'Simula el lazo cerrado y ajusta el decaimiento de la norma H¹.'
    mode = SIMULATE

    def run(self, config):
        outcome = run_simulate(config)
        report = outcome['report']
        self.stdout.write(
            f"‖w‖_H¹: {report['h1_initial']:.4g} -> {report['h1_final']:.4g}; "
            f"exponente ajustado {report['decay_exponent']:.4f} (garantizado ≤ {report['guaranteed_exponent']:g})"
        )
        self.stdout.write(self.style.SUCCESS(f"Trayectoria en {outcome['path']}"))
