from django.core.management.base import CommandError

from experiments.management.base import EXIT_INFEASIBLE, ExperimentCommand
from experiments.models import VERIFY_LMI
from experiments.services import run_verify_lmi


class Command(ExperimentCommand):
    help = 'Verifica las condiciones LMI de estabilidad y escribe lmi_margins.csv.'
    mode = VERIFY_LMI

    def run(self, config):
        outcome = run_verify_lmi(config)
        if not outcome['feasible']:
            raise CommandError(f"LMI infactibles; ver {outcome['path']}.", returncode=EXIT_INFEASIBLE)
        for margin in outcome['report'].margins:
            self.stdout.write(f"{margin.label}: {margin.extreme:.3e}")
        self.stdout.write(self.style.SUCCESS(f"Factible con Γ={outcome['gamma']:g} -> {outcome['path']}"))
