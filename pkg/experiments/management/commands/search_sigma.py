from experiments.management.base import ExperimentCommand
from experiments.models import SEARCH_SIGMA
from experiments.services import run_search_sigma


class Command(ExperimentCommand):
    help = 'Bisección del mayor σ factible sin retardo.'
    mode = SEARCH_SIGMA

    def run(self, config):
        outcome = run_search_sigma(config)
        result = outcome['result']
        if result.max_feasible is None:
            self.stdout.write(self.style.WARNING(f"Sin σ factible para N={config.N}."))
        elif result.unbounded:
            self.stdout.write(self.style.WARNING(
                f"σ sigue factible en {result.max_feasible:g}; es solo una cota inferior -> {outcome['path']}"
            ))
        else:
            lo, hi = result.bracket
            self.stdout.write(self.style.SUCCESS(f"σ_max ∈ [{lo:.4f}, {hi:.4f}] -> {outcome['path']}"))
