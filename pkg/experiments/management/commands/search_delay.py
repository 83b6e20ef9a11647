from experiments.management.base import ExperimentCommand
from experiments.models import SEARCH_DELAY
from experiments.services import run_search_delay


class Command(ExperimentCommand):
    help = 'Bisección del mayor retardo r factible con M subpredictores.'
    mode = SEARCH_DELAY

    def run(self, config):
        outcome = run_search_delay(config)
        result = outcome['result']
        if result.max_feasible is None:
            self.stdout.write(self.style.WARNING(f"Sin retardo factible para N={config.N}, M={config.M}."))
        elif result.unbounded:
            self.stdout.write(self.style.WARNING(
                f"r sigue factible en {result.max_feasible:g}; es solo una cota inferior -> {outcome['path']}"
            ))
        else:
            lo, hi = result.bracket
            self.stdout.write(self.style.SUCCESS(f"r_max ∈ [{lo:.4f}, {hi:.4f}] -> {outcome['path']}"))
