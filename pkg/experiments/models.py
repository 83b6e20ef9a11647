# experiments/models.py
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from lmi.search import parse_gamma_grid
from spectral import services as spectral

SYNTHESIZE = 'synthesize'
VERIFY_LMI = 'verify-lmi'
SEARCH_SIGMA = 'search-sigma'
SEARCH_DELAY = 'search-delay'
SIMULATE = 'simulate'
REPRODUCE_TABLES = 'reproduce-tables'

MODE_CHOICES = [
    (SYNTHESIZE, 'Diseño y certificación de ganancias'),
    (VERIFY_LMI, 'Verificación de las LMI'),
    (SEARCH_SIGMA, 'Búsqueda de σ máximo'),
    (SEARCH_DELAY, 'Búsqueda de retardo máximo'),
    (SIMULATE, 'Simulación del lazo cerrado'),
    (REPRODUCE_TABLES, 'Reproducción de las tablas publicadas'),
]

PARABOLA_PROFILE = 'parabola'
RANDOM_PROFILE = 'random'

INITIAL_CONDITION_CHOICES = [
    (PARABOLA_PROFILE, '8.5 x (1 − x)'),
    (RANDOM_PROFILE, 'Combinación aleatoria de φ_0..φ_5'),
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuración validada de un experimento. Ver ``ExperimentConfigSerializer``."""
    mode: str
    delta: float
    N0: int
    N: int
    x_star: float
    sigma: float
    M: int
    r: float
    gamma_grid: str
    tolerance: float
    gains: str
    nonlinearity: str
    initial_condition: str
    Nx: int
    dt: float
    T_final: float
    snapshot_stride: int
    snapshots: bool
    out: str
    jobs: int
    seed: int

    @property
    def delayed(self):
        return self.r > 0

    @property
    def output_dir(self):
        return Path(self.out)

    def gamma_values(self):
        return parse_gamma_grid(self.gamma_grid)

    def initial_profile(self):
        """Función w(x, 0) indicada por ``initial_condition``."""
        if self.initial_condition == RANDOM_PROFILE:
            coeffs = np.random.default_rng(self.seed).normal(size=6)
            return lambda x: spectral.mode_matrix(x, 5) @ coeffs
        return lambda x: 8.5 * x * (1 - x)

    def as_dict(self):
        return asdict(self)
