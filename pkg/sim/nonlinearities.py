# sim/nonlinearities.py
"""
Catálogo de no linealidades g(t, x, z) con constante de Lipschitz σ en z.

Todas cumplen g(t, x, 0) = 0.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

ZERO = 'zero'
SHIFTED_SIN = 'shifted_sin'
SAT = 'sat'

NONLINEARITY_CHOICES = [
    (ZERO, 'Nula'),
    (SHIFTED_SIN, 'σ[sin(t+3x+z) − sin(t+3x)]'),
    (SAT, 'σ·tanh(z)'),
]


@dataclass(frozen=True)
class Nonlinearity:
    name: str
    sigma: float
    func: Callable

    def __call__(self, t, x, z):
        return self.func(t, x, z)

    def __str__(self):
        return f"{self.name} (σ={self.sigma:g})"


def _zero(t, x, z):
    return np.zeros_like(np.asarray(z, dtype=float))


def build_nonlinearity(name, sigma):
    """Instancia la entrada ``name`` del catálogo con constante σ."""
    if sigma < 0:
        raise ValueError(f"σ debe ser no negativo, se recibió {sigma}.")
    if name == ZERO:
        return Nonlinearity(ZERO, 0.0, _zero)
    if name == SHIFTED_SIN:
        # centrada para que g(t, x, 0) = 0; sigue siendo σ-Lipschitz en z
        def func(t, x, z):
            return sigma * (np.sin(t + 3 * x + z) - np.sin(t + 3 * x))
        return Nonlinearity(SHIFTED_SIN, float(sigma), func)
    if name == SAT:
        return Nonlinearity(SAT, float(sigma), lambda t, x, z: sigma * np.tanh(z))
    raise ValueError(f"No linealidad desconocida: {name!r}.")
