# spectral/models.py
"""
Estructuras de datos del módulo espectral.

No son modelos de base de datos: la base modal y las funciones de malla se
calculan al vuelo y nunca se persisten.
"""
from dataclasses import dataclass, field

import numpy as np


def uniform_nodes(intervals):
    """Nodos equiespaciados en [0, 1], incluyendo ambos extremos."""
    if intervals < 1:
        raise ValueError(f"Se requiere al menos un intervalo, se recibió {intervals}.")
    return np.linspace(0.0, 1.0, int(intervals) + 1)


@dataclass(eq=False)
class GridFunction:
    """
    Portador discreto de w(·, t): valores sobre una malla uniforme de [0, 1].
    """
    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.size == 0:
            raise ValueError("La malla está vacía.")
        if self.values.shape != self.nodes.shape:
            raise ValueError(
                f"Valores {self.values.shape} y nodos {self.nodes.shape} no coinciden."
            )
        if self.nodes.size > 1:
            steps = np.diff(self.nodes)
            if (not np.isclose(self.nodes[0], 0.0) or not np.isclose(self.nodes[-1], 1.0)
                    or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12)):
                raise ValueError("Los nodos deben ser equiespaciados y cubrir [0, 1].")

    @classmethod
    def sample(cls, func, intervals):
        nodes = uniform_nodes(intervals)
        return cls(nodes, np.asarray(func(nodes), dtype=float) * np.ones_like(nodes))

    @property
    def intervals(self):
        return self.nodes.size - 1

    @property
    def spacing(self):
        return 1.0 / self.intervals


@dataclass(frozen=True, eq=False)
class ModalBasis:
    """
    Autovalores λ_0..λ_N del laplaciano de Neumann y coeficientes de
    actuación b_0..b_N.
    """
    max_mode: int
    eigenvalues: np.ndarray = field(repr=False)
    input_coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.max_mode < 0:
            raise ValueError(f"max_mode debe ser no negativo, se recibió {self.max_mode}.")
        if self.eigenvalues.shape != (self.max_mode + 1,) or self.input_coeffs.shape != (self.max_mode + 1,):
            raise ValueError("La base modal no tiene N+1 entradas.")
        if self.eigenvalues[0] != 0.0 or np.any(np.diff(self.eigenvalues) <= 0):
            raise ValueError("Los autovalores deben empezar en 0 y ser estrictamente crecientes.")

    @classmethod
    def build(cls, max_mode):
        from .services import eigenvalues, input_coefficients
        return cls(max_mode, eigenvalues(max_mode), input_coefficients(max_mode))
