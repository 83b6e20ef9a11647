# synthesis/models.py
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

NODELAY = 'nodelay'
DELAYED = 'delayed'

VARIANT_CHOICES = [
    (NODELAY, 'Sin retardo'),
    (DELAYED, 'Con retardo y subpredictores'),
]

DESIGNED = 'designed'
PUBLISHED = 'published'

SOURCE_CHOICES = [
    (DESIGNED, 'Diseñadas por LMI'),
    (PUBLISHED, 'Publicadas'),
]


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """
    Matrices de dimensión finita del sistema modal.

    El estado extendido del controlador es col{u, w_0, …, w_N0}, de modo que
    Ã_0 = diag{−μ, A_0}, B̃_0 = col{1, B_0} y C̃_0 = [ψ(x*), C_0].
    """
    N0: int
    N: int
    x_star: float
    mu: float
    A0: np.ndarray = field(repr=False)
    A0_tilde: np.ndarray = field(repr=False)
    B0: np.ndarray = field(repr=False)
    B0_tilde: np.ndarray = field(repr=False)
    C0: np.ndarray = field(repr=False)
    C0_tilde: np.ndarray = field(repr=False)
    C1: np.ndarray = field(repr=False)
    A1: np.ndarray = field(repr=False)
    B1: np.ndarray = field(repr=False)
    delayed: bool = False

    @property
    def tail_size(self):
        return self.N - self.N0

    def observer_pair(self, delayed=None):
        """Par (A, C) del diseño del observador: (A_0, C_0) o (Ã_0, C̃_0)."""
        delayed = self.delayed if delayed is None else delayed
        if delayed:
            return self.A0_tilde, self.C0_tilde
        return self.A0, self.C0

    def controller_pair(self):
        return self.A0_tilde, self.B0_tilde

    def __str__(self):
        mode = 'con retardo' if self.delayed else 'sin retardo'
        return f"Modelo reducido N0={self.N0}, N={self.N}, x*={self.x_star:g} ({mode})"


@dataclass(eq=False)
class GainSet:
    """Ganancias L_0, K_0 con sus certificados de Lyapunov P_o, P_c."""
    L0: np.ndarray
    K0: np.ndarray
    delta: float
    delayed: bool = False
    P_o: Optional[np.ndarray] = field(default=None, repr=False)
    P_c: Optional[np.ndarray] = field(default=None, repr=False)
    source: str = DESIGNED

    def __post_init__(self):
        self.L0 = np.atleast_1d(np.asarray(self.L0, dtype=float)).ravel()
        self.K0 = np.atleast_1d(np.asarray(self.K0, dtype=float)).ravel()

    def observer_closed_loop(self, model):
        A, C = model.observer_pair(self.delayed)
        return A - np.outer(self.L0, C)

    def controller_closed_loop(self, model):
        A, B = model.controller_pair()
        return A - np.outer(B, self.K0)

    def __str__(self):
        return f"L0={np.round(self.L0, 4).tolist()}, K0={np.round(self.K0, 4).tolist()} ({self.source})"


@dataclass(frozen=True, eq=False)
class ClosedLoopMatrices:
    """
    Matrices del lazo cerrado. Los campos que no aplican a la variante quedan
    en ``None``.
    """
    variant: str
    F_X: np.ndarray = field(repr=False)
    Xi_X: np.ndarray = field(repr=False)
    Xi_E: np.ndarray = field(repr=False)
    L_zeta: np.ndarray = field(repr=False)
    K_X: Optional[np.ndarray] = field(default=None, repr=False)
    # solo con retardo
    M: Optional[int] = None
    B_X: Optional[np.ndarray] = field(default=None, repr=False)
    K0I: Optional[np.ndarray] = field(default=None, repr=False)
    replicator: Optional[np.ndarray] = field(default=None, repr=False)
    F0: Optional[np.ndarray] = field(default=None, repr=False)
    LC: Optional[np.ndarray] = field(default=None, repr=False)
    F_e: Optional[np.ndarray] = field(default=None, repr=False)
    Lambda_e: Optional[np.ndarray] = field(default=None, repr=False)
    K0_tilde: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def is_delayed(self):
        return self.variant == DELAYED
