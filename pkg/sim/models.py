# sim/models.py
"""
Configuración, estado y trayectoria de la simulación del lazo cerrado.

La EDP se integra por FTCS sobre la malla uniforme de [0, 1] y los EDO del
observador y de los subpredictores por Euler explícito con el mismo paso.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from django.conf import settings

from spectral import services as spectral
from spectral.models import GridFunction, uniform_nodes
from synthesis.models import GainSet
from synthesis.services import build_reduced_model

from .exceptions import MisalignedDelay
from .nonlinearities import ZERO, build_nonlinearity

logger = logging.getLogger(__name__)

# tolerancia relativa para aceptar r/M como múltiplo entero de dt
ALIGN_TOL = 1e-9


def default_initial_condition(x):
    """w(x, 0) = 8.5 x (1 − x)."""
    return 8.5 * x * (1 - x)


@dataclass(eq=False)
class SimConfig:
    """
    Parámetros de una corrida. ``dt`` se elige, si no se da, como el mayor
    paso ≤ SIM_CFL_FACTOR·dx² que divide exactamente a r/M. Sin ganancias
    el lazo queda abierto (v ≡ 0).
    """
    N: int = 4
    N0: int = 0
    x_star: float = 0.0
    r: float = 0.0
    M: int = 1
    sigma: float = 0.0
    nonlinearity: Any = ZERO
    gains: Optional[GainSet] = None
    initial_condition: Callable = default_initial_condition
    Nx: Optional[int] = None
    dt: Optional[float] = None
    T_final: Optional[float] = None
    snapshot_stride: Optional[int] = None
    keep_snapshots: bool = False

    def __post_init__(self):
        self.Nx = settings.SPECTRAL_GRID_INTERVALS if self.Nx is None else int(self.Nx)
        self.T_final = settings.SIM_T_FINAL if self.T_final is None else float(self.T_final)
        if self.Nx < 2:
            raise ValueError(f"Nx debe ser al menos 2, se recibió {self.Nx}.")
        if self.T_final <= 0:
            raise ValueError(f"El horizonte debe ser positivo, se recibió {self.T_final}.")
        if self.r < 0:
            raise ValueError(f"El retardo no puede ser negativo, se recibió {self.r}.")
        if self.delayed and self.M < 1:
            raise ValueError(f"M debe ser al menos 1, se recibió {self.M}.")

        self.nodes = uniform_nodes(self.Nx)
        self.dx = 1.0 / self.Nx
        self._choose_step()
        self.sub_delay_steps = int(round(self.r / self.M / self.dt)) if self.delayed else 0
        self.delay_steps = self.M * self.sub_delay_steps
        self.n_steps = int(round(self.T_final / self.dt))
        if self.snapshot_stride is None:
            self.snapshot_stride = max(1, int(round(0.01 / self.dt)))
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride debe ser al menos 1, se recibió {self.snapshot_stride}.")

        self._snap_sensor()
        if not callable(self.nonlinearity):
            self.nonlinearity = build_nonlinearity(self.nonlinearity, self.sigma)
        self._probe_nonlinearity()

        self.model = build_reduced_model(self.N0, self.N, self.x_star, delayed=self.delayed)
        if self.gains is None:
            observer_size = self.N0 + 2 if self.delayed else self.N0 + 1
            self.gains = GainSet(np.zeros(observer_size), np.zeros(self.N0 + 2), 0.0, delayed=self.delayed)

        # cantidades fijas de la malla, reutilizadas en cada paso
        self.modes = spectral.mode_matrix(self.nodes, self.N)
        self.weighted_modes = self.modes * spectral.trapezoid_weights(self.nodes)[:, None]
        self.psi = spectral.actuation_shape(self.nodes)
        self.lambdas = spectral.eigenvalues(self.N)
        self.b = spectral.input_coefficients(self.N)

    @property
    def delayed(self):
        return self.r > 0

    def _choose_step(self):
        limit = settings.SIM_CFL_FACTOR * self.dx ** 2
        if self.dt is None:
            if self.delayed:
                sub_delay = self.r / self.M
                self.dt = sub_delay / math.ceil(sub_delay / limit - ALIGN_TOL)
            else:
                self.dt = limit
            return
        self.dt = float(self.dt)
        if self.dt <= 0 or self.dt > self.dx ** 2 / 2:
            raise ValueError(f"dt={self.dt:g} viola la condición CFL dt ≤ dx²/2 = {self.dx ** 2 / 2:g}.")
        if self.delayed:
            ratio = self.r / self.M / self.dt
            if abs(ratio - round(ratio)) > ALIGN_TOL * max(1.0, ratio) or round(ratio) < 1:
                raise MisalignedDelay(f"r/M = {self.r / self.M:g} no es múltiplo entero de dt = {self.dt:g}.")

    def _snap_sensor(self):
        index = int(round(self.x_star * self.Nx))
        snapped = index / self.Nx
        assert abs(snapped - self.x_star) <= self.dx / 2 + 1e-12
        if snapped != self.x_star:
            logger.warning(f"x* = {self.x_star:g} se ajustó al nodo {snapped:g}.")
        self.x_star = snapped
        self.sensor_index = index

    def _probe_nonlinearity(self):
        for t in (0.0, 0.37, 1.3):
            value = np.asarray(self.nonlinearity(t, self.nodes, np.zeros_like(self.nodes)), dtype=float)
            if np.max(np.abs(value)) > 1e-12:
                raise ValueError(f"La no linealidad no cumple g(t, x, 0) = 0 (t={t}).")

    def __str__(self):
        mode = f"r={self.r:g}, M={self.M}" if self.delayed else "sin retardo"
        return (f"Simulación N0={self.N0}, N={self.N}, {mode}, Nx={self.Nx}, dt={self.dt:.3e}, T={self.T_final:g}, "
                f"{self.n_steps} pasos")


class DelayBuffer:
    """
    Anillo con las últimas muestras de una señal. Consultar más atrás de lo
    almacenado equivale a consultar t ≤ 0 y devuelve ceros.
    """

    def __init__(self, delay, dt, shape=()):
        self.delay = float(delay)
        self.dt = float(dt)
        self.steps = int(round(self.delay / self.dt)) if self.delay > 0 else 0
        self.shape = tuple(shape)
        self.samples = deque(maxlen=self.steps + 1)

    def push(self, value):
        self.samples.append(np.array(value, dtype=float).reshape(self.shape))

    def lag(self, k):
        """Muestra de hace ``k`` pasos."""
        if k < 0 or k > self.steps:
            raise ValueError(f"Retardo de {k} pasos fuera del rango [0, {self.steps}].")
        if k >= len(self.samples):
            value = np.zeros(self.shape)
        else:
            value = self.samples[-1 - k]
        return float(value) if not self.shape else value.copy()

    def delayed(self):
        return self.lag(self.steps)

    def __len__(self):
        return len(self.samples)


@dataclass(eq=False)
class PredictorBlock:
    """Subpredictor i: ŵ_i^{N0} ∈ ℝ^{N0+2} y ŵ_i^{N−N0} ∈ ℝ^{N−N0}."""
    head: np.ndarray
    tail: np.ndarray
    history: DelayBuffer = field(repr=False)

    @classmethod
    def zeros(cls, config):
        block = cls(
            np.zeros(config.N0 + 2),
            np.zeros(config.N - config.N0),
            DelayBuffer(config.r, config.dt, shape=(config.N + 2,)),
        )
        block.history.push(block.stacked)
        return block

    @property
    def stacked(self):
        return np.concatenate([self.head, self.tail])

    def lagged(self, k):
        """(cabeza, cola) de hace ``k`` pasos."""
        value = self.history.lag(k)
        return value[:self.head.size], value[self.head.size:]


@dataclass(eq=False)
class SimState:
    t: float
    step: int
    w: GridFunction
    u: float
    u_history: DelayBuffer = field(repr=False)
    v_history: DelayBuffer = field(repr=False)
    observer: Optional[np.ndarray] = None
    predictors: list = field(default_factory=list)

    @classmethod
    def initial(cls, config):
        """Estado en t = 0: u(0) = 0 y observador y subpredictores nulos."""
        w = GridFunction(config.nodes, np.asarray(config.initial_condition(config.nodes), dtype=float)
                         * np.ones_like(config.nodes))
        state = cls(
            t=0.0,
            step=0,
            w=w,
            u=0.0,
            u_history=DelayBuffer(config.r, config.dt),
            v_history=DelayBuffer(config.r, config.dt),
        )
        state.u_history.push(0.0)
        if config.delayed:
            state.predictors = [PredictorBlock.zeros(config) for _ in range(config.M)]
        else:
            state.observer = np.zeros(config.N + 1)
        return state

    def u_delayed(self, config):
        """u(t − r); con r = 0 es u(t)."""
        return self.u_history.lag(config.delay_steps)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    u_delayed: np.ndarray
    y: np.ndarray
    h1_w: np.ndarray
    h1_what: np.ndarray
    telescope_residual: np.ndarray
    nodes: np.ndarray = field(repr=False)
    snapshots_w: Optional[np.ndarray] = field(default=None, repr=False)
    snapshots_z: Optional[np.ndarray] = field(default=None, repr=False)
    blew_up: bool = False
    abort_time: Optional[float] = None

    @property
    def sample_count(self):
        return self.times.size

    def __str__(self):
        status = f"divergió en t={self.abort_time:g}" if self.blew_up else "completa"
        return f"Trayectoria con {self.sample_count} muestras ({status})"
