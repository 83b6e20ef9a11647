# lmi/search.py
"""
Búsquedas por bisección del mayor σ (sin retardo) y del mayor retardo r
(con subpredictores) que conservan la factibilidad.

Un valor se considera factible si ALGÚN Γ de la malla lo hace factible.
"""
import logging
import math

import numpy as np
from django.conf import settings

from synthesis.services import build_reduced_model

from .builders import build_lmi_delayed, build_lmi_nodelay
from .exceptions import NumericalBreakdown
from .models import SearchResult
from .solver import solve_feasibility

logger = logging.getLogger(__name__)

MAX_EXPANSIONS = 8


def parse_gamma_grid(text):
    """'lo:hi:n' → n valores de Γ espaciados logarítmicamente entre lo y hi."""
    try:
        lo, hi, count = text.split(':')
        lo, hi, count = float(lo), float(hi), int(count)
    except (AttributeError, ValueError) as exc:
        raise ValueError(f"Malla de Γ inválida {text!r}; se espera 'lo:hi:n'.") from exc
    return gamma_grid(lo, hi, count)


def gamma_grid(lo=None, hi=None, count=None):
    if lo is None:
        return parse_gamma_grid(settings.LMI_GAMMA_GRID)
    if lo <= 0 or hi < lo or count < 1:
        raise ValueError(f"Malla de Γ inválida: lo={lo}, hi={hi}, n={count}.")
    return np.geomspace(lo, hi, count)


class _Prober:
    """Evalúa la factibilidad de un valor recorriendo la malla de Γ."""

    def __init__(self, builder, gammas, parameter, **solver_options):
        self.builder = builder
        self.gammas = [float(g) for g in gammas]
        if not self.gammas:
            raise ValueError("La malla de Γ está vacía.")
        self.parameter = parameter
        self.solver_options = solver_options
        self.preferred = None
        self.history = []

    def _ordered(self):
        if self.preferred is None:
            return self.gammas
        return [self.preferred] + [g for g in self.gammas if g != self.preferred]

    def __call__(self, value):
        verdicts = 0
        for gamma in self._ordered():
            problem = self.builder(value, gamma)
            try:
                result = solve_feasibility(problem, **self.solver_options)
            except NumericalBreakdown as exc:
                logger.warning(f"{self.parameter}={value:g}, Γ={gamma:g}: ruptura numérica ({exc}); se omite.")
                continue
            verdicts += 1
            if result.feasible:
                self.preferred = gamma
                self.history.append((value, True))
                logger.info(f"{self.parameter}={value:g}: factible con Γ={gamma:g}.")
                return gamma, result
        if verdicts == 0:
            raise NumericalBreakdown(f"{self.parameter}={value:g}: ningún Γ de la malla dio un veredicto.")
        self.history.append((value, False))
        logger.info(f"{self.parameter}={value:g}: infactible para toda la malla de Γ.")
        return None, None


def _bisect(prober, floor, start, tol):
    """
    Bisección genérica a partir de un valor factible ``floor``. Devuelve un
    ``SearchResult`` cuyo intervalo tiene ancho ≤ tol, salvo que el valor
    siga factible tras MAX_EXPANSIONS duplicaciones: entonces se marca
    ``unbounded`` y el intervalo es (lo, inf).
    """
    if tol <= 0:
        raise ValueError(f"La tolerancia debe ser positiva, se recibió {tol}.")
    gamma, certificate = prober(floor)
    if certificate is None:
        logger.warning(f"{prober.parameter}={floor:g} ya es infactible; no hay valor factible que reportar.")
        return SearchResult(prober.parameter, None, (math.nan, floor), probes=prober.history)

    lo, hi = floor, max(start, floor + tol)
    for _ in range(MAX_EXPANSIONS):
        found_gamma, found = prober(hi)
        if found is None:
            break
        lo, gamma, certificate = hi, found_gamma, found
        hi *= 2
    else:
        logger.warning(f"{prober.parameter}: sigue factible en {lo:g} tras {MAX_EXPANSIONS} duplicaciones; "
                       f"{lo:g} es solo una cota inferior.")
        return SearchResult(prober.parameter, lo, (lo, math.inf), certificate, gamma, prober.history,
                            unbounded=True)

    while hi - lo > tol:
        mid = (lo + hi) / 2
        found_gamma, found = prober(mid)
        if found is None:
            hi = mid
        else:
            lo, gamma, certificate = mid, found_gamma, found
    logger.info(f"{prober.parameter}_max ∈ [{lo:.4f}, {hi:.4f}] con Γ={gamma:g}.")
    return SearchResult(prober.parameter, lo, (lo, hi), certificate, gamma, prober.history)


def search_max_sigma(N, delta, gains, gamma_grid_values=None, tol=None, *, N0=0, x_star=0.0,
                     start=1.0, **solver_options):
    """Mayor σ para el cual la condición sin retardo es factible."""
    tol = settings.LMI_BISECTION_TOL if tol is None else tol
    gammas = gamma_grid() if gamma_grid_values is None else gamma_grid_values
    model = build_reduced_model(N0, N, x_star)
    prober = _Prober(
        lambda sigma, gamma: build_lmi_nodelay(model, gains, delta, sigma, gamma),
        gammas, 'sigma', **solver_options,
    )
    logger.info(f"Buscando σ_max para N={N}, δ={delta}, tolerancia {tol}.")
    return _bisect(prober, 0.0, start, tol)


def search_max_delay(N, M, sigma, delta, gains, gamma_grid_values=None, tol=None, *, N0=0, x_star=0.0,
                     start=1.0, **solver_options):
    """Mayor retardo r para el cual las condiciones con M subpredictores son factibles."""
    tol = settings.LMI_BISECTION_TOL if tol is None else tol
    gammas = gamma_grid() if gamma_grid_values is None else gamma_grid_values
    model = build_reduced_model(N0, N, x_star, delayed=True)
    prober = _Prober(
        lambda r, gamma: build_lmi_delayed(model, gains, delta, sigma, gamma, M=M, r=r),
        gammas, 'r', **solver_options,
    )
    logger.info(f"Buscando r_max para N={N}, M={M}, σ={sigma}, tolerancia {tol}.")
    # el retardo debe ser positivo: la sonda de cordura usa un r pequeño
    return _bisect(prober, min(tol, 1e-3), start, tol)
