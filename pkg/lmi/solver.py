# lmi/solver.py
"""
Solver de factibilidad LMI por punto interior (barrera logarítmica, fase I).

Se minimiza el margen t sujeto a F_j(x) ≼ tI para cada restricción
(normalizada a la forma negativa) y |x_i| ≤ R. Si el óptimo es negativo el
problema es factible y el punto obtenido se certifica con autovalores; si
el óptimo es no negativo se devuelve ``Infeasible``.
"""
import logging
import math

import numpy as np
from django.conf import settings
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, eigvalsh, solve_triangular

from .exceptions import NumericalBreakdown
from .models import NEGATIVE, Infeasible, LmiCertificate, Margin, MarginReport

logger = logging.getLogger(__name__)

# factor de crecimiento del peso de la barrera entre centrados
BARRIER_GROWTH = 8.0
CENTERING_TOL = 1e-7
ARMIJO = 0.25
MIN_STEP = 1e-12


class _Block:
    """Restricción compilada como F̂(x) = (F_0 + Σ x_i F_i) / c en forma negativa."""

    def __init__(self, constraint, n):
        expr = constraint.expr if constraint.sign == NEGATIVE else -constraint.expr
        self.label = constraint.label
        self.order = expr.shape[0]
        self.scale = max(expr.scale(), 1e-300)
        self.ids = np.array(expr.variables, dtype=int)
        self.const = (expr.const + expr.const.T) / (2 * self.scale)
        coeffs = [(expr.terms[i] + expr.terms[i].T) / (2 * self.scale) for i in self.ids]
        self.coeffs = np.array(coeffs).reshape(len(coeffs), self.order, self.order)
        # derivadas de S = tI − F̂ respecto a (x_ids, t), con el signo de −∂S
        self.directions = np.concatenate([self.coeffs, -np.eye(self.order)[None]], axis=0)
        self.zids = np.append(self.ids, n)

    def value(self, x):
        if self.ids.size == 0:
            return self.const.copy()
        return self.const + np.tensordot(x[self.ids], self.coeffs, axes=1)

    def slack_factor(self, x, t):
        return cholesky(t * np.eye(self.order) - self.value(x), lower=True)


def _batched_whitening(factor, directions):
    """G_i = L⁻¹ D_i L⁻ᵀ para todas las direcciones a la vez."""
    k, m, _ = directions.shape
    stacked = directions.transpose(1, 0, 2).reshape(m, k * m)
    half = solve_triangular(factor, stacked, lower=True).reshape(m, k, m).transpose(1, 0, 2)
    stacked = half.transpose(2, 0, 1).reshape(m, k * m)
    return solve_triangular(factor, stacked, lower=True).reshape(m, k, m).transpose(1, 0, 2)


class _Barrier:

    def __init__(self, blocks, n, radius):
        self.blocks = blocks
        self.n = n
        self.radius = radius

    def value(self, z, s):
        x, t = z[:-1], z[-1]
        if np.any(np.abs(x) >= self.radius):
            return math.inf
        total = s * t - np.sum(np.log(self.radius - x)) - np.sum(np.log(self.radius + x))
        for block in self.blocks:
            try:
                factor = block.slack_factor(x, t)
            except LinAlgError:
                return math.inf
            total -= 2 * np.sum(np.log(np.diag(factor)))
        return float(total)

    def derivatives(self, z, s):
        x, t = z[:-1], z[-1]
        grad = np.zeros(self.n + 1)
        hess = np.zeros((self.n + 1, self.n + 1))
        grad[-1] = s
        upper, lower = self.radius - x, self.radius + x
        grad[:-1] += 1 / upper - 1 / lower
        hess[np.arange(self.n), np.arange(self.n)] += 1 / upper ** 2 + 1 / lower ** 2
        for block in self.blocks:
            factor = block.slack_factor(x, t)
            whitened = _batched_whitening(factor, block.directions)
            flat = whitened.reshape(whitened.shape[0], -1)
            grad[block.zids] += np.einsum('kii->k', whitened)
            hess[np.ix_(block.zids, block.zids)] += flat @ flat.T
        return grad, hess


def _newton_direction(hess, grad):
    try:
        return -cho_solve(cho_factor(hess), grad)
    except LinAlgError:
        ridge = 1e-10 * max(np.trace(hess) / hess.shape[0], 1.0)
        return -cho_solve(cho_factor(hess + ridge * np.eye(hess.shape[0])), grad)


def _margin_of(constraint, x):
    values = eigvalsh(constraint.expr.evaluate(x))
    return float(values[-1] if constraint.sign == NEGATIVE else values[0])


def margin_report(problem, x, tol_margin=None):
    tol_margin = settings.LMI_MARGIN_TOL if tol_margin is None else tol_margin
    margins = []
    for constraint in problem.constraints:
        extreme = _margin_of(constraint, x)
        ok = extreme < -tol_margin if constraint.sign == NEGATIVE else extreme > tol_margin
        margins.append(Margin(constraint.label, constraint.sign, extreme, ok))
    return MarginReport(margins, tol_margin)


def verify_certificate(problem, certificate, tol_margin=None):
    """
    Recalcula cada restricción con la asignación del certificado y reporta su
    autovalor extremo. Independiente del camino seguido por el solver.
    """
    assignment = certificate.assignment if isinstance(certificate, LmiCertificate) else certificate
    x = problem.pack(assignment)
    return margin_report(problem, x, tol_margin)


def _certificate_at(problem, x, t, tol_margin, iterations):
    report = margin_report(problem, x, tol_margin)
    if not report.satisfied:
        return None
    return LmiCertificate(problem.unpack(x), report.as_dict(), phase_one_margin=float(t), iterations=iterations)


def solve_feasibility(problem, *, tol_margin=None, trust_radius=None, max_newton_steps=None,
                      maximize_margin=False, gap_tol=1e-9):
    """
    Devuelve un ``LmiCertificate`` verificado o un ``Infeasible``.

    Con ``maximize_margin`` el método sigue hasta converger y entrega el punto
    de margen máximo en lugar del primero que se deja certificar.
    """
    tol_margin = settings.LMI_MARGIN_TOL if tol_margin is None else tol_margin
    radius = settings.LMI_TRUST_RADIUS if trust_radius is None else trust_radius
    budget = settings.LMI_MAX_NEWTON_STEPS if max_newton_steps is None else max_newton_steps

    n = problem.size
    blocks = [_Block(c, n) for c in problem.constraints]
    if not blocks:
        raise ValueError(f"El problema {problem.name} no tiene restricciones.")
    barrier = _Barrier(blocks, n, radius)
    nu = sum(block.order for block in blocks) + 2 * n

    x = np.zeros(n)
    t0 = max(float(eigvalsh(block.value(x))[-1]) for block in blocks)
    z = np.append(x, max(t0, 0.0) + 1.0)
    s = nu / (abs(z[-1]) + 1.0)
    steps = 0

    logger.debug(f"Resolviendo {problem!r} con ν={nu}, R={radius}.")
    while True:
        stalled = False
        # centrado de Newton con búsqueda lineal de Armijo
        while True:
            if steps >= budget:
                raise NumericalBreakdown(
                    f"{problem.name}: se agotaron {budget} pasos de Newton (t={z[-1]:.3e}, s={s:.1e}).",
                    iterations=steps,
                )
            grad, hess = barrier.derivatives(z, s)
            direction = _newton_direction(hess, grad)
            decrement = float(-grad @ direction)
            if not np.isfinite(decrement):
                raise NumericalBreakdown(f"{problem.name}: dirección de Newton no finita.", iterations=steps)
            if decrement / 2 <= CENTERING_TOL:
                break
            current = barrier.value(z, s)
            alpha = 1.0
            while alpha > MIN_STEP:
                candidate = z + alpha * direction
                if barrier.value(candidate, s) <= current - ARMIJO * alpha * decrement:
                    break
                alpha /= 2
            steps += 1
            if alpha <= MIN_STEP:
                stalled = True
                break
            z = candidate

        x, t = z[:-1], float(z[-1])
        gap = nu / s
        if t - gap > 0:
            logger.debug(f"{problem.name}: infactible, margen óptimo ≥ {t - gap:.3e}.")
            return Infeasible(lower_bound=t - gap, iterations=steps, reason='margen óptimo positivo')

        converged = gap < gap_tol
        if t < 0 and (not maximize_margin or converged or stalled):
            certificate = _certificate_at(problem, x, t, tol_margin, steps)
            if certificate is not None:
                logger.debug(f"{problem.name}: factible tras {steps} pasos (t={t:.3e}).")
                return certificate

        if converged:
            return Infeasible(lower_bound=t - gap, iterations=steps,
                              reason=f'margen óptimo {t:.3e} no certificable con tolerancia {tol_margin}')
        if stalled:
            raise NumericalBreakdown(
                f"{problem.name}: la búsqueda lineal se estancó con t={t:.3e} y brecha {gap:.1e}.",
                iterations=steps,
            )
        s *= BARRIER_GROWTH
