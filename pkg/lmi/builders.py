# lmi/builders.py
"""
Constructores de las condiciones LMI de estabilidad del lazo cerrado, con y
sin retardo en la entrada.
"""
import logging
import math

import numpy as np

from spectral import services as spectral
from synthesis.services import assemble_delayed, assemble_nodelay

from .exceptions import DimensionMismatch
from .expressions import AffineMatrix, bmat
from .models import LmiProblem

logger = logging.getLogger(__name__)


def _check_dimension(model, N):
    if N is not None and N != model.N:
        raise DimensionMismatch(f"El modelo tiene N={model.N} pero se pidió N={N}.")
    return model.N


def _scalar(value):
    return AffineMatrix(np.array([[float(value)]]))


def build_lmi_nodelay(model, gains, delta, sigma, gamma, N=None):
    """
    Condición sin retardo en forma de Schur sobre η = col{X, ζ, Ĝ, H} más las
    tres filas que compensan la cola de modos n > N.
    """
    N = _check_dimension(model, N)
    if gamma <= 0:
        raise ValueError(f"Γ debe ser positivo, se recibió {gamma}.")
    loop = assemble_nodelay(model, gains)
    n = loop.F_X.shape[0]
    lam = spectral.eigenvalue(N + 1)
    xi = spectral.tail_bound(N)
    kap = spectral.kappa(N + 1, gamma)

    problem = LmiProblem(f'sin-retardo N={N} σ={sigma:g} Γ={gamma:g}')
    P = problem.add_symmetric('P_X', n)
    a1 = problem.add_scalar('alpha1')
    a2 = problem.add_scalar('alpha2')
    a3 = problem.add_scalar('alpha3')

    psi0 = ((P @ loop.F_X).sym() + 2 * delta * P
            + a3.times(2 * xi / math.pi ** 2 * loop.K_X.T @ loop.K_X)
            + a1.times(2 * sigma ** 2 * loop.Xi_X)
            + a2.times(sigma ** 2 * loop.Xi_E))
    zeta = _scalar(4 / kap * (-lam ** 2 + delta * lam)) + a2.times([[2 * sigma ** 2 / kap]])
    PL = P @ loop.L_zeta.reshape(-1, 1)
    tail = -2 * kap / lam
    pi2 = bmat([
        [a1.times([[tail / lam]]), None, None],
        [None, a2.times([[tail / lam]]), None],
        [None, None, a3.times([[tail]])],
    ])
    ones_row = np.ones((1, 3))

    main = bmat([
        [psi0, PL, P, P, np.zeros((n, 3))],
        [PL.T, zeta, np.zeros((1, n)), np.zeros((1, n)), ones_row],
        [P, None, a1.times(-np.eye(n)), None, None],
        [P, None, None, a2.times(-np.eye(n)), None],
        [None, ones_row.T, None, None, pi2],
    ])
    problem.require_negative(main, 'LMI principal')
    logger.debug(f"Construido {problem!r} (bloque principal {main.shape[0]}×{main.shape[0]}).")
    return problem


def delayed_scalar_block(lam, delta, sigma, gamma, q, a1, a2, a3, beta):
    """Forma de Schur 4×4 de la condición sobre el primer modo de la cola."""
    phi3 = (_scalar(-lam ** 2 + delta * lam)
            + q.times([[gamma * lam / 2 + (1 + gamma) / 2]])
            + a1.times([[sigma ** 2]])
            + beta.times([[sigma ** 2]]))
    return bmat([
        [phi3, _scalar(1), _scalar(1), _scalar(1)],
        [_scalar(1), a1.times([[-2 / lam ** 2]]), None, None],
        [_scalar(1), None, a2.times([[-2 / lam]]), None],
        [_scalar(1), None, None, a3.times([[-2 / lam]])],
    ])


def build_lmi_delayed(model, gains, delta, sigma, gamma, N=None, M=2, r=None):
    """
    Condiciones con retardo r y M subpredictores sobre
    η = col{X, G, X_e, ζ(t−r/M), Υ, H}, más la condición escalar de la cola.
    """
    N = _check_dimension(model, N)
    if r is None or r <= 0:
        raise ValueError(f"El retardo r debe ser positivo, se recibió {r}.")
    if M < 1:
        raise ValueError(f"M debe ser al menos 1, se recibió {M}.")
    if gamma <= 0:
        raise ValueError(f"Γ debe ser positivo, se recibió {gamma}.")
    loop = assemble_delayed(model, gains, M)
    nx = loop.F_X.shape[0]
    ne = loop.F_e.shape[0]
    lam = spectral.eigenvalue(N + 1)
    xi = spectral.tail_bound(N)
    eps = math.exp(-2 * delta * r / M)
    h = r / M

    problem = LmiProblem(f'con-retardo N={N} M={M} r={r:g} σ={sigma:g} Γ={gamma:g}')
    P_X = problem.add_symmetric('P_X', nx)
    P_e = problem.add_symmetric('P_e', ne)
    S_e = problem.add_symmetric('S_e', ne)
    R_e = problem.add_symmetric('R_e', ne)
    q = problem.add_scalar('q')
    a1 = problem.add_scalar('alpha1')
    a2 = problem.add_scalar('alpha2')
    a3 = problem.add_scalar('alpha3')
    beta = problem.add_scalar('beta')

    tail_gain = 2 * xi / math.pi ** 2
    phi1 = ((P_X @ loop.F_X).sym() + 2 * delta * P_X
            + a1.times(2 * sigma ** 2 * loop.Xi_X)
            + a2.times(tail_gain * loop.K0_tilde.T @ loop.K0_tilde))
    phi2 = ((P_e @ loop.F_e).sym() + 2 * delta * P_e
            + a3.times(tail_gain * loop.K0I.T @ loop.K0I)
            + beta.times(2 * sigma ** 2 * loop.Xi_E)
            + (1 - eps) * S_e)
    coupling = P_X @ (loop.B_X.reshape(-1, 1) @ loop.K0I)
    PL = P_e @ loop.L_zeta.reshape(-1, 1)
    PLam = P_e @ loop.Lambda_e - eps * S_e

    psi1 = bmat([
        [phi1, P_X, coupling, np.zeros((nx, 1)), np.zeros((nx, ne)), np.zeros((nx, ne))],
        [P_X, a1.times(-np.eye(nx)), None, None, None, None],
        [coupling.T, None, phi2, PL, PLam, P_e],
        [None, None, PL.T, q.times([[-eps]]), None, None],
        [None, None, PLam.T, None, -eps * (S_e + R_e), None],
        [None, None, P_e, None, None, beta.times(-np.eye(ne))],
    ])
    theta = np.hstack([
        np.zeros((ne, 2 * nx)), loop.F_e, loop.L_zeta.reshape(-1, 1), loop.Lambda_e, np.eye(ne),
    ])
    psi1 = psi1 + h ** 2 * (theta.T @ R_e @ theta)
    problem.require_negative(psi1, 'LMI principal')
    problem.require_negative(delayed_scalar_block(lam, delta, sigma, gamma, q, a1, a2, a3, beta), 'LMI escalar')
    logger.debug(f"Construido {problem!r} (bloque principal {psi1.shape[0]}×{psi1.shape[0]}).")
    return problem
