# synthesis/services.py
import logging
import math

import numpy as np
from scipy.linalg import block_diag, eigvalsh, solve, solve_continuous_lyapunov

from lmi.exceptions import DimensionMismatch, NumericalBreakdown
from lmi.models import LmiProblem
from lmi.solver import solve_feasibility
from spectral import services as spectral

from .exceptions import AssumptionViolated, SynthesisFailed
from .models import DELAYED, DESIGNED, NODELAY, PUBLISHED, ClosedLoopMatrices, GainSet, ReducedModel

logger = logging.getLogger(__name__)

# umbral para considerar nulo un coeficiente de medición
ZERO_TOL = 1e-12


def minimal_controller_dimension(sigma, delta):
    """Menor N0 tal que −λ_n + σ < −δ para todo n > N0."""
    if sigma < 0:
        raise ValueError(f"σ debe ser no negativo, se recibió {sigma}.")
    if delta <= 0:
        raise ValueError(f"δ debe ser positivo, se recibió {delta}.")
    N0 = 0
    while spectral.eigenvalue(N0 + 1) <= sigma + delta:
        N0 += 1
    return N0


def build_reduced_model(N0, N, x_star, delayed=False):
    if N0 < 0 or N < N0:
        raise ValueError(f"Se requiere 0 ≤ N0 ≤ N, se recibió N0={N0}, N={N}.")
    if not 0 <= x_star <= 1:
        raise ValueError(f"x* debe pertenecer a [0, 1], se recibió {x_star}.")

    c = np.array([spectral.eigenfunction(n, x_star) for n in range(N + 1)])
    c[np.abs(c) <= ZERO_TOL] = 0.0
    zeros = [n for n in range(N0 + 1) if c[n] == 0.0]
    if zeros:
        raise AssumptionViolated(
            f"φ_n(x*) = 0 para n={zeros} con x*={x_star}: el par (A_0, C_0) no es observable."
        )
    psi_star = spectral.actuation_shape(x_star)
    if delayed and abs(psi_star) <= ZERO_TOL:
        raise AssumptionViolated(f"ψ(x*) = 0 con x*={x_star}: el diseño con retardo requiere ψ(x*) ≠ 0.")

    lam = spectral.eigenvalues(N)
    b = spectral.input_coefficients(N)
    A0 = np.diag(-lam[:N0 + 1])
    B0 = b[:N0 + 1]
    C0 = c[:N0 + 1]
    return ReducedModel(
        N0=N0,
        N=N,
        x_star=float(x_star),
        mu=spectral.MU,
        A0=A0,
        A0_tilde=block_diag([[-spectral.MU]], A0),
        B0=B0,
        B0_tilde=np.concatenate([[1.0], B0]),
        C0=C0,
        C0_tilde=np.concatenate([[psi_star], C0]),
        C1=c[N0 + 1:],
        A1=np.diag(-lam[N0 + 1:]),
        B1=b[N0 + 1:],
        delayed=delayed,
    )


def _distinct_diagonal(A):
    A = np.atleast_2d(A)
    if not np.allclose(A, np.diag(np.diag(A))):
        raise ValueError("La prueba de Hautus implementada requiere una matriz diagonal.")
    diag = np.diag(A)
    return diag, np.unique(diag).size == diag.size


def is_observable_diagonal(A, C):
    """Hautus sobre A diagonal: autovalores simples y C sin entradas nulas."""
    _, distinct = _distinct_diagonal(A)
    return distinct and bool(np.all(np.abs(np.ravel(C)) > ZERO_TOL))


def is_controllable_diagonal(A, B):
    _, distinct = _distinct_diagonal(A)
    return distinct and bool(np.all(np.abs(np.ravel(B)) > ZERO_TOL))


def lyapunov_margin(P, A_cl, delta):
    """
    (máx autovalor de P A + Aᵀ P + 2δP, mín autovalor de P). El certificado es
    válido cuando el primero es negativo y el segundo positivo.
    """
    P = np.atleast_2d(P)
    A_cl = np.atleast_2d(A_cl)
    lyap = P @ A_cl + A_cl.T @ P + 2 * delta * P
    return float(eigvalsh((lyap + lyap.T) / 2)[-1]), float(eigvalsh((P + P.T) / 2)[0])


def _solve_design(problem):
    try:
        result = solve_feasibility(problem, maximize_margin=True)
    except NumericalBreakdown as exc:
        raise SynthesisFailed(f"El diseño {problem.name} no convergió: {exc}") from exc
    if not result.feasible:
        raise SynthesisFailed(f"El diseño {problem.name} resultó infactible ({result.reason}).")
    return result


def design_observer_for_pair(A, C, delta):
    """
    Resuelve P(A−LC) + (A−LC)ᵀP + 2δP ≺ 0 con el cambio Y = P L y devuelve
    (L, P). Se acota P ≺ I para que el margen maximizado sea significativo.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    problem = LmiProblem('observador')
    P = problem.add_symmetric('P', n)
    Y = problem.add_matrix('Y', n, 1)
    problem.require_negative((P @ A).sym() - (Y @ C).sym() + 2 * delta * P, 'Lyapunov observador')
    problem.require_negative(P - np.eye(n), 'P < I')
    certificate = _solve_design(problem)
    P_val = certificate.assignment['P']
    L = solve(P_val, certificate.assignment['Y'], assume_a='pos').ravel()
    return L, P_val


def design_state_feedback(A, B, delta):
    """
    Resuelve el dual: Q = P_c⁻¹, Z = K Q con AQ + QAᵀ − BZ − ZᵀBᵀ + 2δQ ≺ 0.
    Devuelve (K, P_c).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(-1, 1)
    n = A.shape[0]
    problem = LmiProblem('controlador')
    Q = problem.add_symmetric('Q', n)
    Z = problem.add_matrix('Z', 1, n)
    problem.require_negative((A @ Q).sym() - (B @ Z).sym() + 2 * delta * Q, 'Lyapunov controlador')
    problem.require_negative(Q - np.eye(n), 'Q < I')
    certificate = _solve_design(problem)
    Q_val = certificate.assignment['Q']
    K = solve(Q_val, certificate.assignment['Z'].T, assume_a='pos').ravel()
    return K, np.linalg.inv(Q_val)


def design_observer_gain(model, delta, delayed=None):
    delayed = model.delayed if delayed is None else delayed
    A, C = model.observer_pair(delayed)
    if not is_observable_diagonal(A, C):
        raise AssumptionViolated(f"{model}: el par del observador no es observable.")
    L, P = design_observer_for_pair(A, C, delta)
    worst, smallest = lyapunov_margin(P, A - np.outer(L, C), delta)
    if worst >= 0 or smallest <= 0:
        raise SynthesisFailed(f"La ganancia del observador no verifica: margen {worst:.3e}, mín(P)={smallest:.3e}.")
    logger.info(f"Observador diseñado para {model}: L0={np.round(L, 4).tolist()} (margen {worst:.3e}).")
    return L, P


def design_controller_gain(model, delta):
    A, B = model.controller_pair()
    if not is_controllable_diagonal(A, B):
        raise AssumptionViolated(f"{model}: el par (Ã_0, B̃_0) no es controlable.")
    K, P = design_state_feedback(A, B, delta)
    worst, smallest = lyapunov_margin(P, A - np.outer(B, K), delta)
    if worst >= 0 or smallest <= 0:
        raise SynthesisFailed(f"La ganancia del controlador no verifica: margen {worst:.3e}, mín(P)={smallest:.3e}.")
    logger.info(f"Controlador diseñado para {model}: K0={np.round(K, 4).tolist()} (margen {worst:.3e}).")
    return K, P


def design_gains(model, delta, delayed=None):
    delayed = model.delayed if delayed is None else delayed
    L0, P_o = design_observer_gain(model, delta, delayed)
    K0, P_c = design_controller_gain(model, delta)
    return GainSet(L0, K0, delta, delayed=delayed, P_o=P_o, P_c=P_c, source=DESIGNED)


def _lyapunov_certificate(A_cl, delta, label):
    shifted = A_cl + delta * np.eye(A_cl.shape[0])
    if np.max(np.linalg.eigvals(shifted).real) >= 0:
        raise SynthesisFailed(f"{label}: A + δI no es Hurwitz, no existe certificado.")
    # (A+δI)ᵀ P + P (A+δI) = −I
    P = solve_continuous_lyapunov(shifted.T, -np.eye(A_cl.shape[0]))
    return (P + P.T) / 2


def certify_gains(model, L0, K0, delta, delayed=None, source=PUBLISHED):
    """
    Construye certificados de Lyapunov para ganancias dadas (por ejemplo las
    publicadas) y los verifica con autovalores.
    """
    delayed = model.delayed if delayed is None else delayed
    gains = GainSet(L0, K0, delta, delayed=delayed, source=source)
    A, C = model.observer_pair(delayed)
    if gains.L0.size != A.shape[0] or gains.K0.size != model.A0_tilde.shape[0]:
        raise DimensionMismatch(
            f"Ganancias de tamaño L0={gains.L0.size}, K0={gains.K0.size} para {model}."
        )
    A_obs = gains.observer_closed_loop(model)
    A_ctl = gains.controller_closed_loop(model)
    gains.P_o = _lyapunov_certificate(A_obs, delta, 'Observador')
    gains.P_c = _lyapunov_certificate(A_ctl, delta, 'Controlador')
    for label, P, A_cl in (('observador', gains.P_o, A_obs), ('controlador', gains.P_c, A_ctl)):
        worst, smallest = lyapunov_margin(P, A_cl, delta)
        if worst >= -1e-9 or smallest <= 1e-9:
            raise SynthesisFailed(f"Certificado del {label} inválido: margen {worst:.3e}, mín(P)={smallest:.3e}.")
    logger.info(f"Ganancias certificadas para {model}: {gains}")
    return gains


def jordan_block(M):
    """Bloque de Jordan nilpotente superior J_{0,M}."""
    if M < 1:
        raise ValueError(f"M debe ser al menos 1, se recibió {M}.")
    return np.eye(M, k=1)


def _check_gain_sizes(model, gains, observer_size):
    if gains.L0.size != observer_size or gains.K0.size != model.N0 + 2:
        raise DimensionMismatch(
            f"Se esperaban L0 de tamaño {observer_size} y K0 de tamaño {model.N0 + 2}, "
            f"se recibieron {gains.L0.size} y {gains.K0.size}."
        )


def assemble_nodelay(model, gains):
    """
    Lazo cerrado sin retardo con X = col{ŵ^{N0}, e^{N0}, ŵ^{N−N0}, e^{N−N0}}
    de dimensión 2N+3.
    """
    _check_gain_sizes(model, gains, model.N0 + 1)
    n0, nt = model.N0 + 1, model.tail_size
    L0, K0 = gains.L0, gains.K0
    L0_tilde = np.concatenate([[0.0], L0])
    A0t, B0t = model.controller_pair()
    C0 = model.C0.reshape(1, -1)
    C1 = model.C1.reshape(1, -1)
    z = np.zeros

    F_X = np.block([
        [A0t - np.outer(B0t, K0), np.outer(L0_tilde, C0), z((n0 + 1, nt)), np.outer(L0_tilde, C1)],
        [z((n0, n0 + 1)), model.A0 - np.outer(L0, C0), z((n0, nt)), -np.outer(L0, C1)],
        [-np.outer(model.B1, K0), z((nt, n0)), model.A1, z((nt, nt))],
        [z((nt, n0 + 1)), z((nt, n0)), z((nt, nt)), model.A1],
    ])
    L_zeta = np.concatenate([L0_tilde, -L0, z(nt), z(nt)])
    K_X = np.concatenate([K0, z(n0), z(nt), z(nt)]).reshape(1, -1)
    Xi_X = np.diag(np.concatenate([[2 / math.pi ** 2], np.ones(n0), z(n0), np.ones(nt), z(nt)]))
    Xi_E = np.diag(np.concatenate([z(n0 + 1), np.ones(n0), z(nt), np.ones(nt)]))
    return ClosedLoopMatrices(NODELAY, F_X=F_X, Xi_X=Xi_X, Xi_E=Xi_E, L_zeta=L_zeta, K_X=K_X)


def assemble_delayed(model, gains, M):
    """
    Lazo cerrado con M subpredictores: X = col{w^{N0}, w^{N−N0}} y
    X_e = col{e_1^{N0}, e_1^{N−N0}, …, e_M^{N0}, e_M^{N−N0}}.
    """
    if M < 1:
        raise ValueError(f"M debe ser al menos 1, se recibió {M}.")
    _check_gain_sizes(model, gains, model.N0 + 2)
    n0t, nt = model.N0 + 2, model.tail_size
    block = n0t + nt
    L0, K0 = gains.L0, gains.K0
    A0t, B0t = model.controller_pair()
    z = np.zeros

    F_X = np.block([
        [A0t - np.outer(B0t, K0), z((n0t, nt))],
        [-np.outer(model.B1, K0), model.A1],
    ])
    B_X = np.concatenate([B0t, model.B1])
    replicator = np.hstack([np.hstack([np.eye(n0t), z((n0t, nt))])] * M)
    F0 = np.block([
        [A0t - np.outer(L0, model.C0_tilde), -np.outer(L0, model.C1)],
        [z((nt, n0t)), model.A1],
    ])
    L_cal = np.concatenate([L0, z(nt)])
    C_cal = np.concatenate([model.C0_tilde, model.C1])
    LC = np.outer(L_cal, C_cal)
    J = jordan_block(M)
    I_M = np.eye(M)
    F_e = np.kron(I_M, F0) + np.kron(J, LC)
    Lambda_e = np.kron(I_M, LC) - np.kron(J, LC)

    L_zeta = z(M * block)
    L_zeta[(M - 1) * block:] = -L_cal
    if M >= 2:
        L_zeta[(M - 2) * block:(M - 1) * block] = L_cal

    weight = np.diag(np.concatenate([[2 / math.pi ** 2], np.ones(model.N + 1)]))
    return ClosedLoopMatrices(
        DELAYED,
        F_X=F_X,
        Xi_X=weight,
        Xi_E=np.kron(I_M, weight),
        L_zeta=L_zeta,
        M=M,
        B_X=B_X,
        K0I=(K0 @ replicator).reshape(1, -1),
        replicator=replicator,
        F0=F0,
        LC=LC,
        F_e=F_e,
        Lambda_e=Lambda_e,
        K0_tilde=np.concatenate([K0, z(nt)]).reshape(1, -1),
    )
