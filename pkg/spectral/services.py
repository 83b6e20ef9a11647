# spectral/services.py
import logging
import math

import numpy as np
from django.conf import settings
from scipy.integrate import trapezoid

from .models import GridFunction, uniform_nodes

logger = logging.getLogger(__name__)

# μ = π²/4, autovalor asociado a la forma de actuación ψ
MU = math.pi ** 2 / 4

_X_TOL = 1e-12


def _check_unit_interval(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -_X_TOL) or np.any(arr > 1 + _X_TOL):
        raise ValueError(f"x debe pertenecer a [0, 1], se recibió {x}.")
    return arr


def _check_mode(n):
    if int(n) != n or n < 0:
        raise ValueError(f"El índice de modo debe ser un entero no negativo, se recibió {n}.")
    return int(n)


def eigenvalue(n):
    """λ_n = n²π² (λ_0 = 0)."""
    n = _check_mode(n)
    return float(n * n) * math.pi ** 2


def eigenvalues(max_mode):
    n = np.arange(_check_mode(max_mode) + 1, dtype=float)
    return n ** 2 * math.pi ** 2


def eigenfunction(n, x):
    """
    φ_0 ≡ 1 y φ_n(x) = √2 cos(nπx). Acepta escalares o arreglos de numpy.
    """
    n = _check_mode(n)
    arr = _check_unit_interval(x)
    if n == 0:
        value = np.ones_like(arr)
    else:
        value = math.sqrt(2) * np.cos(n * math.pi * arr)
    return float(value) if value.ndim == 0 else value


def eigenfunction_derivative(n, x):
    n = _check_mode(n)
    arr = _check_unit_interval(x)
    value = -math.sqrt(2) * n * math.pi * np.sin(n * math.pi * arr)
    return float(value) if value.ndim == 0 else value


def actuation_shape(x):
    """ψ(x) = −(2/π) cos(πx/2), con ψ′(0) = 0 y ψ′(1) = 1."""
    arr = _check_unit_interval(x)
    value = -(2 / math.pi) * np.cos(math.pi * arr / 2)
    return float(value) if value.ndim == 0 else value


def actuation_shape_derivative(x):
    arr = _check_unit_interval(x)
    value = np.sin(math.pi * arr / 2)
    return float(value) if value.ndim == 0 else value


def input_coefficient(n):
    """
    b_0 = 4/π² y b_n = (−1)^{n+1} 4√2 / (π²(4n²−1)).

    Con esta convención la ecuación modal es ẇ_n = −λ_n w_n + b_n v, de modo
    que b_n = −⟨ψ, φ_n⟩.
    """
    n = _check_mode(n)
    if n == 0:
        return 4 / math.pi ** 2
    sign = 1.0 if n % 2 == 1 else -1.0
    return sign * 4 * math.sqrt(2) / (math.pi ** 2 * (4 * n * n - 1))


def input_coefficients(max_mode):
    return np.array([input_coefficient(n) for n in range(_check_mode(max_mode) + 1)])


def tail_bound(N):
    """ξ_{N+1} = (1 + 1/(4(N+1)²−1))² / N; acota Σ_{n>N} λ_n b_n² por 2ξ_{N+1}/π²."""
    N = _check_mode(N)
    if N == 0:
        raise ValueError("tail_bound requiere N ≥ 1 (división por N).")
    return (1 + 1 / (4 * (N + 1) ** 2 - 1)) ** 2 / N


def tail_series(N, upper=10 ** 6):
    """
    Suma parcial Σ_{n=N+1}^{upper} λ_n b_n². El resto más allá de ``upper``
    queda acotado por 2·tail_bound(upper)/π².
    """
    N = _check_mode(N)
    if upper <= N:
        return 0.0
    n = np.arange(N + 1, int(upper) + 1, dtype=float)
    # λ_n b_n² = 32 n² / (π² (4n²−1)²)
    terms = 32 * n ** 2 / (math.pi ** 2 * (4 * n ** 2 - 1) ** 2)
    # suma de menor a mayor para no perder las colas pequeñas
    return float(np.sum(terms[::-1]))


def kappa(n, gamma):
    """κ_n = 1 + Γ + λ_n/Γ."""
    if gamma <= 0:
        raise ValueError(f"Γ debe ser positivo, se recibió {gamma}.")
    return 1 + gamma + eigenvalue(n) / gamma


def mode_matrix(nodes, max_mode):
    """Matriz (len(nodes), N+1) con columnas φ_0..φ_N evaluadas en los nodos."""
    nodes = _check_unit_interval(nodes)
    n = np.arange(_check_mode(max_mode) + 1)
    phi = math.sqrt(2) * np.cos(math.pi * np.outer(nodes, n))
    phi[:, 0] = 1.0
    return phi


def trapezoid_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size < 2:
        raise ValueError("La cuadratura necesita al menos dos nodos.")
    weights = np.empty_like(nodes)
    steps = np.diff(nodes)
    weights[0] = steps[0] / 2
    weights[-1] = steps[-1] / 2
    weights[1:-1] = (steps[:-1] + steps[1:]) / 2
    return weights


def _require_grid(f):
    if f is None or f.nodes.size == 0:
        raise ValueError("La función de malla está vacía.")
    if f.nodes.size < 3:
        raise ValueError(f"La proyección requiere al menos 3 nodos, hay {f.nodes.size}.")


def project(f, n):
    """Aproxima ⟨f, φ_n⟩ = ∫₀¹ f φ_n dx con la regla del trapecio compuesta."""
    _require_grid(f)
    return float(trapezoid(f.values * eigenfunction(n, f.nodes), f.nodes))


def project_many(f, max_mode):
    """Vector (⟨f,φ_0⟩, …, ⟨f,φ_N⟩) en un único producto matricial."""
    _require_grid(f)
    weights = trapezoid_weights(f.nodes)
    return mode_matrix(f.nodes, max_mode).T @ (weights * f.values)


def synthesize_field(coeffs, nodes=None):
    """
    Evalúa Σ_n coeffs[n] φ_n(x) sobre la malla. Sin nodos explícitos se usa la
    malla por defecto de SPECTRAL_GRID_INTERVALS intervalos.
    """
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if nodes is None:
        nodes = uniform_nodes(settings.SPECTRAL_GRID_INTERVALS)
    nodes = np.asarray(nodes, dtype=float)
    values = mode_matrix(nodes, coeffs.size - 1) @ coeffs
    return GridFunction(nodes, values)


def synthesize_derivative(coeffs, nodes):
    """Derivada exacta en x de la serie truncada Σ coeffs[n] φ_n."""
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    nodes = np.asarray(nodes, dtype=float)
    values = np.zeros_like(nodes)
    for n, c in enumerate(coeffs[1:], start=1):
        values += c * eigenfunction_derivative(n, nodes)
    return GridFunction(nodes, values)


def l2_norm(f):
    return math.sqrt(max(float(trapezoid(f.values ** 2, f.nodes)), 0.0))
