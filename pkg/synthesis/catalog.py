# synthesis/catalog.py
"""
Ganancias y resultados publicados para el ejemplo numérico de referencia
(δ = 0.001, N0 = 0, x* = 0).
"""
DELTA = 0.001
N0 = 0
X_STAR = 0.0

NODELAY_L0 = [2.75]
NODELAY_K0 = [-5.468, 32.19]

# Listado impreso en el orden (w_0, u). Con el estado col{u, w_0} que usa el
# modelo reducido la ganancia es DELAYED_L0; la impresa deja Ã_0 − L_0 C̃_0
# inestable.
DELAYED_L0_AS_PRINTED = [7.33, 1.01]
DELAYED_L0 = [1.01, 7.33]
DELAYED_K0 = [1.95, 0.55]

# σ_max por N, sin retardo
TABLE1 = {3: 0.39, 4: 0.47, 5: 0.59, 6: 0.64, 7: 0.76, 8: 0.83}

# r_max por N con σ = 0.5 y M = 2
TABLE2_SIGMA = 0.5
TABLE2_M = 2
TABLE2 = {4: 0.32, 5: 0.45, 6: 0.56}

# simulación de referencia
SIM_SIGMA = 0.5
SIM_DELAY = 0.32
SIM_ROBUST_DELAY = 0.63
SIM_N = 4
SIM_M = 2


def published_gains(delayed):
    """(L0, K0) publicados para la variante pedida."""
    if delayed:
        return list(DELAYED_L0), list(DELAYED_K0)
    return list(NODELAY_L0), list(NODELAY_K0)
