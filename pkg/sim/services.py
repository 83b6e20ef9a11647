# sim/services.py
import logging
import math

import numpy as np
from django.conf import settings
from scipy.integrate import trapezoid

from spectral.models import GridFunction

from .exceptions import BlowUp
from .models import SimState, Trajectory

logger = logging.getLogger(__name__)


def h1_norm(f):
    """‖f‖_{H¹} con la regla del trapecio y derivada por diferencias centradas."""
    if f.nodes.size < 3:
        raise ValueError(f"La norma H¹ requiere al menos 3 nodos, hay {f.nodes.size}.")
    derivative = np.gradient(f.values, f.nodes, edge_order=2)
    return math.sqrt(float(trapezoid(f.values ** 2, f.nodes)) + float(trapezoid(derivative ** 2, f.nodes)))


def laplacian_neumann(values, dx):
    """Laplaciano centrado con nodos fantasma reflejados (w_x = 0 en ambos extremos)."""
    lap = np.empty_like(values)
    lap[1:-1] = values[:-2] - 2 * values[1:-1] + values[2:]
    lap[0] = 2 * (values[1] - values[0])
    lap[-1] = 2 * (values[-2] - values[-1])
    return lap / dx ** 2


def _check_finite(t, *arrays):
    threshold = settings.SIM_BLOWUP_THRESHOLD
    for array in arrays:
        array = np.asarray(array)
        if not np.all(np.isfinite(array)) or np.max(np.abs(array), initial=0.0) > threshold:
            raise BlowUp(f"El estado superó {threshold:g} en t={t:g}.", time=t)


def _project(config, values):
    """(⟨f, φ_0⟩, …, ⟨f, φ_N⟩) sobre la malla de la simulación."""
    return config.weighted_modes.T @ values


def step_pde(state, v_delayed, config):
    """
    Un paso FTCS de w_t = w_xx + g(t, x, w + ψ u(t−r)) − ψ v(t−r). Devuelve
    los nuevos valores de w.
    """
    w = state.w.values
    source = config.nonlinearity(state.t, config.nodes, w + config.psi * state.u_delayed(config))
    new = w + config.dt * (laplacian_neumann(w, config.dx) + source - config.psi * v_delayed)
    _check_finite(state.t + config.dt, new)
    return new


def measurement(state, config):
    """y(t) = w(x*, t) + ψ(x*) u(t−r)."""
    index = config.sensor_index
    return float(state.w.values[index] + config.psi[index] * state.u_delayed(config))


def step_observer_nodelay(modes, u, v, y, config, t=0.0):
    """
    Paso de Euler del observador de N+1 modos:
    ŵ̇_n = −λ_n ŵ_n + b_n v + ĝ_n − l_n[ŵ(x*) + ψ(x*)u − y], con l_n = 0 para n > N0.
    """
    modes = np.asarray(modes, dtype=float)
    field = config.modes @ modes
    g_hat = _project(config, config.nonlinearity(t, config.nodes, field + config.psi * u))
    innovation = field[config.sensor_index] + config.psi[config.sensor_index] * u - y
    gain = np.zeros(config.N + 1)
    gain[:config.N0 + 1] = config.gains.L0
    new = modes + config.dt * (-config.lambdas * modes + config.b * v + g_hat - gain * innovation)
    _check_finite(t + config.dt, new)
    return new


def step_subpredictors(state, y, config):
    """
    Paso de Euler de la cadena de M subpredictores. Cada bloque i lee su
    propio valor de hace r/M y v(t − (i−1)r/M); el último se corrige con y(t)
    y los demás con el bloque siguiente evaluado en t. Devuelve las nuevas
    parejas (cabeza, cola).
    """
    model, gains = config.model, config.gains
    A0t, B0t = model.controller_pair()
    h, M, r = config.sub_delay_steps, config.M, config.r
    blocks = state.predictors
    updated = []
    for i, block in enumerate(blocks, start=1):
        past_head, past_tail = block.lagged(h)
        innovation = model.C0_tilde @ past_head + model.C1 @ past_tail
        if i == M:
            innovation -= y
        else:
            following = blocks[i]
            innovation -= model.C0_tilde @ following.head + model.C1 @ following.tail
        v = state.v_history.lag((i - 1) * h)
        # campo Q(x)·col{ŵ_i^{N0}, ŵ_i^{N−N0}} evaluado en el instante adelantado
        field = config.psi * block.head[0] + config.modes @ np.concatenate([block.head[1:], block.tail])
        g_hat = _project(config, config.nonlinearity(state.t + (M + 1 - i) * r / M, config.nodes, field))
        G_head = np.concatenate([[0.0], g_hat[:config.N0 + 1]])
        head = block.head + config.dt * (A0t @ block.head + B0t * v + G_head - gains.L0 * innovation)
        tail = block.tail + config.dt * (model.A1 @ block.tail + model.B1 * v + g_hat[config.N0 + 1:])
        _check_finite(state.t + config.dt, head, tail)
        updated.append((head, tail))
    return updated


def control(state, config):
    """
    v(t) = −K0 ŵ^{N0}(t), con ŵ^{N0} = col{u, ŵ_0..ŵ_N0} sin retardo y
    ŵ_1^{N0}(t) con subpredictores. Se guarda en el historial de v.
    """
    K0 = config.gains.K0
    if config.delayed:
        v = -float(K0 @ state.predictors[0].head)
    else:
        v = -float(K0 @ np.concatenate([[state.u], state.observer[:config.N0 + 1]]))
    state.v_history.push(v)
    return v


def advance_input(u, v, config):
    """Euler de u̇ = −μu + v."""
    return u + config.dt * (-config.model.mu * u + v)


def telescope_residual(state, config):
    """
    |ŵ_1^{N0}(t−r) + Σ e_i^{N0}(t) − w^{N0}(t)|, con los errores e_i
    reconstruidos a partir de los historiales.
    """
    if not config.delayed:
        return 0.0
    h, M = config.sub_delay_steps, config.M
    coeffs = _project(config, state.w.values)
    actual = np.concatenate([[state.u_delayed(config)], coeffs[:config.N0 + 1]])
    blocks = state.predictors
    total = blocks[0].lagged(M * h)[0].copy()
    for i in range(1, M):
        total += blocks[i].lagged((M - i) * h)[0] - blocks[i - 1].lagged((M - i + 1) * h)[0]
    total += actual - blocks[M - 1].lagged(h)[0]
    return float(np.max(np.abs(total - actual)))


def observer_field(state, config):
    """ŵ(·, t): del observador sin retardo o de ŵ_1(t − r) con subpredictores."""
    if config.delayed:
        head, tail = state.predictors[0].lagged(config.delay_steps)
        coeffs = np.concatenate([head[1:], tail])
    else:
        coeffs = state.observer
    return GridFunction(config.nodes, config.modes @ coeffs)


def run_closed_loop(config):
    """
    Integra el lazo cerrado hasta T_final. En cada paso: medir, calcular v,
    actualizar observador o subpredictores, avanzar u y la EDP. Una
    divergencia corta la corrida y devuelve la trayectoria parcial marcada.
    """
    state = SimState.initial(config)
    records = {key: [] for key in ('times', 'u_delayed', 'y', 'h1_w', 'h1_what', 'telescope_residual')}
    snapshots_w, snapshots_z = [], []
    blew_up, abort_time = False, None
    logger.info(f"Inicio: {config}.")

    for step in range(config.n_steps + 1):
        y = measurement(state, config)
        v = control(state, config)
        if step % config.snapshot_stride == 0:
            u_delayed = state.u_delayed(config)
            records['times'].append(state.t)
            records['u_delayed'].append(u_delayed)
            records['y'].append(y)
            records['h1_w'].append(h1_norm(state.w))
            records['h1_what'].append(h1_norm(observer_field(state, config)))
            records['telescope_residual'].append(telescope_residual(state, config))
            if config.keep_snapshots:
                snapshots_w.append(state.w.values.copy())
                snapshots_z.append(state.w.values + config.psi * u_delayed)
        if step == config.n_steps:
            break
        try:
            v_delayed = state.v_history.lag(config.delay_steps)
            if config.delayed:
                updated = step_subpredictors(state, y, config)
            else:
                observer = step_observer_nodelay(state.observer, state.u, v, y, config, t=state.t)
            w = step_pde(state, v_delayed, config)
            u = advance_input(state.u, v, config)
            _check_finite(state.t + config.dt, [u])
        except BlowUp as exc:
            blew_up, abort_time = True, exc.time
            logger.error(f"Simulación abortada: {exc}")
            break

        if config.delayed:
            for block, (head, tail) in zip(state.predictors, updated):
                block.head, block.tail = head, tail
                block.history.push(block.stacked)
        else:
            state.observer = observer
        state.w = GridFunction(config.nodes, w)
        state.u = u
        state.u_history.push(u)
        state.step = step + 1
        state.t = state.step * config.dt

    trajectory = Trajectory(
        **{key: np.array(values) for key, values in records.items()},
        nodes=config.nodes,
        snapshots_w=np.array(snapshots_w) if config.keep_snapshots else None,
        snapshots_z=np.array(snapshots_z) if config.keep_snapshots else None,
        blew_up=blew_up,
        abort_time=abort_time,
    )
    logger.info(f"Fin: {trajectory}.")
    return trajectory


def decay_exponent(times, values):
    """
    Pendiente por mínimos cuadrados de log(values) sobre la segunda mitad
    del horizonte.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size != values.size or times.size < 2:
        raise ValueError("Se necesitan al menos dos muestras alineadas para ajustar el decaimiento.")
    keep = (times >= times[-1] / 2) & (values > 0)
    if np.count_nonzero(keep) < 2:
        raise ValueError("No hay suficientes muestras positivas en la segunda mitad del horizonte.")
    slope, _ = np.polyfit(times[keep], np.log(values[keep]), 1)
    return float(slope)
