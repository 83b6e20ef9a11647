# experiments/services.py
"""
Orquestación de los experimentos: cada ``run_*`` recibe un
``ExperimentConfig`` validado, escribe sus CSV en ``config.out`` y devuelve
un resumen.
"""
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor

from lmi import textio
from lmi.builders import build_lmi_delayed, build_lmi_nodelay
from lmi.exceptions import NumericalBreakdown
from lmi.search import search_max_delay, search_max_sigma
from lmi.solver import solve_feasibility, verify_certificate
from sim.exceptions import BlowUp
from sim.exporters import fmt, write_snapshots_csv, write_trajectory_csv
from sim.models import SimConfig
from sim.services import decay_exponent, run_closed_loop
from synthesis import catalog
from synthesis.models import PUBLISHED
from synthesis.services import build_reduced_model, certify_gains, design_gains, lyapunov_margin

logger = logging.getLogger(__name__)


def _write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return path


def resolve_gains(config, delayed):
    """Ganancias publicadas (con certificados) o diseñadas por LMI."""
    model = build_reduced_model(config.N0, config.N, config.x_star, delayed=delayed)
    if config.gains == PUBLISHED:
        L0, K0 = catalog.published_gains(delayed)
        return certify_gains(model, L0, K0, config.delta, source=PUBLISHED)
    return design_gains(model, config.delta)


def run_synthesize(config):
    gains = resolve_gains(config, config.delayed)
    model = build_reduced_model(config.N0, config.N, config.x_star, delayed=config.delayed)
    obs_margin, obs_min = lyapunov_margin(gains.P_o, gains.observer_closed_loop(model), config.delta)
    ctl_margin, ctl_min = lyapunov_margin(gains.P_c, gains.controller_closed_loop(model), config.delta)
    rows = [('L0', i, float(v)) for i, v in enumerate(gains.L0)]
    rows += [('K0', i, float(v)) for i, v in enumerate(gains.K0)]
    rows += [
        ('observer_margin', 0, obs_margin),
        ('observer_min_eig_P', 0, obs_min),
        ('controller_margin', 0, ctl_margin),
        ('controller_min_eig_P', 0, ctl_min),
    ]
    path = _write_csv(config.output_dir / 'gains.csv', ['name', 'index', 'value'], rows)
    logger.info(f"Ganancias escritas en {path}: {gains}")
    return {'gains': gains, 'path': path}


def _build_problem(config, model, gains, gamma):
    if config.delayed:
        return build_lmi_delayed(model, gains, config.delta, config.sigma, gamma, M=config.M, r=config.r)
    return build_lmi_nodelay(model, gains, config.delta, config.sigma, gamma)


def run_verify_lmi(config):
    """
    Recorre la malla de Γ hasta encontrar un certificado. Escribe
    lmi_margins.csv y, si hay certificado, el problema y el certificado en
    texto plano.
    """
    model = build_reduced_model(config.N0, config.N, config.x_star, delayed=config.delayed)
    gains = resolve_gains(config, config.delayed)
    verdicts = 0
    found = None
    for gamma in config.gamma_values():
        problem = _build_problem(config, model, gains, gamma)
        try:
            result = solve_feasibility(problem)
        except NumericalBreakdown as exc:
            logger.warning(f"Γ={gamma:g}: ruptura numérica ({exc}); se omite.")
            continue
        verdicts += 1
        if result.feasible:
            found = (gamma, problem, result)
            break
    if verdicts == 0:
        raise NumericalBreakdown("Ningún Γ de la malla dio un veredicto.")

    header = ['gamma', 'constraint', 'sign', 'extreme_eigenvalue', 'satisfied']
    if found is None:
        path = _write_csv(config.output_dir / 'lmi_margins.csv', header, [])
        logger.info(f"LMI infactibles para toda la malla de Γ ({config.gamma_grid}).")
        return {'feasible': False, 'gamma': None, 'report': None, 'path': path}

    gamma, problem, certificate = found
    report = verify_certificate(problem, certificate)
    rows = [(float(gamma), m.label, m.sign, float(m.extreme), str(m.satisfied).lower()) for m in report.margins]
    path = _write_csv(config.output_dir / 'lmi_margins.csv', header, rows)
    (config.output_dir / 'problem.txt').write_text(textio.dump_problem(problem), encoding='utf-8')
    (config.output_dir / 'certificate.txt').write_text(textio.dump_certificate(certificate), encoding='utf-8')
    logger.info(f"LMI factibles con Γ={gamma:g}; márgenes en {path}.")
    return {'feasible': report.satisfied, 'gamma': float(gamma), 'report': report, 'path': path}


def _bracket_row(result):
    value = math.nan if result.max_feasible is None else float(result.max_feasible)
    gamma = math.nan if result.gamma_used is None else float(result.gamma_used)
    return value, float(result.bracket[0]), float(result.bracket[1]), gamma, str(result.unbounded).lower()


def run_search_sigma(config):
    gains = resolve_gains(config, delayed=False)
    result = search_max_sigma(config.N, config.delta, gains, config.gamma_values(), config.tolerance,
                              N0=config.N0, x_star=config.x_star)
    path = _write_csv(config.output_dir / 'search_sigma.csv',
                      ['N', 'sigma_max', 'lower', 'upper', 'gamma', 'unbounded'],
                      [(config.N, *_bracket_row(result))])
    return {'result': result, 'path': path}


def run_search_delay(config):
    gains = resolve_gains(config, delayed=True)
    result = search_max_delay(config.N, config.M, config.sigma, config.delta, gains, config.gamma_values(),
                              config.tolerance, N0=config.N0, x_star=config.x_star)
    path = _write_csv(config.output_dir / 'search_delay.csv',
                      ['N', 'M', 'sigma', 'r_max', 'lower', 'upper', 'gamma', 'unbounded'],
                      [(config.N, config.M, float(config.sigma), *_bracket_row(result))])
    return {'result': result, 'path': path}


def build_sim_config(config):
    return SimConfig(
        N=config.N,
        N0=config.N0,
        x_star=config.x_star,
        r=config.r,
        M=config.M,
        sigma=config.sigma,
        nonlinearity=config.nonlinearity,
        gains=resolve_gains(config, config.delayed),
        initial_condition=config.initial_profile(),
        Nx=config.Nx,
        dt=config.dt or None,
        T_final=config.T_final,
        snapshot_stride=config.snapshot_stride or None,
        keep_snapshots=config.snapshots,
    )


def run_simulate(config):
    """
    Simula, escribe trajectory.csv (y las instantáneas si se piden) y ajusta
    el exponente de decaimiento de ‖w‖_{H¹} sobre la segunda mitad del
    horizonte. Una divergencia se reporta con BlowUp tras escribir la
    trayectoria parcial.
    """
    sim_config = build_sim_config(config)
    trajectory = run_closed_loop(sim_config)
    path = write_trajectory_csv(trajectory, config.output_dir / 'trajectory.csv')
    if config.snapshots:
        write_snapshots_csv(trajectory, config.output_dir / 'snapshots')
    if trajectory.blew_up:
        raise BlowUp(f"La simulación divergió en t={trajectory.abort_time:g}; trayectoria parcial en {path}.",
                     time=trajectory.abort_time)

    exponent = decay_exponent(trajectory.times, trajectory.h1_w)
    report = {
        'decay_exponent': exponent,
        'guaranteed_exponent': -2 * config.delta,
        'h1_initial': float(trajectory.h1_w[0]),
        'h1_final': float(trajectory.h1_w[-1]),
        'samples': trajectory.sample_count,
    }
    _write_csv(config.output_dir / 'decay_fit.csv', list(report), [list(report.values())])
    logger.info(f"Exponente de decaimiento ajustado: {exponent:.4f}.")
    return {'trajectory': trajectory, 'report': report, 'path': path}


def _table1_cell(N, config):
    gains = resolve_gains(config, delayed=False)
    try:
        result = search_max_sigma(N, config.delta, gains, config.gamma_values(), config.tolerance,
                                  N0=config.N0, x_star=config.x_star)
    except NumericalBreakdown as exc:
        logger.error(f"Tabla 1, N={N}: {exc}")
        return N, math.nan
    return N, math.nan if result.max_feasible is None else float(result.max_feasible)


def _table2_cell(N, config):
    gains = resolve_gains(config, delayed=True)
    try:
        result = search_max_delay(N, catalog.TABLE2_M, catalog.TABLE2_SIGMA, config.delta, gains,
                                  config.gamma_values(), config.tolerance, N0=config.N0, x_star=config.x_star)
    except NumericalBreakdown as exc:
        logger.error(f"Tabla 2, N={N}: {exc}")
        return N, math.nan
    return N, math.nan if result.max_feasible is None else float(result.max_feasible)


def _sweep(cell, values, config):
    configs = [config] * len(values)
    if config.jobs <= 1:
        return list(map(cell, values, configs))
    with ProcessPoolExecutor(max_workers=config.jobs) as executor:
        return list(executor.map(cell, values, configs))


def _comparison(title, computed, published):
    lines = [title, f"{'N':>3} {'obtenido':>10} {'publicado':>10} {'desviación':>11}"]
    for N, value in computed:
        expected = published[N]
        deviation = value - expected
        lines.append(f"{N:>3} {value:>10.4f} {expected:>10.2f} {deviation:>+11.4f}")
    return lines


def run_reproduce_tables(config):
    """
    Tabla 1 (σ máximo sin retardo, N=3..8) y Tabla 2 (r máximo con σ=0.5,
    M=2, N=4..6). Una celda que falla no detiene el barrido.
    """
    table1 = _sweep(_table1_cell, list(catalog.TABLE1), config)
    table2 = _sweep(_table2_cell, list(catalog.TABLE2), config)
    path1 = _write_csv(config.output_dir / 'table1.csv', ['N', 'sigma_max'], table1)
    path2 = _write_csv(config.output_dir / 'table2.csv', ['N', 'M', 'r_max'],
                       [(N, catalog.TABLE2_M, value) for N, value in table2])
    summary = _comparison('Tabla 1: σ máximo sin retardo', table1, catalog.TABLE1)
    summary += _comparison(f'Tabla 2: r máximo (σ={catalog.TABLE2_SIGMA}, M={catalog.TABLE2_M})',
                           table2, catalog.TABLE2)
    logger.info(f"Tablas escritas en {path1} y {path2}.")
    return {'table1': table1, 'table2': table2, 'paths': (path1, path2), 'summary': summary}
