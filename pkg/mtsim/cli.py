#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
mtsim batch front-end: reads a scenario file, runs one subcommand and writes CSV/JSON results
plus manifest.json to the output directory.
    mtsim <subcommand> --config FILE [--seed N] [--out DIR]
    mtsim --print-schema <subcommand>
Exit codes: 0 success, 2 invalid scenario or parameters, 3 numerical failure.
MTSIM_THREADS caps the number of worker threads; results do not depend on it.
"""
# -*- encoding: utf-8 -*-
import argparse
from dataclasses import dataclass
import datetime
import logging as log
import math
import os
from pathlib import Path
import platform
import shutil
import sys
import tempfile
from typing import Any, Callable, Dict, List, Optional, Sequence
import numpy as np
import scipy
from . import __version__, last_mod_date
from . import blackhole, decoherence, kink, liouville, tdva
from .scenario import SEED_LIMIT, SUBCOMMANDS, Scenario, ScenarioError, load_scenario, schema_text
from .util import (MTSimError, NumericalError, ParameterError, complex_array_from_pairs, complex_pairs, gev_to_ev,
                   gus_length, gus_time, joule_to_ev, kg_to_ev, write_csv, write_json)

log.basicConfig(level=log.INFO)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


@dataclass
class Artifact:
    """One output file; rows for CSV, payload for JSON."""
    filename: str
    header: Optional[List[str]] = None
    rows: Optional[List[Sequence[Any]]] = None
    payload: Any = None


def _csv(filename: str, header: List[str], rows) -> Artifact:
    return Artifact(filename=filename, header=header, rows=list(rows))


def _json(filename: str, payload: Dict[str, Any]) -> Artifact:
    return Artifact(filename=filename, payload=payload)


def _require(scn: Scenario, keys: Sequence[str], reason: str):
    if missing := [key for key in keys if scn.get(key) is None]:
        problems = [(scn.lines.get(key), key, f"missing key '{key}' {reason}") for key in missing]
        raise ScenarioError(problems, scn.source)


def _mt_params(scn: Scenario) -> kink.MTParams:
    A = scn.get('A')
    if A is None:
        _require(scn, ['T', 'Tc', 'temper_const'], 'when A is not given')
        A = kink.temperature_coefficient(scn['T'], scn['Tc'], scn['temper_const'])
    return kink.MTParams(M=scn['M'], A=A, B=scn['B'], k=scn['k'], R0=scn['R0'], gamma=scn['gamma'], q=scn['q'],
                         E=scn['E'], T=scn.get('T'), Tc=scn.get('Tc'), temper_const=scn.get('temper_const'))


def _kink_speed(scn: Scenario, params: kink.MTParams, roots: kink.KinkRoots) -> float:
    if (v := scn.get('v')) is not None:
        return v
    if params.gamma == 0:
        log.info('gamma = 0: the undamped kink speed is free; using the static kink (v = 0)')
        return 0.0
    return kink.kink_velocity(params, roots)


def run_kink(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    params = _mt_params(scn)
    sigma = kink.reduce(params, 0.0).sigma
    roots = kink.solve_cubic(sigma)
    v = _kink_speed(scn, params, roots)
    dp = kink.reduce(params, v)
    energetics = kink.kink_energetics(params, v)
    xi = np.linspace(scn['xi_min'], scn['xi_max'], scn['n_points'])
    # no damped kink propagates at d = 0
    v_law = kink.kink_velocity(params, roots) if roots.d or params.gamma == 0 else None
    result = {'sigma': sigma, 'a': roots.a, 'd': roots.d, 'b': roots.b, 'rho_selected': roots.rho,
              'rho': dp.rho, 'v_m_s': v, 'v_law_m_s': v_law, 'v0_m_s': dp.v0, 'alpha_per_m': dp.alpha,
              'gamma_vs': dp.gamma_vs, 'vs_squared': dp.vs_squared, 'boost_is_real': kink.reality_check(roots.d),
              'residual_ode': kink.residual_ode(roots, roots.rho, sigma, xi),
              'delta_J': energetics.binding_plus_resonant, 'delta_eV': joule_to_ev(energetics.binding_plus_resonant),
              'total_energy_J': energetics.total_energy, 'effective_mass_kg': energetics.effective_mass,
              'effective_mass_eV': kg_to_ev(energetics.effective_mass)}
    if roots.rho > 0:
        vs_squared = kink.boost_velocity_squared(roots.rho)
        result['boost_vs_squared'] = vs_squared
        result['c_t'], result['c_x'] = kink.central_charges(vs_squared)
        if vs_squared <= 0:
            result['c_matter_wick'] = kink.wick_matter_central_charge(vs_squared)
    if (L := scn.get('L')) is not None:
        result['transfer_time_s'] = kink.transfer_time(L, v) if v > 0 else None
    if (alpha_prime := scn.get('alpha_prime')) is not None:
        result['string_length_m'] = kink.string_length(alpha_prime, params.v0)
    return [_csv('kink_profile.csv', ['xi', 'psi'], kink.profile_rows(roots, xi)), _json('kink.json', result)]


def run_evolve(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    params = _mt_params(scn)
    roots = kink.solve_cubic(kink.reduce(params, 0.0).sigma)
    v = _kink_speed(scn, params, roots)
    grid = np.linspace(scn['x_min'], scn['x_max'], scn['n_points'])
    state = kink.kink_state(params, grid, v=v, x0=scn['x0'])
    n_steps, dt = scn['n_steps'], scn['dt']
    record_every = scn.get('record_every', n_steps)
    if record_every < 1:
        raise scn.error('record_every', 'record_every must be >= 1')
    energy0 = kink.field_energy(state, params)
    rows = [(state.t, x, u, w) for x, u, w in zip(grid, state.u, state.u_dot)]
    done = 0
    while done < n_steps:
        chunk = min(record_every, n_steps - done)
        state = kink.evolve_pde(state, params, dt, chunk, progress_bar=progress_bar)
        done += chunk
        rows.extend((state.t, x, u, w) for x, u, w in zip(grid, state.u, state.u_dot))
    energy1 = kink.field_energy(state, params)
    result = {'v_m_s': v, 'cfl_limit_s': kink.cfl_limit(params, state.dx), 't_end_s': state.t,
              'energy_start_J': energy0, 'energy_end_J': energy1,
              'comoving_drift': kink.comoving_drift(state, params, v, scn['x0'])}
    return [_csv('evolve_field.csv', ['t_s', 'x_m', 'u_m', 'u_dot_m_s'], rows), _json('evolve.json', result)]


def _open_system(scn: Scenario) -> decoherence.OpenSystem:
    H = complex_array_from_pairs(scn['H'], 2, 'H')
    ops = scn.get('lindblad_ops', [])
    lindblad_ops = list(complex_array_from_pairs(ops, 3, 'lindblad_ops')) if ops else []
    return decoherence.OpenSystem(H=H, lindblad_ops=lindblad_ops)


def _channels(scn: Scenario) -> Optional[decoherence.ChannelProjectors]:
    labels = scn.get('channel_labels')
    return None if labels is None else decoherence.channel_projectors_from_labels(labels)


def _matrix_rows(times, matrices) -> List[tuple]:
    return [(t, i, j, m[i, j].real, m[i, j].imag)
            for t, m in zip(times, matrices) for i in range(m.shape[0]) for j in range(m.shape[1])]


def run_decohere(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    sys_ = _open_system(scn)
    if (scn.get('rho0') is None) == (scn.get('psi0') is None):
        raise scn.error('rho0', 'give exactly one of rho0 and psi0')
    if scn.get('rho0') is not None:
        rho0 = decoherence.DensityMatrix(complex_array_from_pairs(scn['rho0'], 2, 'rho0'))
    else:
        rho0 = decoherence.DensityMatrix.from_state(decoherence.StateVector(complex_array_from_pairs(scn['psi0'], 1,
                                                                                                       'psi0')))
    times, rhos = decoherence.lindblad_trace(rho0, sys_, scn['dt'], scn['n_steps'], scn['record_every'],
                                             progress_bar=progress_bar)
    stats = decoherence.energy_statistics(rhos, sys_.H)
    purity = np.einsum('tij,tji->t', rhos, rhos).real
    header = ['t', 'trace', 'purity', 'energy_mean', 'energy_variance']
    columns = [times, np.trace(rhos, axis1=1, axis2=2).real, purity, stats.mean, stats.variance]
    if (channels := _channels(scn)) is not None:
        probs = np.stack([np.einsum('tij,ji->t', rhos, p).real for p in channels.projectors], axis=1)
        header += [f'p_{k}' for k in range(len(channels))]
        columns += list(probs.T)
    result = {'t_end': float(times[-1]), 'purity_end': float(purity[-1]),
              'min_eigenvalue_end': float(np.linalg.eigvalsh(rhos[-1])[0]),
              'rho_end': complex_pairs(rhos[-1]),
              'energy_mean_conserved': stats.mean_conserved,
              'energy_variance_non_increasing': stats.variance_non_increasing}
    if scn.get('fit_positions') is not None:
        _require(scn, ['fit_coupling', 'fit_N', 'fit_t_max'], 'for the dephasing fit')
        fit = decoherence.coherence_decay_fit(scn['fit_positions'], scn['fit_coupling'], scn['fit_N'],
                                              scn['fit_t_max'])
        result['coherence_fit'] = {'D_fit': fit.D_fit, 'r_squared': fit.r_squared,
                                   'quadratic_deviation': fit.quadratic_deviation, 'accepted': fit.accepted,
                                   'separations': fit.separations, 'exponents': fit.exponents}
    return [_csv('decohere.csv', header, zip(*columns)),
            _csv('density_matrix.csv', ['t', 'row', 'col', 're', 'im'], _matrix_rows(times, rhos)),
            _json('decohere.json', result)]


def _trace_norm(matrix: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(matrix))))


def run_trajectories(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    sys_ = _open_system(scn)
    psi0 = decoherence.StateVector(complex_array_from_pairs(scn['psi0'], 1, 'psi0'))
    ensemble = decoherence.ito_ensemble(psi0, sys_, scn['dt'], scn['n_steps'], scn['n_trajectories'], scn.seed,
                                        scn['record_every'], progress_bar=progress_bar)
    rhos = ensemble.density_matrices()
    _, reference = decoherence.lindblad_trace(decoherence.DensityMatrix.from_state(psi0), sys_, scn['dt'],
                                              scn['n_steps'], scn['record_every'])
    distance = [_trace_norm(a - b) for a, b in zip(rhos, reference)]
    header, columns = ['t', 'lindblad_trace_distance'], [ensemble.t, distance]
    result: Dict[str, Any] = {'n_trajectories': scn['n_trajectories'], 'seed': scn.seed,
                              'max_lindblad_trace_distance': max(distance)}
    if (channels := _channels(scn)) is not None:
        K_mean, K_stderr = decoherence.entropy_series(ensemble, channels)
        header += ['K_mean', 'K_stderr']
        columns += [K_mean, K_stderr]
        try:
            report = decoherence.entropy_rate_check(ensemble, channels, sys_, floor=scn['entropy_floor'])
            result['entropy_rate'] = {'lhs': report.lhs, 'lhs_stderr': report.lhs_stderr, 'rhs': report.rhs,
                                      'agree': report.agree, 'non_increasing': report.non_increasing,
                                      'excluded_channels': report.excluded_channels}
        except ParameterError as e:
            log.warning(f'Entropy-rate check skipped: {e}')
            result['entropy_rate'] = None
    return [_csv('trajectories.csv', header, zip(*columns)),
            _csv('ensemble_density.csv', ['t', 'row', 'col', 're', 'im'], _matrix_rows(ensemble.t, rhos)),
            _json('trajectories.json', result)]


def _deficit_profile(scn: Scenario) -> Callable[[float], float]:
    Q0, Q_inf, tau_Q = scn['Q0'], scn.get('Q_inf'), scn.get('tau_Q')
    if Q_inf is None and tau_Q is None:
        return lambda t: Q0
    _require(scn, ['Q_inf', 'tau_Q'], 'for a relaxing Q(t)')
    if not tau_Q > 0:
        raise scn.error('tau_Q', f'tau_Q must be > 0, got {tau_Q}')
    return lambda t: Q_inf + (Q0 - Q_inf) * math.exp(-t / tau_Q)


def run_growth(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    Q_of_t = _deficit_profile(scn)
    series = liouville.growth_density(scn['delta0'], scn['a_coef'], scn['b_coef'], Q_of_t, scn['dt'],
                                      scn['n_steps'])
    Q = [Q_of_t(float(t)) for t in series.t]
    result: Dict[str, Any] = {'Q_critical': math.sqrt(scn['a_coef'] / scn['b_coef']),
                              'crossover_time': series.crossover_time, 'sign_changes': series.sign_changes,
                              'delta_end': float(series.delta[-1])}
    artifacts = [_csv('growth.csv', ['t', 'Q', 'rate', 'delta'], zip(series.t, Q, series.rate, series.delta))]
    telegraph_keys = ['v_plus', 'v_minus', 'k_cat', 'k_res', 't_max']
    if any(scn.get(key) is not None for key in telegraph_keys):
        _require(scn, telegraph_keys, 'for the telegraph ensemble')
        rates = liouville.TelegraphRates(scn['v_plus'], scn['v_minus'], scn['k_cat'], scn['k_res'])
        sawtooth = liouville.sawtooth_series(rates, scn['t_max'], scn['n_times'], scn['n_trajectories'], scn.seed,
                                             reflecting_floor=scn['reflecting_floor'], progress_bar=progress_bar)
        result['telegraph'] = {'drift': sawtooth.drift, 'bounded': sawtooth.bounded,
                               'p_plus': rates.p_plus, 'mean_end': float(sawtooth.mean[-1])}
        artifacts.append(_csv('sawtooth.csv', ['t', 'mean_length', 'stderr'],
                              zip(sawtooth.t, sawtooth.mean, sawtooth.stderr)))
    return artifacts + [_json('growth.json', result)]


def run_blackhole(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    pulse = blackhole.TachyonPulse(scn['amplitude'], scn['kind'])
    grid = np.linspace(scn['x_min'], scn['x_max'], scn['n_points'])
    t_late = blackhole.late_time(pulse, grid)
    t = scn.get('t', t_late)
    profile = blackhole.metric_from_pulse(pulse, grid, t, progress_bar=progress_bar)
    try:
        mass = blackhole.adm_mass(profile)
    except NumericalError as e:
        log.warning(f'No ADM mass: {e}')
        mass = None
    result: Dict[str, Any] = {'t': t, 'late_time': t_late, 'horizon_x': blackhole.horizon_locate(profile),
                              'adm_mass': mass}
    artifacts = [_csv('metric.csv', ['x', 'g_tt', 'g_xx'], zip(grid, profile.g_tt, profile.g_xx))]
    if scn.get('k_values') is not None or scn.get('dilaton_a') is not None:
        _require(scn, ['k_values', 'dilaton_a'], 'for the ADM mass versus level')
        masses = np.atleast_1d(blackhole.adm_mass_vs_k(np.array(scn['k_values']), scn['dilaton_a']))
        artifacts.append(_csv('adm_vs_k.csv', ['k', 'adm_mass'], zip(scn['k_values'], masses)))
    return artifacts + [_json('blackhole.json', result)]


def run_collapse_time(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    inputs = decoherence.CollapseInputs(E_eV=scn['E_eV'], N=scn['N'], M_gus_eV=gev_to_ev(scn['M_gus_GeV']),
                                        m_eV=scn.get('m_eV'), delta_x_m=scn.get('delta_x_m'))
    result: Dict[str, Any] = {'t_col_s': decoherence.collapse_time_string(inputs),
                              'gus_time_s': gus_time(), 'gus_length_m': gus_length()}
    if inputs.m_eV is not None or inputs.delta_x_m is not None:
        result['t_pointlike_s'] = decoherence.collapse_time_pointlike(inputs)
    if (t_target := scn.get('t_target')) is not None:
        result['N_for_target'] = decoherence.pointlike_number_for_time(inputs, t_target)
    if scn.get('K0') is not None or scn.get('channel_probs') is not None:
        result['t_localization_s'] = decoherence.localization_time(inputs, scn.get('K0'), scn.get('channel_probs'))
    return [_json('collapse.json', result)]


def run_tdva(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    pot = tdva.QuarticPotential(scn['A'], scn['B'])
    n_sites, dx = scn['n_sites'], scn['dx']
    grid = (np.arange(n_sites) - 0.5 * (n_sites - 1)) * dx
    kernel = tdva.free_two_point(n_sites, dx, scn.get('m_eff', math.sqrt(pot.well_curvature)))
    state = tdva.kink_initial_state(grid, pot, kernel, x0=scn['x0'], v=scn['v'])
    trace = tdva.tdva_evolve(state, pot, kernel, scn['dt'], scn['n_steps'], frozen_G=scn['frozen_G'],
                             record_every=scn['record_every'], progress_bar=progress_bar)
    energy0 = float(trace.energy[0])
    result = {'m_eff': kernel.m_eff, 'frozen_G': scn['frozen_G'], 'energy_start': energy0,
              'energy_end': float(trace.energy[-1]),
              'energy_relative_drift': float(np.max(np.abs(trace.energy - energy0))) / max(abs(energy0), 1e-300),
              'max_smearing_width': float(np.max(np.abs(trace.w))),
              'soliton_residual': tdva.trace_residual(trace, pot, kernel)
              if scn['record_every'] == 1 and len(trace.t) >= 3 else None}
    field_rows = [(t, x, c, w) for t, C, W in zip(trace.t, trace.C, trace.w) for x, c, w in zip(grid, C, W)]
    return [_csv('tdva.csv', ['t', 'energy', 'max_abs_w'], zip(trace.t, trace.energy, np.max(np.abs(trace.w), axis=1))),
            _csv('tdva_field.csv', ['t', 'x', 'C', 'w'], field_rows), _json('tdva.json', result)]


def run_flow(scn: Scenario, progress_bar: bool = False) -> List[Artifact]:
    Q_of_C = liouville.deficit_ctheorem if scn['normalization'] == 'ctheorem' else liouville.deficit_friction
    curvature = np.array(scn['curvature'])
    metric = np.array(scn.get('metric', np.ones_like(curvature)))
    g0 = np.array(scn['g0'])
    if not (len(metric) == len(g0) == len(curvature)):
        raise scn.error('g0', 'curvature, metric and g0 must have the same length')
    g_dot0 = np.array(scn.get('g_dot0', np.zeros_like(g0)))
    spec = liouville.FlowSpec.quadratic(curvature, metric, Q_of_C)
    dt = scn['dt']
    t, g, C, Q = liouville.flow_trace(g0, g_dot0, spec, dt, scn['n_steps'], progress_bar=progress_bar)
    header = ['t', 'C', 'Q'] + [f'g_{i}' for i in range(len(g0))]
    result: Dict[str, Any] = {'c_theorem_holds': liouville.c_flow_check(C, Q, dt) if len(C) >= 3 else None,
                              'C_end': float(C[-1]), 'Q_end': float(Q[-1]), 'g_end': g[-1]}
    artifacts = [_csv('flow.csv', header, ([ti, Ci, Qi, *gi] for ti, Ci, Qi, gi in zip(t, C, Q, g)))]
    if (fp_cells := scn.get('fp_cells')) is not None:
        lam = np.linspace(scn['fp_min'], scn['fp_max'], fp_cells)
        start = liouville.GridDistribution.gaussian(lam, scn['fp_mean'], scn['fp_std'])
        dtau = scn.get('fp_dtau', dt)
        end = liouville.fokker_planck_evolve(start, lambda x: 2.0 * metric[0] * curvature[0] * x,
                                             lambda tau: float(np.interp(tau, t, Q)), dtau,
                                             int(round(t[-1] / dtau)), progress_bar=progress_bar)
        result['fokker_planck'] = {'mass_start': start.mass(), 'mass_end': end.mass(),
                                   'variance_start': start.variance(), 'variance_end': end.variance(),
                                   'tau_end': end.tau}
        artifacts.append(_csv('fokker_planck.csv', ['lambda', 'P_start', 'P_end'], zip(lam, start.P, end.P)))
    adm_keys = ['dilaton_a', 'k0', 'k_rate']
    if any(scn.get(key) is not None for key in adm_keys):
        _require(scn, adm_keys, 'for the ADM mass along k(t)')
        k_trace = scn['k0'] + scn['k_rate'] * t
        artifacts.append(_csv('adm_flow.csv', ['t', 'k', 'adm_mass'],
                              zip(t, k_trace, liouville.adm_mass_flow(k_trace, scn['dilaton_a']))))
    return artifacts + [_json('flow.json', result)]


RUNNERS: Dict[str, Callable[..., List[Artifact]]] = {
    'kink': run_kink,
    'evolve': run_evolve,
    'decohere': run_decohere,
    'trajectories': run_trajectories,
    'growth': run_growth,
    'blackhole': run_blackhole,
    'collapse-time': run_collapse_time,
    'tdva': run_tdva,
    'flow': run_flow,
}


def run(scn: Scenario, progress_bar: bool = False, verbose: bool = False) -> List[Path]:
    """Computes every artifact first, writes them all into a staging directory next to the output
    directory and only then moves them into place, so that a failed run leaves no output files behind.
    Returns the paths written, manifest.json last."""
    start_time = datetime.datetime.now()
    artifacts = RUNNERS[scn.subcommand](scn, progress_bar=progress_bar)
    out_dir = Path(scn.output_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging_dir = Path(tempfile.mkdtemp(dir=out_dir.parent, prefix=f'.{out_dir.name}.'))
    written = []
    try:
        for artifact in artifacts:
            if artifact.rows is not None:
                write_csv(staging_dir / artifact.filename, artifact.header, artifact.rows)
            else:
                write_json(staging_dir / artifact.filename, artifact.payload)
        elapsed = datetime.datetime.now() - start_time
        manifest = {'name': scn.name, 'subcommand': scn.subcommand, 'seed': scn.seed, 'source': scn.source,
                    'inputs': scn.parameters, 'outputs': [artifact.filename for artifact in artifacts],
                    'versions': {'mtsim': __version__, 'numpy': np.__version__, 'scipy': scipy.__version__,
                                 'python': platform.python_version()},
                    'wall_time_s': elapsed.total_seconds()}
        write_json(staging_dir / 'manifest.json', manifest)
        out_dir.mkdir(parents=True, exist_ok=True)
        for filename in [artifact.filename for artifact in artifacts] + ['manifest.json']:
            os.replace(staging_dir / filename, out_dir / filename)
            written.append(out_dir / filename)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    finally:
        shutil.rmtree(staging_dir, ignore_errors=True)
    if verbose:
        log.info(f'Wrote {len(written)} files to {out_dir} in {elapsed.total_seconds():.3f} seconds')
    return written


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Argument parsing, scenario loading and the mapping of failures to exit codes."""
    parser = argparse.ArgumentParser(prog='mtsim', description='Runs one mtsim scenario')
    parser.add_argument('subcommand', nargs='?', choices=SUBCOMMANDS, help='(default: from the scenario file)')
    parser.add_argument('-c', '--config', type=Path, metavar='SCENARIO-FILENAME', help='scenario file')
    parser.add_argument('--seed', type=int, default=None, help='overrides the scenario seed')
    parser.add_argument('--out', type=Path, default=None, metavar='OUTPUT-DIRECTORY',
                        help='overrides the scenario output_dir')
    parser.add_argument('--print-schema', type=str, default=None, metavar='SUBCOMMAND', choices=SUBCOMMANDS,
                        help='list the keys of a subcommand and exit')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='write run summary to STDERR')
    parser.add_argument('-pb', '--progress-bar', action='store_true', default=False, help='Show progress bar')
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {__version__} last modified: {last_mod_date}')
    args = parser.parse_args(argv)
    if args.print_schema:
        sys.stdout.write(schema_text(args.print_schema))
        return EXIT_OK
    if args.config is None:
        parser.print_usage(sys.stderr)
        log.error('No scenario given (--config FILE)')
        return EXIT_INVALID
    start_time = datetime.datetime.now()
    try:
        scn = load_scenario(args.config, args.subcommand)
        if args.seed is not None:
            if not 0 <= args.seed < SEED_LIMIT:
                raise ScenarioError([(None, 'seed', f'seed must be an unsigned 64-bit integer, got {args.seed}')],
                                    str(args.config))
            scn.seed = args.seed
        if args.out is not None:
            scn.output_dir = str(args.out)
        if args.verbose:
            log.info(f'Start: {start_time}  Subcommand: {scn.subcommand}  Scenario: {args.config}  '
                     f'Seed: {scn.seed}  Output: {scn.output_dir}')
        run(scn, progress_bar=args.progress_bar, verbose=bool(args.verbose))
    except (ScenarioError, ParameterError) as e:
        log.error(f'Invalid scenario: {e}')
        return EXIT_INVALID
    except NumericalError as e:
        log.error(f'Numerical failure: {e}')
        return EXIT_NUMERICAL
    except MTSimError as e:
        log.error(str(e))
        return EXIT_INVALID
    if args.verbose:
        log.info(f'End: {datetime.datetime.now()}  Elapsed time: {datetime.datetime.now() - start_time}')
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
