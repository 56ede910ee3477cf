#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Scenario files: line-oriented 'key = value' text with '#' comments, typed against the
schema of one subcommand. Example files: data/scenario-*.txt
"""
# -*- encoding: utf-8 -*-
from dataclasses import dataclass, field
import json
import logging as log
from pathlib import Path
import regex
from typing import Any, Dict, List, Optional, Tuple
from .util import DIMER_CHARGE, M_GUS_GEV, MTSimError

SUBCOMMANDS = ('kink', 'evolve', 'decohere', 'trajectories', 'growth', 'blackhole', 'collapse-time', 'tdva',
               'flow')
SEED_LIMIT = 2 ** 64


class ScenarioError(MTSimError, ValueError):
    """Configuration problems; each problem carries its line number (or None) and key."""

    def __init__(self, problems: List[Tuple[Optional[int], Optional[str], str]], source: str = '<scenario>'):
        self.problems = problems
        self.source = source
        super().__init__('; '.join(f"{message} ({'line ' + str(line) if line else 'no line'} in {source})"
                                   for line, _, message in problems))

    @property
    def line_numbers(self) -> List[int]:
        return [line for line, _, _ in self.problems if line]


@dataclass(frozen=True)
class KeySpec:
    type: str
    required: bool = True
    default: Any = None
    help: str = ''
    choices: Optional[Tuple[str, ...]] = None


def _physics(help_text: str, value_type: str = 'float') -> KeySpec:
    return KeySpec(value_type, required=True, help=help_text)


def _optional(value_type: str, default: Any, help_text: str, choices: Optional[Tuple[str, ...]] = None) -> KeySpec:
    return KeySpec(value_type, required=False, default=default, help=help_text, choices=choices)


COMMON_KEYS = {
    'name': _optional('str', None, 'scenario name (default: the subcommand)'),
    'subcommand': _optional('str', None, 'subcommand, if not given on the command line', SUBCOMMANDS),
    'seed': _optional('int', 0, 'base seed; trajectory i uses seed + i'),
    'output_dir': _optional('str', 'mtsim-out', 'directory for CSV/JSON outputs and manifest.json'),
}

KINK_PHYSICS = {
    'M': _physics('dimer mass, kg'),
    'A': _optional('float', None, 'double-well coefficient, J/m^2 (or give T, Tc and temper_const)'),
    'B': _physics('quartic coefficient, J/m^4'),
    'k': _physics('stiffness, J/m^2'),
    'R0': _physics('dimer spacing, m'),
    'gamma': _physics('friction, kg/s'),
    'E': _physics('electric field, V/m'),
    'q': _optional('float', DIMER_CHARGE, 'dimer charge, C (36 elementary charges)'),
    'T': _optional('float', None, 'temperature, K'),
    'Tc': _optional('float', None, 'critical temperature, K'),
    'temper_const': _optional('float', None, 'temperature-law constant, J/(m^2 K)'),
    'v': _optional('float', None, 'kink speed, m/s (default: the velocity law; the static kink when gamma = 0)'),
}

OPEN_SYSTEM = {
    'H': _physics('Hamiltonian, JSON matrix of [re, im] pairs', 'json'),
    'lindblad_ops': _optional('json', [], 'JSON list of environment operators, each a matrix of [re, im] pairs'),
    'dt': _physics('time step'),
    'n_steps': _physics('number of steps', 'int'),
    'record_every': _optional('int', 1, 'record every n-th step'),
    'channel_labels': _optional('json', None, 'JSON list with one channel label per basis state'),
}

SCHEMAS: Dict[str, Dict[str, KeySpec]] = {
    'kink': {
        **KINK_PHYSICS,
        'xi_min': _optional('float', -10.0, 'profile window start (dimensionless)'),
        'xi_max': _optional('float', 10.0, 'profile window end (dimensionless)'),
        'n_points': _optional('int', 201, 'profile samples'),
        'L': _optional('float', None, 'microtubule length for the transfer time, m'),
        'alpha_prime': _optional('float', None, 'Regge slope for the string length unit'),
    },
    'evolve': {
        **KINK_PHYSICS,
        'x_min': _physics('grid start, m'),
        'x_max': _physics('grid end, m'),
        'n_points': _physics('grid points', 'int'),
        'dt': _physics('time step, s'),
        'n_steps': _physics('number of RK4 steps', 'int'),
        'record_every': _optional('int', None, 'record the field every n-th step (default: start and end only)'),
        'x0': _optional('float', 0.0, 'initial kink centre, m'),
    },
    'decohere': {
        **OPEN_SYSTEM,
        'rho0': _optional('json', None, 'initial density matrix of [re, im] pairs'),
        'psi0': _optional('json', None, 'initial pure state of [re, im] pairs (instead of rho0)'),
        'fit_positions': _optional('floats', None, 'positions u for the dephasing-exponent fit'),
        'fit_coupling': _optional('float', None, 'dephasing coupling D of the fit'),
        'fit_N': _optional('float', None, 'number of coherent units N of the fit'),
        'fit_t_max': _optional('float', None, 'fit window end'),
    },
    'trajectories': {
        **OPEN_SYSTEM,
        'psi0': _physics('initial pure state of [re, im] pairs', 'json'),
        'n_trajectories': _physics('ensemble size', 'int'),
        'entropy_floor': _optional('float', 1e-8, 'channels below this probability are left out of the rate'),
    },
    'growth': {
        'delta0': _physics('initial mean density'),
        'a_coef': _physics('shrinkage coefficient a'),
        'b_coef': _physics('growth coefficient b'),
        'Q0': _physics('initial deficit Q'),
        'Q_inf': _optional('float', None, 'late-time deficit (default: Q0, constant Q)'),
        'tau_Q': _optional('float', None, 'relaxation time of Q(t) = Q_inf + (Q0 - Q_inf) exp(-t/tau_Q)'),
        'dt': _physics('output spacing'),
        'n_steps': _physics('number of output intervals', 'int'),
        'v_plus': _optional('float', None, 'assembly speed (telegraph ensemble, optional)'),
        'v_minus': _optional('float', None, 'disassembly speed'),
        'k_cat': _optional('float', None, 'catastrophe rate'),
        'k_res': _optional('float', None, 'rescue rate'),
        't_max': _optional('float', None, 'telegraph window'),
        'n_times': _optional('int', 101, 'telegraph samples'),
        'n_trajectories': _optional('int', 1000, 'telegraph ensemble size'),
        'reflecting_floor': _optional('bool', True, 'keep lengths >= 0'),
    },
    'blackhole': {
        'amplitude': _physics('pulse amplitude a'),
        'kind': _optional('str', 'infalling', 'pulse kind', ('infalling', 'reflected')),
        'x_min': _optional('float', -1.0, 'grid start'),
        'x_max': _optional('float', 3.0, 'grid end'),
        'n_points': _optional('int', 41, 'grid points'),
        't': _optional('float', None, 'time slice (default: late time)'),
        'dilaton_a': _optional('float', None, 'dilaton constant for the ADM mass versus level'),
        'k_values': _optional('floats', None, 'levels k > 2 for the ADM mass versus level'),
    },
    'collapse-time': {
        'E_eV': _physics('energy splitting, eV'),
        'N': _physics('number of coherent units'),
        'M_gus_GeV': _optional('float', M_GUS_GEV, 'grand-unified scale, GeV'),
        'm_eV': _optional('float', None, 'mass of a point-like unit, eV'),
        'delta_x_m': _optional('float', None, 'separation of the point-like unit, m'),
        't_target': _optional('float', None, 'target time for the point-like N inversion, s'),
        'K0': _optional('float', None, 'initial dispersion entropy'),
        'channel_probs': _optional('floats', None, 'initial channel probabilities'),
    },
    'tdva': {
        'A': _physics('double-well coefficient (lattice units)'),
        'B': _physics('quartic coefficient (lattice units)'),
        'n_sites': _physics('lattice sites', 'int'),
        'dx': _physics('lattice spacing'),
        'dt': _physics('time step'),
        'n_steps': _physics('number of RK4 steps', 'int'),
        'm_eff': _optional('float', None, 'vacuum mass of G0 (default: sqrt(2A), the curvature at the well)'),
        'x0': _optional('float', 0.0, 'kink centre'),
        'v': _optional('float', 0.0, 'boost speed of the initial kink (|v| < 1)'),
        'frozen_G': _optional('bool', False, 'keep G = G0 (classical limit)'),
        'record_every': _optional('int', 1, 'record every n-th step'),
    },
    'flow': {
        'curvature': _physics('C = 25 + sum_i c_i g_i^2 coefficients', 'floats'),
        'metric': _optional('floats', None, 'diagonal metric (default: identity)'),
        'g0': _physics('initial couplings', 'floats'),
        'g_dot0': _optional('floats', None, 'initial coupling velocities (default: zero)'),
        'normalization': _optional('str', 'ctheorem', 'Q(C) normalization', ('ctheorem', 'friction')),
        'dt': _physics('step'),
        'n_steps': _physics('number of RK4 steps', 'int'),
        'fp_cells': _optional('int', None, 'Fokker-Planck cells along the first coupling (optional)'),
        'fp_min': _optional('float', -5.0, 'Fokker-Planck window start'),
        'fp_max': _optional('float', 5.0, 'Fokker-Planck window end'),
        'fp_mean': _optional('float', 0.0, 'initial Gaussian mean'),
        'fp_std': _optional('float', 1.0, 'initial Gaussian width'),
        'fp_dtau': _optional('float', None, 'Fokker-Planck step (default: dt)'),
        'dilaton_a': _optional('float', None, 'dilaton constant; with k0 and k_rate gives the ADM mass along k(t)'),
        'k0': _optional('float', None, 'initial level'),
        'k_rate': _optional('float', None, 'level growth per unit time'),
    },
}


@dataclass
class Scenario:
    name: str
    subcommand: str
    parameters: Dict[str, Any]
    seed: int = 0
    output_dir: str = 'mtsim-out'
    lines: Dict[str, int] = field(default_factory=dict)
    source: str = '<scenario>'

    def __getitem__(self, key: str) -> Any:
        return self.parameters[key]

    def get(self, key: str, default: Any = None) -> Any:
        value = self.parameters.get(key)
        return default if value is None else value

    def error(self, key: str, message: str) -> ScenarioError:
        return ScenarioError([(self.lines.get(key), key, message)], self.source)


def schema_for(subcommand: str) -> Dict[str, KeySpec]:
    if subcommand not in SCHEMAS:
        raise ScenarioError([(None, 'subcommand', f"unknown subcommand '{subcommand}' "
                                                  f"(one of {', '.join(SUBCOMMANDS)})")])
    return {**COMMON_KEYS, **SCHEMAS[subcommand]}


def schema_text(subcommand: str) -> str:
    """Human-readable key list, required keys first."""
    schema = schema_for(subcommand)
    lines = [f'# {subcommand}']
    for required in (True, False):
        lines.append('# required keys' if required else '# optional keys')
        for key, spec in schema.items():
            if spec.required != required:
                continue
            choices = f" ({'|'.join(spec.choices)})" if spec.choices else ''
            default = '' if required or spec.default is None else f' = {json.dumps(spec.default)}'
            lines.append(f'{key:<16} {spec.type:<7}{default:<14} {spec.help}{choices}')
    return '\n'.join(lines) + '\n'


re_comment = regex.compile(r'\s*#.*$')
re_assignment = regex.compile(r'^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$')
re_bool = regex.compile(r'^(?:true|false)$', regex.IGNORECASE)
re_int = regex.compile(r'^[-+]?\d+$')


def _convert(value: str, spec: KeySpec) -> Any:
    """Typed value, or ValueError with a short reason."""
    if spec.type == 'float':
        try:
            return float(value)
        except ValueError:
            raise ValueError(f"'{value}' is not a number")
    if spec.type == 'int':
        if not re_int.match(value):
            raise ValueError(f"'{value}' is not an integer")
        return int(value)
    if spec.type == 'bool':
        if not re_bool.match(value):
            raise ValueError(f"'{value}' is not true or false")
        return value.lower() == 'true'
    if spec.type == 'str':
        if spec.choices and value not in spec.choices:
            raise ValueError(f"'{value}' is not one of {', '.join(spec.choices)}")
        return value
    if spec.type == 'floats':
        items = json.loads(value) if value.startswith('[') else [item for item in regex.split(r'\s*,\s*', value)
                                                                  if item != '']
        if not isinstance(items, list) or not items:
            raise ValueError(f"'{value}' is not a non-empty list of numbers")
        try:
            return [float(item) for item in items]
        except (TypeError, ValueError):
            raise ValueError(f"'{value}' is not a list of numbers")
    try:
        return json.loads(value)
    except json.JSONDecodeError as e:
        raise ValueError(f'invalid JSON ({e.msg} at column {e.colno})')


def parse_scenario(text: str, subcommand: Optional[str] = None, source: str = '<scenario>') -> Scenario:
    """Typed scenario for the subcommand given here or in the text. Every problem found
    (unknown, duplicate, missing or mistyped key) is reported in one ScenarioError."""
    problems: List[Tuple[Optional[int], Optional[str], str]] = []
    raw: Dict[str, Tuple[str, int]] = {}
    for line_number, line in enumerate(text.splitlines(), 1):
        line = re_comment.sub('', line.lstrip('\ufeff'))
        if line.strip() == '':
            continue
        if m := re_assignment.match(line):
            key, value = m.group(1), m.group(2)
            if key in raw:
                problems.append((line_number, key, f"duplicate key '{key}' (lines {raw[key][1]} and {line_number})"))
            else:
                raw[key] = (value, line_number)
        else:
            problems.append((line_number, None, f"expected 'key = value', got '{line.strip()}'"))
    file_subcommand = raw.get('subcommand', (None, None))[0]
    if subcommand and file_subcommand and subcommand != file_subcommand:
        problems.append((raw['subcommand'][1], 'subcommand',
                         f"subcommand '{file_subcommand}' in the scenario differs from '{subcommand}'"))
    subcommand = subcommand or file_subcommand
    if not subcommand:
        problems.append((None, 'subcommand', 'no subcommand given'))
        raise ScenarioError(problems, source)
    if subcommand not in SCHEMAS:
        problems.append((raw.get('subcommand', (None, None))[1], 'subcommand',
                         f"unknown subcommand '{subcommand}' (one of {', '.join(SUBCOMMANDS)})"))
        raise ScenarioError(problems, source)
    schema = schema_for(subcommand)
    values: Dict[str, Any] = {}
    for key, (value, line_number) in raw.items():
        if (spec := schema.get(key)) is None:
            problems.append((line_number, key, f"unknown key '{key}' for subcommand {subcommand}"))
            continue
        try:
            values[key] = _convert(value, spec)
        except ValueError as e:
            problems.append((line_number, key, f"key '{key}' expects {spec.type}: {e}"))
    for key, spec in schema.items():
        if spec.required and key not in raw:
            problems.append((None, key, f"missing required key '{key}'"))
    seed = values.get('seed', 0)
    if not 0 <= seed < SEED_LIMIT:
        problems.append((raw['seed'][1], 'seed', f'seed must be an unsigned 64-bit integer, got {seed}'))
    if problems:
        raise ScenarioError(problems, source)
    parameters = {key: values.get(key, spec.default) for key, spec in schema.items() if key not in COMMON_KEYS}
    log.debug(f'Parsed {len(raw)} keys for {subcommand} from {source}')
    return Scenario(name=values.get('name') or subcommand, subcommand=subcommand, parameters=parameters,
                    seed=seed, output_dir=values.get('output_dir', COMMON_KEYS['output_dir'].default),
                    lines={key: line_number for key, (_, line_number) in raw.items()}, source=source)


def load_scenario(filename: Path, subcommand: Optional[str] = None) -> Scenario:
    try:
        text = Path(filename).read_text(encoding='utf-8')
    except OSError as e:
        raise ScenarioError([(None, None, f'could not read scenario file: {e.strerror}')], str(filename))
    except UnicodeDecodeError:
        raise ScenarioError([(None, None, 'scenario file is not UTF-8')], str(filename))
    return parse_scenario(text, subcommand, source=str(filename))
