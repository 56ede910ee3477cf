#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Flow dynamics in coupling space: friction flow g'' + Q g' = -beta, the c-theorem
inequality, the renormalization-group kink, Fokker-Planck localization in one coupling,
the growth-density law with its sawtooth (telegraph) realization, selection rules
and the instanton shifts of the level k.
"""
# -*- encoding: utf-8 -*-
from dataclasses import dataclass
import logging as log
import math
from typing import Callable, Optional, Tuple
import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.optimize import brentq
from tqdm.auto import tqdm
from .blackhole import adm_mass_vs_k
from .util import NumericalError, ParameterError, block_ranges, ordered_map

TRAJECTORY_BLOCK = 256


@dataclass
class CouplingState:
    g: np.ndarray
    g_dot: np.ndarray
    C: float
    t: float = 0.0

    def __post_init__(self):
        self.g = np.atleast_1d(np.asarray(self.g, dtype=float))
        self.g_dot = np.atleast_1d(np.asarray(self.g_dot, dtype=float))
        if self.g.shape != self.g_dot.shape:
            raise ParameterError(f'g and g_dot shapes differ: {self.g.shape} vs {self.g_dot.shape}')
        if not (np.all(np.isfinite(self.g)) and np.all(np.isfinite(self.g_dot)) and math.isfinite(self.C)):
            raise NumericalError(f'non-finite coupling state at t = {self.t}')


def deficit_ctheorem(C: float) -> float:
    """Q = sqrt((C - 25)/3)."""
    return _deficit(C, 3.0)


def deficit_friction(C: float) -> float:
    """Q = sqrt((C - 25)/6), the normalization of the friction flow equation."""
    return _deficit(C, 6.0)


def _deficit(C: float, normalization: float) -> float:
    if C < 25.0:
        raise NumericalError(f'subcritical: Q imaginary (C = {C} < 25)')
    return math.sqrt((C - 25.0) / normalization)


@dataclass
class FlowSpec:
    """Gradient flow beta = G grad C unless an explicit beta is supplied."""
    central_charge: Callable[[np.ndarray], float]
    central_charge_gradient: Callable[[np.ndarray], np.ndarray]
    metric_G: Callable[[np.ndarray], np.ndarray]
    Q_of_C: Callable[[float], float] = deficit_ctheorem
    beta: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def beta_of(self, g: np.ndarray) -> np.ndarray:
        if self.beta is not None:
            return np.asarray(self.beta(g), dtype=float)
        return np.atleast_2d(self.metric_G(g)) @ np.atleast_1d(self.central_charge_gradient(g))

    def check_metric(self, g: np.ndarray, tol: float = 1e-12):
        G = np.atleast_2d(self.metric_G(g))
        if np.max(np.abs(G - G.T)) > tol or np.min(np.linalg.eigvalsh(G)) <= 0:
            raise ParameterError(f'metric_G is not symmetric positive definite at g = {g}')

    @classmethod
    def quadratic(cls, curvature, metric=None, Q_of_C: Callable[[float], float] = deficit_ctheorem) -> 'FlowSpec':
        """C = 25 + sum_i c_i g_i^2 with a constant diagonal metric."""
        c = np.atleast_1d(np.asarray(curvature, dtype=float))
        G = np.diag(np.ones_like(c) if metric is None else np.atleast_1d(np.asarray(metric, dtype=float)))
        return cls(central_charge=lambda g: 25.0 + float(np.sum(c * np.asarray(g) ** 2)),
                   central_charge_gradient=lambda g: 2.0 * c * np.asarray(g),
                   metric_G=lambda g: G, Q_of_C=Q_of_C)


def flow_step(state: CouplingState, spec: FlowSpec, dt: float) -> CouplingState:
    """One RK4 step of g'' + Q(C[g]) g' = -beta(g)."""
    if not dt > 0:
        raise ParameterError(f'dt must be > 0, got {dt}')

    def rhs(g, g_dot):
        C = spec.central_charge(g)
        if C < 25.0:
            raise NumericalError(f'subcritical: Q imaginary (C = {C} < 25) near t = {state.t}')
        return g_dot, -spec.Q_of_C(C) * g_dot - spec.beta_of(g)

    g, w = state.g, state.g_dot
    k1g, k1w = rhs(g, w)
    k2g, k2w = rhs(g + 0.5 * dt * k1g, w + 0.5 * dt * k1w)
    k3g, k3w = rhs(g + 0.5 * dt * k2g, w + 0.5 * dt * k2w)
    k4g, k4w = rhs(g + dt * k3g, w + dt * k3w)
    g_new = g + (dt / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
    w_new = w + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    C_new = spec.central_charge(g_new)
    if C_new < 25.0:
        raise NumericalError(f'subcritical: Q imaginary (C = {C_new} < 25) at t = {state.t + dt}')
    return CouplingState(g=g_new, g_dot=w_new, C=C_new, t=state.t + dt)


def flow_trace(g0, g_dot0, spec: FlowSpec, dt: float, n_steps: int,
               progress_bar: bool = False) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(t, g, C, Q) sampled at every step, starting with the initial state."""
    g0 = np.atleast_1d(np.asarray(g0, dtype=float))
    spec.check_metric(g0)
    state = CouplingState(g=g0, g_dot=g_dot0, C=spec.central_charge(g0))
    ts, gs, Cs, Qs = [state.t], [state.g], [state.C], [spec.Q_of_C(state.C)]
    for _ in tqdm(range(n_steps), disable=not progress_bar, dynamic_ncols=True, desc='flow'):
        state = flow_step(state, spec, dt)
        ts.append(state.t)
        gs.append(state.g)
        Cs.append(state.C)
        Qs.append(spec.Q_of_C(state.C))
    return np.array(ts), np.array(gs), np.array(Cs), np.array(Qs)


def c_flow_check(C_trace, Q_trace, dt: float, tol: float = 1e-6) -> bool:
    """Whether the central-difference estimate of C'' + Q C' stays <= tol at all interior samples."""
    C = np.asarray(C_trace, dtype=float)
    Q = np.asarray(Q_trace, dtype=float)
    if len(C) < 3:
        raise ParameterError(f'insufficient trace: {len(C)} samples (need >= 3)')
    if len(Q) != len(C):
        raise ParameterError(f'C and Q traces differ in length ({len(C)} vs {len(Q)})')
    C_ddot = (C[2:] - 2.0 * C[1:-1] + C[:-2]) / dt ** 2
    C_dot = (C[2:] - C[:-2]) / (2.0 * dt)
    return bool(np.all(C_ddot + Q[1:-1] * C_dot <= tol))


@dataclass(frozen=True)
class RGKinkSpec:
    a2: float
    a4: float
    A3: float = 0.0

    def __post_init__(self):
        if self.a4 == 0:
            raise ParameterError('RGKinkSpec needs a4 != 0')

    @property
    def u_wave(self) -> float:
        return (self.A3 - 3.0 * self.a2 * self.a4) / self.a4

    def R(self, T):
        """R(T) = a2 T + a4 T^2."""
        return self.a2 * T + self.a4 * np.asarray(T) ** 2


def _rg_kink_sign(spec: RGKinkSpec, printed_sign: bool) -> float:
    # T' = R(T) holds only with the tanh coefficient -1; the printed form uses sgn(a2 a4)
    return math.copysign(1.0, spec.a2 * spec.a4) if printed_sign else -1.0


def rg_kink(spec: RGKinkSpec, x, t, printed_sign: bool = False):
    """T = (1/2a4) {s a2 tanh[a2 (x - u t)/2] - a2} with s = -1 (the sign for which T' = R(T)),
    or s = sgn(a2 a4) with printed_sign=True."""
    s = _rg_kink_sign(spec, printed_sign)
    xi = np.asarray(x, dtype=float) - spec.u_wave * np.asarray(t, dtype=float)
    return (s * spec.a2 * np.tanh(0.5 * spec.a2 * xi) - spec.a2) / (2.0 * spec.a4)


def rg_kink_residual(spec: RGKinkSpec, xi, printed_sign: bool = False) -> float:
    """max |T'(xi) - R(T(xi))| with the exact derivative of the profile."""
    s = _rg_kink_sign(spec, printed_sign)
    xi = np.asarray(xi, dtype=float)
    T = rg_kink(spec, xi, 0.0, printed_sign)
    dT = s * spec.a2 ** 2 / (4.0 * spec.a4) / np.cosh(0.5 * spec.a2 * xi) ** 2
    return float(np.max(np.abs(dT - spec.R(T))))


@dataclass
class GridDistribution:
    lambda_grid: np.ndarray     # cell centres, uniform
    P: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        self.lambda_grid = np.asarray(self.lambda_grid, dtype=float)
        self.P = np.asarray(self.P, dtype=float)
        if self.lambda_grid.shape != self.P.shape or len(self.P) < 3:
            raise ParameterError('GridDistribution needs matching lambda_grid and P with >= 3 cells')
        if np.any(self.P < 0):
            raise ParameterError(f'GridDistribution has negative P (min {self.P.min()})')

    @property
    def d_lambda(self) -> float:
        return (self.lambda_grid[-1] - self.lambda_grid[0]) / (len(self.lambda_grid) - 1)

    def mass(self) -> float:
        return float(trapezoid(self.P, self.lambda_grid))

    def mean(self) -> float:
        return float(trapezoid(self.lambda_grid * self.P, self.lambda_grid)) / self.mass()

    def variance(self) -> float:
        mu = self.mean()
        return float(trapezoid((self.lambda_grid - mu) ** 2 * self.P, self.lambda_grid)) / self.mass()

    @classmethod
    def gaussian(cls, lambda_grid, mean: float, std: float) -> 'GridDistribution':
        grid = np.asarray(lambda_grid, dtype=float)
        P = np.exp(-0.5 * ((grid - mean) / std) ** 2)
        return cls(lambda_grid=grid, P=P / trapezoid(P, grid))


def fokker_planck_limit(d_lambda: float, D: float, drift_max: float) -> float:
    """Largest stable explicit step for diffusion D and upwinded drift speed drift_max."""
    # a cell can lose mass through both faces
    denominator = 2.0 * D + 2.0 * drift_max * d_lambda
    return math.inf if denominator == 0 else d_lambda ** 2 / denominator


def fokker_planck_evolve(dist: GridDistribution, beta_1d: Callable[[np.ndarray], np.ndarray],
                         Q_profile: Callable[[float], float], dtau: float, n_steps: int,
                         progress_bar: bool = False) -> GridDistribution:
    """Conservative finite-volume solution of
        dP/dtau = (1/8 pi^2) d/dlambda [Q^3 d/dlambda (Q^3 P)] + d/dlambda [beta P]
    with Q = Q(tau) uniform in lambda, upwinded drift and no-flux boundaries."""
    grid = dist.lambda_grid
    h = dist.d_lambda
    faces = 0.5 * (grid[1:] + grid[:-1])
    velocity = -np.asarray(beta_1d(faces), dtype=float)     # d(beta P)/dlambda = -d(velocity P)/dlambda
    v_plus, v_minus = np.maximum(velocity, 0.0), np.minimum(velocity, 0.0)
    taus = dist.tau + dtau * np.arange(n_steps)
    Q_values = np.array([Q_profile(float(tau)) for tau in taus])
    D_values = Q_values ** 6 / (8.0 * math.pi ** 2)
    drift_max = float(np.max(np.abs(velocity))) if len(velocity) else 0.0
    limit = fokker_planck_limit(h, float(np.max(D_values)) if n_steps else 0.0, drift_max)
    if dtau > limit:
        raise ParameterError(f'dtau = {dtau} exceeds the diffusion stability bound {limit}')
    P = dist.P.copy()
    flux = np.zeros(len(P) + 1)
    for D in tqdm(D_values, disable=not progress_bar, dynamic_ncols=True, desc='fokker-planck'):
        flux[1:-1] = v_plus * P[:-1] + v_minus * P[1:] - D * (P[1:] - P[:-1]) / h
        P = P - (dtau / h) * (flux[1:] - flux[:-1])
    # the step bound keeps P >= 0 up to round-off
    P = np.maximum(P, 0.0)
    return GridDistribution(lambda_grid=grid, P=P, tau=dist.tau + n_steps * dtau)


@dataclass
class GrowthSeries:
    t: np.ndarray
    delta: np.ndarray
    rate: np.ndarray
    crossover_time: Optional[float]
    sign_changes: int


def growth_rate(Q, a_coef: float, b_coef: float):
    """r = -a Q + b Q^3."""
    Q = np.asarray(Q, dtype=float)
    return Q * (b_coef * Q ** 2 - a_coef)


def growth_density(delta0: float, a_coef: float, b_coef: float, Q_of_t: Callable[[float], float],
                   dt: float, n_steps: int) -> GrowthSeries:
    """Integrates d<delta>/dt = (-a Q(t) + b Q(t)^3) <delta> and locates the time where the
    net rate changes sign (Q crossing sqrt(a/b))."""
    if not (a_coef > 0 and b_coef > 0):
        raise ParameterError(f'growth coefficients must be positive, got a = {a_coef}, b = {b_coef}')
    t_eval = dt * np.arange(n_steps + 1)

    def rate_at(t: float) -> float:
        return float(growth_rate(Q_of_t(t), a_coef, b_coef))

    solution = solve_ivp(lambda t, y: rate_at(t) * y, (0.0, t_eval[-1]), [delta0], t_eval=t_eval,
                         method='DOP853', rtol=1e-11, atol=1e-14 * max(1.0, abs(delta0)))
    if not solution.success:
        raise NumericalError(f'growth integration failed: {solution.message}')
    rate = np.array([rate_at(t) for t in t_eval])
    signs = np.sign(rate)
    nonzero = np.flatnonzero(signs)
    changes = [i for i, j in zip(nonzero, nonzero[1:]) if signs[i] != signs[j]]
    crossover = None
    if changes:
        i = changes[0]
        crossover = float(brentq(rate_at, t_eval[i], t_eval[i + 1], xtol=1e-14, rtol=1e-14))
        if len(changes) > 1:
            log.warning(f'growth rate changes sign {len(changes)} times; reporting the first crossover')
    return GrowthSeries(t=t_eval, delta=solution.y[0], rate=rate, crossover_time=crossover,
                        sign_changes=len(changes))


@dataclass(frozen=True)
class TelegraphRates:
    """Two-state switching: assembly (+) grows at v_plus, disassembly (-) shrinks at v_minus;
    k_cat switches + -> -, k_res switches - -> +."""
    v_plus: float
    v_minus: float
    k_cat: float
    k_res: float

    def __post_init__(self):
        for name in ('v_plus', 'v_minus', 'k_cat', 'k_res'):
            if getattr(self, name) < 0:
                raise ParameterError(f'negative {name} = {getattr(self, name)} rejected')
        if self.k_cat + self.k_res == 0:
            raise ParameterError('at least one switching rate must be positive')

    @property
    def p_plus(self) -> float:
        """Stationary probability of the assembly state."""
        return self.k_res / (self.k_cat + self.k_res)


def telegraph_drift(rates: TelegraphRates) -> float:
    """Mean length drift (v_plus k_res - v_minus k_cat)/(k_cat + k_res)."""
    return (rates.v_plus * rates.k_res - rates.v_minus * rates.k_cat) / (rates.k_cat + rates.k_res)


def telegraph_trajectory(rates: TelegraphRates, t_grid: np.ndarray, rng: np.random.Generator,
                         initial_length: float = 0.0, reflecting_floor: bool = True) -> np.ndarray:
    """Event-driven length trajectory sampled on t_grid, initial state drawn from the
    stationary distribution. With reflecting_floor, a shrinking microtubule stays at
    length 0 until rescued."""
    t_end = t_grid[-1]
    lengths = np.empty_like(t_grid)
    growing = rng.random() < rates.p_plus
    t, L, j = 0.0, initial_length, 0
    while j < len(t_grid):
        rate = rates.k_cat if growing else rates.k_res
        t_next = t + rng.exponential(1.0 / rate) if rate > 0 else math.inf
        stop = np.searchsorted(t_grid, min(t_next, t_end), side='right') if t_next < t_end else len(t_grid)
        elapsed = t_grid[j:stop] - t
        if growing:
            lengths[j:stop] = L + rates.v_plus * elapsed
        else:
            lengths[j:stop] = L - rates.v_minus * elapsed
            if reflecting_floor:
                lengths[j:stop] = np.maximum(lengths[j:stop], 0.0)
        j = stop
        if t_next < math.inf:
            L = L + (rates.v_plus if growing else -rates.v_minus) * (t_next - t)
            if reflecting_floor:
                L = max(L, 0.0)
        t = t_next
        growing = not growing
    return lengths


@dataclass
class SawtoothResult:
    t: np.ndarray
    lengths: np.ndarray         # (n_trajectories, n_times)
    mean: np.ndarray
    stderr: np.ndarray
    drift: float
    bounded: bool


def sawtooth_series(rates: TelegraphRates, t_max: float, n_times: int, n_trajectories: int, seed: int,
                    initial_length: float = 0.0, reflecting_floor: bool = True,
                    progress_bar: bool = False) -> SawtoothResult:
    """Telegraph-process ensemble (per-trajectory seeds seed + i, ordered reduction).
    Bounded iff the mean drift is negative."""
    if not (t_max > 0 and n_times >= 2 and n_trajectories >= 1):
        raise ParameterError('sawtooth_series needs t_max > 0, n_times >= 2 and n_trajectories >= 1')
    t_grid = np.linspace(0.0, t_max, n_times)

    def run_block(block: range) -> np.ndarray:
        return np.array([telegraph_trajectory(rates, t_grid, np.random.default_rng(seed + i),
                                              initial_length, reflecting_floor) for i in block])

    blocks = ordered_map(run_block, block_ranges(n_trajectories, TRAJECTORY_BLOCK),
                         progress_bar=progress_bar, desc='sawtooth')
    lengths = np.concatenate(blocks, axis=0)
    mean = lengths.mean(axis=0)
    stderr = lengths.std(axis=0, ddof=1) / math.sqrt(n_trajectories) if n_trajectories > 1 \
        else np.zeros_like(mean)
    drift = telegraph_drift(rates)
    return SawtoothResult(t=t_grid, lengths=lengths, mean=mean, stderr=stderr, drift=drift, bounded=drift < 0)


@dataclass(frozen=True)
class SelectionReport:
    equality_ok: bool
    inequality_ok: bool
    j_expected: float
    j_min: float
    momentum_sum: float
    p_N: float

    @property
    def satisfied(self) -> bool:
        return self.equality_ok and self.inequality_ok


def kinematic_sums(N: int) -> Tuple[float, float]:
    """(sum_i p_i, p_N) = ((N-2)/sqrt 2, -(N-2)/sqrt 2)."""
    if N < 3:
        raise ParameterError(f'selection rules need N >= 3, got {N}')
    s = (N - 2) / math.sqrt(2.0)
    return s, -s


def selection_rules(N: int, j: float, m: float, tol: float = 1e-12) -> SelectionReport:
    """j = m/3 - 1 + (N-2)/2 and j >= (N-5)/4."""
    momentum_sum, p_N = kinematic_sums(N)
    j_expected = m / 3.0 - 1.0 + 0.5 * (N - 2)
    j_min = 0.25 * (N - 5)
    return SelectionReport(equality_ok=abs(j - j_expected) <= tol * max(1.0, abs(j_expected)),
                           inequality_ok=j >= j_min - tol, j_expected=j_expected, j_min=j_min,
                           momentum_sum=momentum_sum, p_N=p_N)


def selection_rules_satisfiable(N: int, m: float) -> bool:
    """Both rules can hold at once iff m >= 3 (3 - N)/4."""
    kinematic_sums(N)
    return m >= 0.75 * (3 - N) - 1e-12


def _check_level(k: float):
    if not k > 2:
        raise ParameterError(f'ADM mass singular: k = {k} must be > 2')


def instanton_k_shift(k: float, d_prime: float) -> float:
    """k -> k - 2 pi k^2 d'."""
    _check_level(k)
    return k - 2.0 * math.pi * k ** 2 * d_prime


def k_renormalized(k: float, omega_over_a2: float, beta_I: float, T0: float, const: float = 1.0) -> float:
    """k_R = k (Omega/a^2)^(const beta^I T0), normalized to k at Omega/a^2 = 1."""
    _check_level(k)
    if not omega_over_a2 > 0:
        raise ParameterError(f'Omega/a^2 must be > 0, got {omega_over_a2}')
    return k * omega_over_a2 ** (const * beta_I * T0)


def adm_mass_flow(k_trace, dilaton_a: float) -> np.ndarray:
    """ADM mass along a level trace k(t)."""
    return np.asarray(adm_mass_vs_k(np.asarray(k_trace, dtype=float), dilaton_a))
