#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Classical microtubule displacement field: double-well parameters, reduction to
dimensionless travelling-wave form, the exact damped kink, its energetics and
direct method-of-lines evolution of the damped, forced Klein-Gordon equation

    M u_tt - k R0^2 u_xx - A u + B u^3 + gamma u_t - q E = 0.

All quantities are SI unless a name says otherwise.
"""
# -*- encoding: utf-8 -*-
from dataclasses import dataclass, replace
import logging as log
import math
from typing import Optional, Tuple, Union
import numpy as np
from scipy.special import expit
from tqdm.auto import tqdm
from .util import DIMER_CHARGE, HBAR_SI, NumericalError, ParameterError

ArrayLike = Union[float, np.ndarray]
SIGMA_MAX = 2.0 / (3.0 * math.sqrt(3.0))     # beyond this the cubic has a single real root
MIN_POINTS_PER_WIDTH = 20


@dataclass(frozen=True)
class MTParams:
    """Physical parameter set of the displacement-field model."""
    M: float                                  # dimer mass, kg
    A: float                                  # J m^-2, sign free (positive below Tc)
    B: float                                  # J m^-4
    k: float                                  # stiffness, J m^-2
    R0: float                                 # dimer spacing, m
    gamma: float = 0.0                        # friction, kg/s
    q: float = DIMER_CHARGE                   # C
    E: float = 0.0                            # field, V/m
    T: Optional[float] = None                 # K
    Tc: Optional[float] = None                # K
    temper_const: Optional[float] = None      # J m^-2 K^-1

    def __post_init__(self):
        for name in ('M', 'B', 'k', 'R0'):
            if not getattr(self, name) > 0:
                raise ParameterError(f'MTParams.{name} must be > 0, got {getattr(self, name)}')
        if self.gamma < 0:
            raise ParameterError(f'MTParams.gamma must be >= 0, got {self.gamma}')
        if self.Tc is not None and not self.Tc > 0:
            raise ParameterError(f'MTParams.Tc must be > 0, got {self.Tc}')
        if self.temper_const is not None and not self.temper_const > 0:
            raise ParameterError(f'MTParams.temper_const must be > 0, got {self.temper_const}')

    @property
    def v0(self) -> float:
        """Sound speed sqrt(k/M) R0."""
        return math.sqrt(self.k / self.M) * self.R0

    @property
    def well(self) -> float:
        """Field scale sqrt(A/B) (position of the wells at zero forcing)."""
        if self.A <= 0:
            raise ParameterError(f'no double well: A = {self.A} <= 0')
        return math.sqrt(self.A / self.B)

    def at_temperature(self, T: float) -> 'MTParams':
        """Copy with A taken from the temperature law A = -|const| (T - Tc)."""
        if self.Tc is None or self.temper_const is None:
            raise ParameterError('at_temperature needs Tc and temper_const')
        return replace(self, T=T, A=temperature_coefficient(T, self.Tc, self.temper_const))


@dataclass(frozen=True)
class DimensionlessParams:
    rho: float
    sigma: float
    alpha: float          # 1/m
    v: float              # m/s
    v0: float             # m/s
    gamma_vs: float
    vs_squared: float     # -inf at rho = 0 (degenerate boost)


@dataclass(frozen=True)
class KinkRoots:
    """Roots a <= d <= b of psi^3 - psi - sigma."""
    a: float
    d: float
    b: float

    @property
    def sigma(self) -> float:
        return self.a * self.b * self.d

    @property
    def rho(self) -> float:
        """Friction selected by the heteroclinic orbit, 3|d|/sqrt(2)."""
        return 3.0 * abs(self.d) / math.sqrt(2.0)

    @property
    def direction(self) -> int:
        """+1 for the profile a + (b-a)/(1 + exp((b-a) xi/sqrt 2)), -1 for its mirror image.
        The +1 orientation solves the damped equation with rho >= 0 only for d <= 0."""
        return 1 if self.d <= 0 else -1

    def velocity(self, params: MTParams) -> float:
        return kink_velocity(params, self)


@dataclass
class FieldState:
    grid_x: np.ndarray    # m, uniform
    u: np.ndarray         # m
    u_dot: np.ndarray     # m/s
    t: float = 0.0        # s

    def __post_init__(self):
        self.grid_x = np.asarray(self.grid_x, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.u_dot = np.asarray(self.u_dot, dtype=float)
        n = len(self.grid_x)
        if n < 3 or len(self.u) != n or len(self.u_dot) != n:
            raise ParameterError(f'FieldState arrays must have equal length >= 3 '
                                 f'(got {n}, {len(self.u)}, {len(self.u_dot)})')
        steps = np.diff(self.grid_x)
        if not np.all(steps > 0) or np.ptp(steps) > 1e-9 * steps.mean():
            raise ParameterError('FieldState grid must be uniformly spaced and increasing')

    @property
    def dx(self) -> float:
        return (self.grid_x[-1] - self.grid_x[0]) / (len(self.grid_x) - 1)


@dataclass(frozen=True)
class KinkEnergetics:
    binding_plus_resonant: float    # Delta, J
    total_energy: float             # J
    effective_mass: float           # M*, kg


def temperature_coefficient(T: float, Tc: float, temper_const: float) -> float:
    """A = -|const| (T - Tc); positive below the critical temperature."""
    if not temper_const > 0:
        raise ParameterError(f'temper_const must be > 0, got {temper_const}')
    return -abs(temper_const) * (T - Tc)


def _check_subsonic(params: MTParams, v: float):
    if params.A <= 0:
        raise ParameterError(f'no double well: A = {params.A} <= 0')
    if v < 0:
        raise ParameterError(f'kink speed must be >= 0, got {v}')
    if v >= params.v0:
        raise ParameterError(f'supersonic kink unsupported: v = {v} >= v0 = {params.v0}')


def reduce(params: MTParams, v: float) -> DimensionlessParams:
    """Travelling-wave reduction xi = alpha (x - v t), psi = u/sqrt(A/B), which turns the
    equation of motion into psi'' + rho psi' - psi^3 + psi + sigma = 0."""
    _check_subsonic(params, v)
    v0 = params.v0
    gap = params.M * (v0 ** 2 - v ** 2)
    rho = params.gamma * v / math.sqrt(gap * params.A)
    sigma = params.q * math.sqrt(params.B) * params.A ** -1.5 * params.E
    alpha = math.sqrt(params.A / gap)
    gamma_vs = friction_to_deficit(rho)
    vs_squared = 1.0 - 1.0 / gamma_vs ** 2 if gamma_vs > 0 else -math.inf
    return DimensionlessParams(rho=rho, sigma=sigma, alpha=alpha, v=v, v0=v0,
                               gamma_vs=gamma_vs, vs_squared=vs_squared)


def solve_cubic(sigma: float) -> KinkRoots:
    """Three real roots of psi^3 - psi - sigma, labeled a (smallest), d (middle), b (largest)."""
    if abs(sigma) >= SIGMA_MAX:
        raise ParameterError(f'degenerate or single-well: fewer than 3 real roots for sigma = {sigma} '
                             f'(|sigma| must be < {SIGMA_MAX})')
    # trigonometric solution of the depressed cubic
    theta = math.acos(1.5 * math.sqrt(3.0) * sigma) / 3.0
    scale = 2.0 / math.sqrt(3.0)
    roots = np.sort([scale * math.cos(theta - 2.0 * math.pi * j / 3.0) for j in range(3)])
    # one Newton polish per root, skipped next to the double-root limit
    slope = 3.0 * roots ** 2 - 1.0
    safe = np.abs(slope) > 1e-3
    roots[safe] -= (roots[safe] ** 3 - roots[safe] - sigma) / slope[safe]
    roots = np.sort(roots)
    a, d, b = (float(r) for r in roots)
    return KinkRoots(a=a, d=d, b=b)


def kink_profile(xi: ArrayLike, roots: KinkRoots, direction: int = 1) -> ArrayLike:
    """psi(xi) = a + (b-a)/(1 + exp(direction (b-a) xi/sqrt 2)).
    With direction=+1, psi -> a for xi -> +inf and psi -> b for xi -> -inf."""
    a, b = roots.a, roots.b
    return a + (b - a) * expit(-direction * (b - a) * np.asarray(xi, dtype=float) / math.sqrt(2.0))


def kink_derivatives(xi: ArrayLike, roots: KinkRoots, direction: int = 1) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """(psi, psi', psi'') of the kink, derivatives in closed form."""
    psi = kink_profile(xi, roots, direction)
    d_psi = direction * (psi - roots.a) * (psi - roots.b) / math.sqrt(2.0)
    dd_psi = direction * (2.0 * psi + roots.d) * d_psi / math.sqrt(2.0)
    return psi, d_psi, dd_psi


def residual_ode(roots: KinkRoots, rho: float, sigma: float, xi_samples: ArrayLike,
                 direction: Optional[int] = None) -> float:
    """max |psi'' + rho psi' - psi^3 + psi + sigma| on the analytic profile.
    An inconsistent (rho, sigma) pair shows up as a large residual, not as an error."""
    psi, d_psi, dd_psi = kink_derivatives(xi_samples, roots, roots.direction if direction is None else direction)
    residual = dd_psi + rho * d_psi - psi ** 3 + psi + sigma
    return float(np.max(np.abs(residual)))


def kink_velocity(params: MTParams, roots: KinkRoots) -> float:
    """v = v0 [1 + 2 gamma^2/(9 d^2 M A)]^(-1/2)."""
    if params.A <= 0:
        raise ParameterError(f'no double well: A = {params.A} <= 0')
    if params.gamma == 0:
        return params.v0
    if roots.d == 0:
        raise ParameterError('no propagating damped kink at sigma = 0 (d = 0 with gamma > 0)')
    return params.v0 / math.sqrt(1.0 + 2.0 * params.gamma ** 2 / (9.0 * roots.d ** 2 * params.M * params.A))


def transfer_time(L: float, v: float) -> float:
    """Time for a kink to cross a microtubule of length L."""
    if not L > 0 or not v > 0:
        raise ParameterError(f'transfer_time needs L > 0 and v > 0, got L = {L}, v = {v}')
    return L / v


def kink_energetics(params: MTParams, v: float) -> KinkEnergetics:
    if params.A <= 0:
        raise ParameterError(f'no double well: A = {params.A} <= 0')
    A, B = params.A, params.B
    delta = (2.0 * math.sqrt(2.0) / 3.0) * A ** 2 / B + (math.sqrt(2.0) / 3.0) * params.k * A / B
    alpha = reduce(params, v).alpha
    m_eff = (4.0 / (3.0 * math.sqrt(2.0))) * params.M * A * alpha / (params.R0 * B)
    return KinkEnergetics(binding_plus_resonant=delta, total_energy=delta + 0.5 * m_eff * v ** 2,
                          effective_mass=m_eff)


def central_charges(vs_squared: float) -> Tuple[float, float]:
    """(c_t, c_x) = (1 - 24 v_s^2 gamma^2, 1 + 24 gamma^2) with gamma^2 = 1/(1 - v_s^2).
    Negative vs_squared is the Wick-rotated (imaginary velocity) regime."""
    if vs_squared == 1.0:
        raise ParameterError('null boost singular: v_s^2 = 1')
    if vs_squared > 1.0:
        raise ParameterError(f'superluminal boost: v_s^2 = {vs_squared} > 1')
    gamma_sq = 1.0 / (1.0 - vs_squared)
    return 1.0 - 24.0 * vs_squared * gamma_sq, 1.0 + 24.0 * gamma_sq


def wick_matter_central_charge(vs_squared: float) -> float:
    """1 + 24 |v_s|^2/(1 + |v_s|^2) for imaginary boost velocity; lies in [1, 25]."""
    if vs_squared > 0:
        raise ParameterError(f'Wick-rotated regime needs v_s^2 <= 0, got {vs_squared}')
    w = abs(vs_squared)
    return 1.0 + 24.0 * w / (1.0 + w)


def friction_to_deficit(rho: float) -> float:
    """gamma_vs = rho/2."""
    if rho < 0:
        raise ParameterError(f'friction rho must be >= 0, got {rho}')
    if rho == 0:
        log.debug('rho = 0: degenerate boost (gamma_vs = 0)')
    return rho / 2.0


def reality_check(d: float) -> bool:
    """True iff d^2 >= 8/9, i.e. the boost velocity is real."""
    return 9.0 * d * d >= 8.0 - 1e-12


def boost_velocity_squared(rho: float) -> float:
    """v_s^2 = 1 - 4/rho^2, from rho = 2 gamma_vs; non-negative iff rho >= 2."""
    if not rho > 0:
        raise ParameterError(f'boost undefined for rho = {rho}')
    return 1.0 - 4.0 / rho ** 2


def boost_coordinates(x: ArrayLike, t: ArrayLike, v_s: float) -> Tuple[ArrayLike, ArrayLike]:
    if not abs(v_s) < 1:
        raise ParameterError(f'boost needs |v_s| < 1, got {v_s}')
    g = 1.0 / math.sqrt(1.0 - v_s ** 2)
    return g * (np.asarray(x) - v_s * np.asarray(t)), g * (np.asarray(t) - v_s * np.asarray(x))


def linear_dilaton(xi: ArrayLike, rho: float) -> ArrayLike:
    """Phi(xi) = -rho xi."""
    return -rho * np.asarray(xi, dtype=float)


def string_length(alpha_prime: float, v0: float) -> float:
    """lambda_s = sqrt(hbar alpha'/v0^2), hbar in SI."""
    if not alpha_prime > 0 or not v0 > 0:
        raise ParameterError(f'string_length needs alpha_prime > 0 and v0 > 0, got {alpha_prime}, {v0}')
    return math.sqrt(HBAR_SI * alpha_prime / v0 ** 2)


def microtubule_parameters(E: float = 1.0e3) -> MTParams:
    """Phenomenological parameter set: v0 = 1000 m/s, kink speed close to 2 m/s at E = 1 kV/m,
    Delta close to 1 eV and M* close to 5e-27 kg."""
    return MTParams(M=1.8e-22, A=6.85e-4, B=5.67e15, k=2.8125, R0=8.0e-9, gamma=9.0e-12, E=E)


def kink_state(params: MTParams, grid_x: np.ndarray, v: Optional[float] = None, x0: float = 0.0,
               t: float = 0.0) -> FieldState:
    """Analytic travelling kink centred at x0 (at time t) and its time derivative.
    The endpoints sit exactly on the asymptotic well values."""
    grid_x = np.asarray(grid_x, dtype=float)
    sigma = reduce(params, 0.0).sigma
    roots = solve_cubic(sigma)
    if v is None:
        v = kink_velocity(params, roots)
    dp = reduce(params, v)
    direction = roots.direction
    well = params.well
    xi = dp.alpha * (grid_x - x0)
    psi, d_psi, _ = kink_derivatives(xi, roots, direction)
    u = well * psi
    u_dot = -dp.alpha * v * well * d_psi
    left, right = (roots.b, roots.a) if direction == 1 else (roots.a, roots.b)
    u[0], u[-1] = well * left, well * right
    u_dot[0] = u_dot[-1] = 0.0
    return FieldState(grid_x=grid_x, u=u, u_dot=u_dot, t=t)


def _acceleration(u: np.ndarray, u_dot: np.ndarray, params: MTParams, dx: float) -> np.ndarray:
    acc = np.zeros_like(u)
    u_xx = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx ** 2
    ui = u[1:-1]
    acc[1:-1] = (params.k * params.R0 ** 2 * u_xx + params.A * ui - params.B * ui ** 3
                 - params.gamma * u_dot[1:-1] + params.q * params.E) / params.M
    return acc


def cfl_limit(params: MTParams, dx: float) -> float:
    return dx / params.v0


def evolve_pde(state: FieldState, params: MTParams, dt: float, n_steps: int,
               progress_bar: bool = False) -> FieldState:
    """Advances (u, u_dot) by n_steps classical RK4 steps (second-order centred differences
    in space). Endpoints stay clamped at their initial values."""
    dx = state.dx
    if not dt > 0:
        raise ParameterError(f'dt must be > 0, got {dt}')
    if dt >= (limit := cfl_limit(params, dx)):
        raise ParameterError(f'CFL violation: dt = {dt} must be < dx/v0 = {limit}')
    if params.A > 0:
        width = math.sqrt(params.M * params.v0 ** 2 / params.A)
        if width / dx < MIN_POINTS_PER_WIDTH * (1 - 1e-9):
            raise ParameterError(f'grid too coarse: {width / dx:.1f} points per kink width 1/alpha '
                                 f'(need >= {MIN_POINTS_PER_WIDTH}); reduce dx below {width / MIN_POINTS_PER_WIDTH}')
    u, w = state.u.copy(), state.u_dot.copy()
    for step in tqdm(range(1, n_steps + 1), disable=not progress_bar, dynamic_ncols=True, desc='evolve'):
        k1u, k1w = w, _acceleration(u, w, params, dx)
        k2u = w + 0.5 * dt * k1w
        k2w = _acceleration(u + 0.5 * dt * k1u, k2u, params, dx)
        k3u = w + 0.5 * dt * k2w
        k3w = _acceleration(u + 0.5 * dt * k2u, k3u, params, dx)
        k4u = w + dt * k3w
        k4w = _acceleration(u + dt * k3u, k4u, params, dx)
        u = u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        w = w + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
            raise NumericalError(f'blow-up detected at step {step} (t = {state.t + step * dt})')
    return FieldState(grid_x=state.grid_x, u=u, u_dot=w, t=state.t + n_steps * dt)


def field_energy(state: FieldState, params: MTParams) -> float:
    """Discrete Hamiltonian whose gradient gives the semi-discrete equation of motion:
    sum dx [M u_dot^2/2 + k R0^2 u_x^2/2 - A u^2/2 + B u^4/4 - q E u]."""
    dx = state.dx
    u = state.u
    kinetic = 0.5 * params.M * np.sum(state.u_dot ** 2)
    gradient = 0.5 * params.k * params.R0 ** 2 * np.sum(np.diff(u) ** 2) / dx ** 2
    potential = np.sum(-0.5 * params.A * u ** 2 + 0.25 * params.B * u ** 4 - params.q * params.E * u)
    return float(dx * (kinetic + gradient + potential))


def comoving_drift(state: FieldState, params: MTParams, v: float, x0: float = 0.0) -> float:
    """RMS deviation from the rigidly translated analytic kink, relative to the jump (b-a) sqrt(A/B)."""
    reference = kink_state(params, state.grid_x, v=v, x0=x0 + v * state.t)
    roots = solve_cubic(reduce(params, v).sigma)
    jump = (roots.b - roots.a) * params.well
    return float(np.sqrt(np.mean((state.u - reference.u) ** 2)) / jump)


def profile_rows(roots: KinkRoots, xi: ArrayLike) -> list:
    """(xi, psi) pairs of the kink profile in its own orientation."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return list(zip(xi.tolist(), np.atleast_1d(kink_profile(xi, roots, roots.direction)).tolist()))
