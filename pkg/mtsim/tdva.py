#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Time-dependent variational quantization of the kink field with a Gaussian (squeezed) state.

Lattice of N sites, one oscillator per site, unit mass. The state carries the mean field C,
its momentum D, the equal-time two-point function G and its conjugate Pi. The energy is
    H = sum_i [D_i^2/2 + (grad C)_i^2/2 + M0(C_i, w_i)]
        + Tr[G^-1/8 + 2 Pi G Pi - L G/2] - Tr[G0^-1/8 - L G0/2]
with w_i = (G_ii - G0_ii)/2, L the periodic lattice Laplacian, (grad C) over the clamped chain, and
    M_n(z, w) = exp(w d^2/dz^2) U^(n)(z)
the Gaussian-smeared potential derivatives. Hamilton's equations follow from H; see
architecture.md for the derivation.
"""
# -*- encoding: utf-8 -*-
from dataclasses import dataclass
import math
from typing import Optional, Tuple
import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import LinAlgError, cho_factor, cho_solve, circulant
from tqdm.auto import tqdm
from .util import NumericalError, ParameterError

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class QuarticPotential:
    """U(z) = -A z^2/2 + B z^4/4 in lattice units."""
    A: float
    B: float

    def __post_init__(self):
        if not self.B > 0:
            raise ParameterError(f'quartic coefficient B must be > 0, got {self.B}')

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial([0.0, 0.0, -0.5 * self.A, 0.0, 0.25 * self.B])

    @property
    def well(self) -> float:
        if self.A <= 0:
            raise ParameterError('no double well for A <= 0')
        return math.sqrt(self.A / self.B)

    @property
    def well_curvature(self) -> float:
        """U''(well) = 2A."""
        return 2.0 * self.A


def smeared_derivative(pot: QuarticPotential, n: int, z, w):
    """M_n(z, w) = sum_j w^j/j! U^(n+2j)(z); the series stops after the quartic term."""
    if n < 0:
        raise ParameterError(f'derivative order must be >= 0, got {n}')
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    base = pot.polynomial.deriv(n) if n else pot.polynomial
    total = np.zeros(np.broadcast(z, w).shape)
    j, term = 0, base
    while True:
        total = total + w ** j / math.factorial(j) * term(z)
        if term.degree() < 2:
            return total
        term = term.deriv(2)
        j += 1


def periodic_laplacian(N: int, dx: float) -> np.ndarray:
    identity = np.eye(N)
    return (np.roll(identity, 1, axis=0) + np.roll(identity, -1, axis=0) - 2.0 * identity) / dx ** 2


def clamped_laplacian(C: np.ndarray, dx: float) -> np.ndarray:
    """Second difference on interior sites, zero at the two clamped ends."""
    out = np.zeros_like(C)
    out[1:-1] = (C[2:] - 2.0 * C[1:-1] + C[:-2]) / dx ** 2
    return out


@dataclass
class FreeKernel:
    G0: np.ndarray
    m_eff: float
    dx: float

    @property
    def N(self) -> int:
        return self.G0.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        return periodic_laplacian(self.N, self.dx)

    @property
    def omega_max(self) -> float:
        return math.sqrt(self.m_eff ** 2 + (4.0 / self.dx ** 2 if self.N > 1 else 0.0))

    def vacuum_terms(self) -> float:
        """Tr[G0^-1/8 - L G0/2], the subtraction that gives the free vacuum zero energy."""
        return float(np.trace(np.linalg.inv(self.G0)) / 8.0 - 0.5 * np.sum(self.laplacian * self.G0))


def free_two_point(N: int, dx: float, m_eff: float) -> FreeKernel:
    """G0(x, y) = (1/N) sum_k exp(ik(x - y))/(2 omega_k), omega_k^2 = m^2 + (2/dx^2)(1 - cos k dx),
    on a periodic lattice."""
    if not m_eff > 0:
        raise ParameterError(f'm_eff = {m_eff}: the free two-point function is infrared-divergent in '
                             f'1+1 dimensions; a positive mass is required')
    if N < 1 or not dx > 0:
        raise ParameterError(f'free_two_point needs N >= 1 and dx > 0, got N = {N}, dx = {dx}')
    n = np.arange(N)
    omega = np.sqrt(m_eff ** 2 + (2.0 / dx ** 2) * (1.0 - np.cos(2.0 * math.pi * n / N)))
    first_column = np.fft.ifft(1.0 / (2.0 * omega)).real
    G0 = circulant(first_column)
    return FreeKernel(G0=0.5 * (G0 + G0.T), m_eff=m_eff, dx=dx)


@dataclass
class SqueezedState:
    grid_x: np.ndarray
    C: np.ndarray
    D: np.ndarray
    G: np.ndarray
    Pi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.grid_x = np.asarray(self.grid_x, dtype=float)
        self.C = np.asarray(self.C, dtype=float)
        self.D = np.asarray(self.D, dtype=float)
        self.G = np.asarray(self.G, dtype=float)
        self.Pi = np.asarray(self.Pi, dtype=float)
        N = len(self.grid_x)
        if N < 3:
            raise ParameterError(f'squeezed state needs at least 3 sites, got {N}')
        steps = np.diff(self.grid_x)
        if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
            raise ParameterError('grid_x must be uniform and increasing')
        if self.C.shape != (N,) or self.D.shape != (N,) or self.G.shape != (N, N) or self.Pi.shape != (N, N):
            raise ParameterError(f'field shapes do not match a {N}-site grid')
        if np.max(np.abs(self.G - self.G.T)) > SYMMETRY_TOL or np.max(np.abs(self.Pi - self.Pi.T)) > SYMMETRY_TOL:
            raise ParameterError('G and Pi must be symmetric')
        try:
            cho_factor(self.G)
        except LinAlgError:
            raise ParameterError('G must be positive definite')

    @property
    def dx(self) -> float:
        return float(self.grid_x[1] - self.grid_x[0])

    @classmethod
    def vacuum(cls, grid_x, C, D, kernel: FreeKernel) -> 'SqueezedState':
        """G = G0, Pi = 0 around the given mean field."""
        N = len(grid_x)
        return cls(grid_x=grid_x, C=C, D=D, G=kernel.G0.copy(), Pi=np.zeros((N, N)))


def kink_mean_field(grid_x, pot: QuarticPotential, x0: float = 0.0) -> np.ndarray:
    """C = sqrt(A/B) tanh(sqrt(A/2) (x - x0)), the static kink of U."""
    return pot.well * np.tanh(math.sqrt(pot.A / 2.0) * (np.asarray(grid_x, dtype=float) - x0))


def kink_initial_state(grid_x, pot: QuarticPotential, kernel: FreeKernel, x0: float = 0.0,
                       v: float = 0.0) -> SqueezedState:
    """Lorentz-boosted kink C(x - v t) with D = -v dC/dx, on the free vacuum G = G0, Pi = 0."""
    if not abs(v) < 1:
        raise ParameterError(f'kink boost needs |v| < 1, got {v}')
    grid_x = np.asarray(grid_x, dtype=float)
    scale = math.sqrt(pot.A / 2.0) / math.sqrt(1.0 - v ** 2)
    C = pot.well * np.tanh(scale * (grid_x - x0))
    D = -v * pot.well * scale / np.cosh(scale * (grid_x - x0)) ** 2
    return SqueezedState.vacuum(grid_x, C, D, kernel)


def _inverse(G: np.ndarray, t: float) -> np.ndarray:
    try:
        factor = cho_factor(G)
    except LinAlgError:
        raise NumericalError(f'Gaussian ansatz breakdown at t = {t}: G lost positive definiteness')
    return cho_solve(factor, np.eye(len(G)))


def _smearing_width(G: np.ndarray, kernel: FreeKernel) -> np.ndarray:
    return 0.5 * (np.diag(G) - np.diag(kernel.G0))


def quantum_energy(state: SqueezedState, pot: QuarticPotential, kernel: FreeKernel) -> float:
    dx = state.dx
    w = _smearing_width(state.G, kernel)
    classical = np.sum(0.5 * state.D ** 2) + 0.5 * np.sum(np.diff(state.C) ** 2) / dx ** 2 \
        + np.sum(smeared_derivative(pot, 0, state.C, w))
    G_inv = _inverse(state.G, state.t)
    fluctuation = np.trace(G_inv) / 8.0 + 2.0 * np.trace(state.Pi @ state.G @ state.Pi) \
        - 0.5 * np.sum(kernel.laplacian * state.G)
    return float(classical + fluctuation - kernel.vacuum_terms())


def _classical_gradient(C: np.ndarray, w: np.ndarray, pot: QuarticPotential, dx: float) -> np.ndarray:
    grad = smeared_derivative(pot, 1, C, w)
    diffs = np.diff(C) / dx ** 2
    grad[:-1] -= diffs
    grad[1:] += diffs
    return grad


def hamilton_gradients(state: SqueezedState, pot: QuarticPotential,
                       kernel: FreeKernel) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(dH/dC, dH/dD, dH/dG, dH/dPi), with G and Pi entries treated as independent."""
    w = _smearing_width(state.G, kernel)
    G_inv = _inverse(state.G, state.t)
    dH_dG = -G_inv @ G_inv / 8.0 + 2.0 * state.Pi @ state.Pi - 0.5 * kernel.laplacian \
        + 0.5 * np.diag(smeared_derivative(pot, 2, state.C, w))
    dH_dPi = 2.0 * (state.G @ state.Pi + state.Pi @ state.G)
    return _classical_gradient(state.C, w, pot, state.dx), state.D.copy(), dH_dG, dH_dPi


def tdva_step_limit(kernel: FreeKernel) -> float:
    """Largest stable RK4 step: half the lattice spacing, and below the fastest G oscillation."""
    return min(0.5 * kernel.dx, 1.4 / kernel.omega_max)


def _rates(C, D, G, Pi, t, pot, kernel, frozen_G):
    w = _smearing_width(G, kernel)
    dC = D.copy()
    dD = clamped_laplacian(C, kernel.dx) - smeared_derivative(pot, 1, C, w)
    dC[[0, -1]] = 0.0
    dD[[0, -1]] = 0.0
    if frozen_G:
        return dC, dD, np.zeros_like(G), np.zeros_like(Pi)
    G_inv = _inverse(G, t)
    dG = 2.0 * (G @ Pi + Pi @ G)
    dPi = G_inv @ G_inv / 8.0 - 2.0 * Pi @ Pi + 0.5 * kernel.laplacian \
        - 0.5 * np.diag(smeared_derivative(pot, 2, C, w))
    return dC, dD, dG, dPi


def tdva_step(state: SqueezedState, pot: QuarticPotential, kernel: FreeKernel, dt: float,
              frozen_G: bool = False) -> SqueezedState:
    """One RK4 step of Hamilton's equations. frozen_G keeps (G, Pi) fixed: the classical limit."""
    if kernel.N != len(state.C) or abs(kernel.dx - state.dx) > 1e-9 * state.dx:
        raise ParameterError('free kernel does not match the state lattice')
    if not 0 < dt < (limit := tdva_step_limit(kernel)):
        raise ParameterError(f'dt = {dt} must be in (0, {limit}) for the lattice CFL bound')
    y = (state.C, state.D, state.G, state.Pi)
    t = state.t
    k1 = _rates(*y, t, pot, kernel, frozen_G)
    k2 = _rates(*(a + 0.5 * dt * b for a, b in zip(y, k1)), t + 0.5 * dt, pot, kernel, frozen_G)
    k3 = _rates(*(a + 0.5 * dt * b for a, b in zip(y, k2)), t + 0.5 * dt, pot, kernel, frozen_G)
    k4 = _rates(*(a + dt * b for a, b in zip(y, k3)), t + dt, pot, kernel, frozen_G)
    C, D, G, Pi = (a + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
    G = 0.5 * (G + G.T)
    Pi = 0.5 * (Pi + Pi.T)
    if not (np.all(np.isfinite(C)) and np.all(np.isfinite(G))):
        raise NumericalError(f'Gaussian ansatz breakdown at t = {t + dt}: non-finite fields')
    _inverse(G, t + dt)
    return SqueezedState(grid_x=state.grid_x, C=C, D=D, G=G, Pi=Pi, t=t + dt)


def classical_step(state: SqueezedState, pot: QuarticPotential, kernel: FreeKernel, dt: float) -> SqueezedState:
    return tdva_step(state, pot, kernel, dt, frozen_G=True)


@dataclass
class TDVATrace:
    t: np.ndarray
    C: np.ndarray           # (n_records, N)
    w: np.ndarray           # smearing widths (n_records, N)
    energy: np.ndarray
    final: SqueezedState


def tdva_evolve(state: SqueezedState, pot: QuarticPotential, kernel: FreeKernel, dt: float, n_steps: int,
                frozen_G: bool = False, record_every: int = 1, progress_bar: bool = False) -> TDVATrace:
    records = [(state.t, state.C.copy(), _smearing_width(state.G, kernel), quantum_energy(state, pot, kernel))]
    for n in tqdm(range(1, n_steps + 1), disable=not progress_bar, dynamic_ncols=True, desc='tdva'):
        state = tdva_step(state, pot, kernel, dt, frozen_G)
        if n % record_every == 0 or n == n_steps:
            records.append((state.t, state.C.copy(), _smearing_width(state.G, kernel),
                            quantum_energy(state, pot, kernel)))
    t, C, w, energy = zip(*records)
    return TDVATrace(t=np.array(t), C=np.array(C), w=np.array(w), energy=np.array(energy), final=state)


def modified_soliton_residual(C_trace, w_trace: Optional[np.ndarray], pot: QuarticPotential,
                              dt: float, dx: float) -> float:
    """max |d_t^2 C - d_x^2 C + M_1[C]| by centred differences on interior sites and times;
    w_trace None means G = G0 throughout."""
    C = np.asarray(C_trace, dtype=float)
    if C.ndim != 2 or C.shape[0] < 3 or C.shape[1] < 3:
        raise ParameterError('C_trace must hold at least 3 times of at least 3 sites')
    w = np.zeros_like(C) if w_trace is None else np.asarray(w_trace, dtype=float)
    inner = C[1:-1, 1:-1]
    C_tt = (C[2:, 1:-1] - 2.0 * inner + C[:-2, 1:-1]) / dt ** 2
    C_xx = (C[1:-1, 2:] - 2.0 * inner + C[1:-1, :-2]) / dx ** 2
    residual = C_tt - C_xx + smeared_derivative(pot, 1, inner, w[1:-1, 1:-1])
    return float(np.max(np.abs(residual)))


def trace_residual(trace: TDVATrace, pot: QuarticPotential, kernel: FreeKernel) -> float:
    """modified_soliton_residual of a run recorded at every step."""
    steps = np.diff(trace.t)
    if len(steps) < 2 or np.ptp(steps) > 1e-9 * steps[0]:
        raise ParameterError('trace_residual needs at least 3 records at uniform spacing (record_every = 1)')
    return modified_soliton_residual(trace.C, trace.w, pot, float(steps[0]), kernel.dx)
