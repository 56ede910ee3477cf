#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Black-hole formation from a tachyon pulse in the two-dimensional string background:
metric quadratures, horizon location, ADM mass fit and the level dependence of the mass.

The line element is
    ds^2 = -{1 + X(x, t) - I(x, t)} dt^2 + {1 + I(x, t)} dx^2
    X(x, t) = int_inf^x [(dT/dx)^2 + (dT/dt)^2] dx'     (at fixed t, integrated inward from +inf)
    I(x, t) = int_-inf^t (dT/dt)(dT/dx) dt'              (at fixed x)
"""
# -*- encoding: utf-8 -*-
from dataclasses import dataclass
import logging as log
import math
from typing import List, Optional, Tuple
import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from .util import NumericalError, ParameterError, block_ranges, ordered_map

PULSE_KINDS = ('infalling', 'reflected')
# integration tails beyond the pulse centres, in units of x (pulse width is 1/2)
TAIL = 30.0
QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-11
QUAD_TOLERANCE = 1e-9
POINT_BLOCK = 16


@dataclass(frozen=True)
class TachyonPulse:
    """infalling: T = a e^-x / cosh 2(x + t)
    reflected: T = a e^-x [1/cosh 2(x + t) + 1/cosh 2(x - t)]"""
    amplitude: float
    kind: str = 'infalling'

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ParameterError(f'pulse amplitude must be > 0, got {self.amplitude}')
        if self.kind not in PULSE_KINDS:
            raise ParameterError(f"pulse kind must be one of {', '.join(PULSE_KINDS)}, got '{self.kind}'")

    def _branches(self) -> Tuple[int, ...]:
        # +1: profile in x + t (moving toward -x), -1: profile in x - t
        return (1,) if self.kind == 'infalling' else (1, -1)

    def value(self, x, t):
        x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-x) * sum(1.0 / np.cosh(2.0 * (x + s * t)) for s in self._branches())

    def dx(self, x, t):
        x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
        total = 0.0
        for s in self._branches():
            u = 2.0 * (x + s * t)
            sech = 1.0 / np.cosh(u)
            total = total - sech - 2.0 * sech * np.tanh(u)
        return self.amplitude * np.exp(-x) * total

    def dt(self, x, t):
        x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
        total = 0.0
        for s in self._branches():
            u = 2.0 * (x + s * t)
            total = total - 2.0 * s * np.tanh(u) / np.cosh(u)
        return self.amplitude * np.exp(-x) * total

    def centres_x(self, t: float) -> List[float]:
        """Pulse centres in x at time t."""
        return [-s * t for s in self._branches()]

    def centres_t(self, x: float) -> List[float]:
        """Times at which a pulse centre passes x."""
        return [-s * x for s in self._branches()]


@dataclass
class MetricProfile:
    x_grid: np.ndarray
    t: float
    g_tt: np.ndarray
    g_xx: np.ndarray
    pulse: TachyonPulse


def _quad(func, lo: float, hi: float, centres: List[float]) -> Tuple[float, float, bool]:
    points = sorted(c for c in centres if lo < c < hi)
    result = quad(func, lo, hi, points=points or None, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                  limit=400, full_output=1)
    value, abserr = result[0], result[1]
    # roundoff messages are accepted when the error estimate is still small
    converged = math.isfinite(value) and abserr <= QUAD_TOLERANCE * max(1.0, abs(value))
    return value, abserr, converged


def metric_point(pulse: TachyonPulse, x: float, t: float) -> Tuple[float, float, float, bool]:
    """(g_tt, g_xx, quadrature error estimate, converged) at a single point."""
    def energy_density(xp):
        return pulse.dx(xp, t) ** 2 + pulse.dt(xp, t) ** 2

    def flux(tp):
        return pulse.dt(x, tp) * pulse.dx(x, tp)

    x_hi = max([x] + pulse.centres_x(t)) + TAIL
    X, err_X, ok_X = _quad(energy_density, x, x_hi, pulse.centres_x(t))
    X = -X
    t_lo = min([t] + pulse.centres_t(x)) - TAIL
    I, err_I, ok_I = _quad(flux, t_lo, t, pulse.centres_t(x))
    return -(1.0 + X - I), 1.0 + I, err_X + err_I, ok_X and ok_I


def metric_from_pulse(pulse: TachyonPulse, x_grid, t: float, progress_bar: bool = False) -> MetricProfile:
    """Adaptive quadrature of both metric integrals at every grid point."""
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or len(x_grid) < 2:
        raise ParameterError('x_grid must be a 1-d array with at least 2 points')

    def run_block(block: range) -> list:
        return [metric_point(pulse, float(x_grid[i]), t) for i in block]

    rows = [row for block in ordered_map(run_block, block_ranges(len(x_grid), POINT_BLOCK),
                                         progress_bar=progress_bar, desc='metric')
            for row in block]
    failed = [(x, err) for x, (_, _, err, ok) in zip(x_grid, rows) if not ok]
    if failed:
        x_worst, err_worst = max(failed, key=lambda item: item[1])
        raise NumericalError(f'metric quadrature did not converge at {len(failed)} grid point(s); '
                             f'worst x = {x_worst} (error estimate {err_worst:.3g}, t = {t})')
    return MetricProfile(x_grid=x_grid, t=t, g_tt=np.array([row[0] for row in rows]),
                         g_xx=np.array([row[1] for row in rows]), pulse=pulse)


def late_time(pulse: TachyonPulse, x_grid, threshold: float = 1e-10) -> float:
    """First time at which the pulse magnitude on the grid window is below threshold."""
    x_grid = np.asarray(x_grid, dtype=float)
    x_min, x_max = float(x_grid.min()), float(x_grid.max())
    log_bound = math.log(2.0 * pulse.amplitude / threshold)
    # incoming branch at the left edge: 2a exp(-3 x_min - 2t)
    t_late = (log_bound - 3.0 * x_min) / 2.0
    if pulse.kind == 'reflected':
        # outgoing branch at the right edge: 2a exp(x_max - 2t)
        t_late = max(t_late, (log_bound + x_max) / 2.0)
    return max(t_late, 0.0)


def horizon_locate(profile: MetricProfile) -> Optional[float]:
    """Outermost zero of the dt^2 coefficient -g_tt, or None without a sign change on the grid."""
    coefficient = -profile.g_tt
    signs = np.sign(coefficient)
    crossings = [i for i in range(len(signs) - 1) if signs[i] * signs[i + 1] < 0 or signs[i + 1] == 0]
    if not crossings:
        return None
    if len(crossings) > 1:
        log.warning(f'dt^2 coefficient changes sign {len(crossings)} times on the grid; '
                    f'reporting the outermost root')
    i = crossings[-1]
    lo, hi = float(profile.x_grid[i]), float(profile.x_grid[i + 1])
    if signs[i + 1] == 0:
        return hi
    return float(brentq(lambda x: -metric_point(profile.pulse, x, profile.t)[0], lo, hi, xtol=1e-13))


def adm_mass(profile: MetricProfile, tolerance: float = 1e-3) -> float:
    """Least-squares fit of -g_tt = 1 - M exp(-2x) over the exterior of the horizon."""
    x = profile.x_grid
    horizon = horizon_locate(profile)
    exterior = x > horizon if horizon is not None else np.ones_like(x, dtype=bool)
    if np.count_nonzero(exterior) < 2:
        raise ParameterError('too few grid points outside the horizon to fit the ADM mass')
    regressor = np.exp(-2.0 * x[exterior])
    y = 1.0 + profile.g_tt[exterior]
    mass = float(np.dot(regressor, y) / np.dot(regressor, regressor))
    residual = float(np.max(np.abs(y - mass * regressor)))
    if residual > tolerance * max(1.0, float(np.max(np.abs(y)))):
        raise NumericalError(f'not yet asymptotic: ADM fit residual {residual:.3g} at t = {profile.t}')
    return mass


def adm_mass_vs_k(k, dilaton_a: float):
    """M = e^a / sqrt(k - 2), proportionality constant 1."""
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr <= 2):
        raise ParameterError(f'ADM mass singular: level k must be > 2, got {k}')
    mass = math.exp(dilaton_a) / np.sqrt(k_arr - 2.0)
    return float(mass) if np.ndim(mass) == 0 else mass
