#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Open-system layer: Lindblad evolution in the convention
    d rho/dt = i[rho, H] - sum_m {B_m^+ B_m, rho} + 2 sum_m B_m rho B_m^+
its quantum-state-diffusion unraveling, dispersion entropy over channels, energy statistics,
off-diagonal decay fits and the collapse-time estimates. hbar = 1 inside the dynamics.
"""
# -*- encoding: utf-8 -*-
from dataclasses import dataclass, field
import logging as log
import math
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
from scipy.special import entr
from scipy.stats import linregress
from tqdm.auto import tqdm
from .util import (HBAR_C_EV_M, HBAR_EV_S, M_GUS_GEV, NumericalError, ParameterError, block_ranges,
                   gev_to_ev, ordered_map)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-10
STEP_TRACE_TOL = 1e-12
MAX_HALVINGS = 8
ITO_NORM_TOL = 1e-3
TRAJECTORY_BLOCK = 128


def _hermitian_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


@dataclass
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1] or self.dim < 2:
            raise ParameterError(f'density matrix must be square with dim >= 2, got shape {self.entries.shape}')
        if (defect := _hermitian_defect(self.entries)) > HERMITIAN_TOL:
            raise ParameterError(f'density matrix not Hermitian (defect {defect:.3g})')
        if abs(np.trace(self.entries).real - 1.0) > TRACE_TOL:
            raise ParameterError(f'density matrix trace {np.trace(self.entries).real!r} != 1')
        if (lowest := float(np.linalg.eigvalsh(self.entries)[0])) < POSITIVITY_TOL:
            raise ParameterError(f'density matrix not positive (smallest eigenvalue {lowest:.3g})')

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_state(cls, psi) -> 'DensityMatrix':
        amplitudes = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
        return cls(np.outer(amplitudes, amplitudes.conj()))


@dataclass
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 1 or len(self.amplitudes) < 2:
            raise ParameterError(f'state vector must be 1-d with dim >= 2, got shape {self.amplitudes.shape}')
        if abs(np.linalg.norm(self.amplitudes) - 1.0) > TRACE_TOL:
            raise ParameterError(f'state vector norm {np.linalg.norm(self.amplitudes)!r} != 1')

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    @classmethod
    def normalized(cls, amplitudes) -> 'StateVector':
        amplitudes = np.asarray(amplitudes, dtype=complex)
        return cls(amplitudes / np.linalg.norm(amplitudes))

    def expect(self, operator: np.ndarray) -> complex:
        return complex(self.amplitudes.conj() @ operator @ self.amplitudes)


@dataclass
class OpenSystem:
    H: np.ndarray
    lindblad_ops: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=complex)
        if self.H.ndim != 2 or self.H.shape[0] != self.H.shape[1]:
            raise ParameterError(f'H must be square, got shape {self.H.shape}')
        if (defect := _hermitian_defect(self.H)) > HERMITIAN_TOL:
            raise ParameterError(f'H not Hermitian (defect {defect:.3g})')
        self.lindblad_ops = [np.asarray(op, dtype=complex) for op in self.lindblad_ops]
        for i, op in enumerate(self.lindblad_ops):
            if op.shape != self.H.shape:
                raise ParameterError(f'Lindblad operator {i} has shape {op.shape}, H has {self.H.shape}')

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def check_dim(self, dim: int):
        if dim != self.dim:
            raise ParameterError(f'state dimension {dim} does not match system dimension {self.dim}')

    def unraveling_ops(self) -> np.ndarray:
        """sqrt(2) B_m: the standard-form jump operators of the same generator."""
        if not self.lindblad_ops:
            return np.zeros((0, self.dim, self.dim), dtype=complex)
        return math.sqrt(2.0) * np.array(self.lindblad_ops)


@dataclass
class ChannelProjectors:
    projectors: List[np.ndarray]

    def __post_init__(self, tol: float = 1e-12):
        self.projectors = [np.asarray(p, dtype=complex) for p in self.projectors]
        if not self.projectors:
            raise ParameterError('at least one channel projector is required')
        dim = self.projectors[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for k, p in enumerate(self.projectors):
            if p.shape != (dim, dim):
                raise ParameterError(f'channel projector {k} has shape {p.shape}')
            if _hermitian_defect(p) > tol or np.max(np.abs(p @ p - p)) > tol:
                raise ParameterError(f'channel {k} is not an orthogonal projector')
            for j, q in enumerate(self.projectors[:k]):
                if np.max(np.abs(p @ q)) > tol:
                    raise ParameterError(f'channels {j} and {k} overlap')
            total += p
        if np.max(np.abs(total - np.eye(dim))) > tol:
            raise ParameterError('channel projectors do not sum to the identity (incomplete channels)')

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self):
        return len(self.projectors)

    @classmethod
    def from_labels(cls, labels: Sequence) -> 'ChannelProjectors':
        """Diagonal projectors grouping basis states by label, channels in order of first appearance."""
        order: Dict = {}
        for label in labels:
            order.setdefault(label, len(order))
        projectors = []
        for label in order:
            p = np.zeros((len(labels), len(labels)), dtype=complex)
            for i, other in enumerate(labels):
                if other == label:
                    p[i, i] = 1.0
            projectors.append(p)
        return cls(projectors)

    def probabilities(self, psi: np.ndarray) -> np.ndarray:
        """<P_k> for a state (d,) or a stack of states (..., d)."""
        psi = np.asarray(psi, dtype=complex)
        return np.stack([np.einsum('...i,ij,...j->...', psi.conj(), p, psi).real for p in self.projectors],
                        axis=-1)


def channel_projectors_from_labels(labels: Sequence) -> ChannelProjectors:
    return ChannelProjectors.from_labels(labels)


@dataclass
class CollapseInputs:
    E_eV: float
    N: float
    M_gus_eV: float = gev_to_ev(M_GUS_GEV)
    m_eV: Optional[float] = None
    delta_x_m: Optional[float] = None
    hbar_eV_s: float = HBAR_EV_S
    hbar_c_eV_m: float = HBAR_C_EV_M

    def __post_init__(self):
        for name in ('E_eV', 'N', 'M_gus_eV', 'm_eV', 'delta_x_m', 'hbar_eV_s', 'hbar_c_eV_m'):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ParameterError(f'collapse input {name} must be > 0, got {value}')

    def pointlike_inputs(self) -> Tuple[float, float]:
        if self.m_eV is None or self.delta_x_m is None:
            raise ParameterError('point-like collapse time needs m_eV and delta_x_m')
        return self.m_eV, self.delta_x_m


def liouvillian(sys: OpenSystem) -> np.ndarray:
    """Superoperator acting on row-major vec(rho): vec(A rho B) = (A kron B^T) vec(rho)."""
    d = sys.dim
    identity = np.eye(d)
    L = 1j * (np.kron(identity, sys.H.T) - np.kron(sys.H, identity))
    for B in sys.lindblad_ops:
        K = B.conj().T @ B
        L -= np.kron(K, identity) + np.kron(identity, K.T)
        L += 2.0 * np.kron(B, B.conj())
    return L


def rk4_propagator(L: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order Taylor propagator, identical to one classical RK4 step of a linear system."""
    step = dt * L
    P = np.eye(L.shape[0], dtype=complex)
    term = np.eye(L.shape[0], dtype=complex)
    for n in range(1, 5):
        term = term @ step / n
        P = P + term
    return P


class LindbladIntegrator:
    """RK4 on vec(rho) with recursive step halving when a step breaks the invariants."""

    def __init__(self, sys: OpenSystem, dt: float):
        if not dt > 0:
            raise ParameterError(f'dt must be > 0, got {dt}')
        self.sys = sys
        self.dt = dt
        self.L = liouvillian(sys)
        self.propagators: Dict[int, np.ndarray] = {}
        self.n_halvings = 0

    def propagator(self, depth: int) -> np.ndarray:
        if depth not in self.propagators:
            self.propagators[depth] = rk4_propagator(self.L, self.dt / 2 ** depth)
        return self.propagators[depth]

    def _try(self, rho: np.ndarray, depth: int) -> Optional[np.ndarray]:
        d = rho.shape[0]
        new = (self.propagator(depth) @ rho.reshape(-1)).reshape(d, d)
        new = 0.5 * (new + new.conj().T)
        trace = np.trace(new).real
        if abs(trace - np.trace(rho).real) > STEP_TRACE_TOL or np.linalg.eigvalsh(new)[0] < POSITIVITY_TOL:
            return None
        return new / trace

    def _advance(self, rho: np.ndarray, depth: int, t: float) -> np.ndarray:
        if (new := self._try(rho, depth)) is not None:
            return new
        if depth >= MAX_HALVINGS:
            raise NumericalError(f'integrator tolerance exceeded at t = {t} '
                                 f'(step {self.dt / 2 ** depth:.3g} after {depth} halvings)')
        if not self.n_halvings:
            log.warning(f'Lindblad step {self.dt} breaks trace or positivity near t = {t}; halving')
        self.n_halvings += 1
        half = self._advance(rho, depth + 1, t)
        return self._advance(half, depth + 1, t + self.dt / 2 ** (depth + 1))

    def step(self, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
        return self._advance(rho, 0, t)


def lindblad_trace(rho: DensityMatrix, sys: OpenSystem, dt: float, n_steps: int, record_every: int = 1,
                   progress_bar: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Times and density matrices (n_records, d, d), starting with rho."""
    sys.check_dim(rho.dim)
    integrator = LindbladIntegrator(sys, dt)
    current = rho.entries.copy()
    times, states = [0.0], [current.copy()]
    for n in tqdm(range(1, n_steps + 1), disable=not progress_bar, dynamic_ncols=True, desc='lindblad'):
        current = integrator.step(current, (n - 1) * dt)
        if n % record_every == 0 or n == n_steps:
            times.append(n * dt)
            states.append(current.copy())
    return np.array(times), np.array(states)


def lindblad_evolve(rho: DensityMatrix, sys: OpenSystem, dt: float, n_steps: int,
                    progress_bar: bool = False) -> DensityMatrix:
    _, states = lindblad_trace(rho, sys, dt, n_steps, record_every=max(1, n_steps), progress_bar=progress_bar)
    return DensityMatrix(states[-1])


@dataclass
class CoherenceFit:
    D_fit: float
    separations: np.ndarray         # u_I - u_F per fitted pair
    exponents: np.ndarray           # fitted d ln|rho_IF|/dt per pair
    r_squared: float                # worst pair
    quadratic_deviation: float      # max relative deviation of exponent/(D N du^2) from 1
    accepted: bool


def coherence_decay_fit(u, coupling: float, N: float, t_max: float, n_times: int = 21,
                        n_steps: int = 2000) -> CoherenceFit:
    """Position-coupled dephasing B = sqrt(coupling N) diag(u) on a uniform superposition;
    fits ln|rho(u_I, u_F, t)/rho(u_I, u_F, 0)| = -D N t (u_I - u_F)^2."""
    u = np.asarray(u, dtype=float)
    if len(u) < 2 or not (coupling > 0 and N > 0 and t_max > 0):
        raise ParameterError('coherence_decay_fit needs >= 2 positions and positive coupling, N, t_max')
    if n_steps % (n_times - 1):
        raise ParameterError(f'n_steps = {n_steps} must be a multiple of n_times - 1 = {n_times - 1}')
    sys = OpenSystem(H=np.zeros((len(u), len(u))), lindblad_ops=[math.sqrt(coupling * N) * np.diag(u)])
    rho0 = DensityMatrix.from_state(np.full(len(u), 1.0 / math.sqrt(len(u))))
    times, rhos = lindblad_trace(rho0, sys, t_max / n_steps, n_steps, record_every=n_steps // (n_times - 1))
    pairs = [(i, j) for i in range(len(u)) for j in range(i + 1, len(u)) if u[i] != u[j]]
    if not pairs:
        raise ParameterError('coherence_decay_fit needs at least two distinct positions')
    separations, exponents, r_squared = [], [], []
    for i, j in pairs:
        log_ratio = np.log(np.abs(rhos[:, i, j] / rhos[0, i, j]))
        fit = linregress(times, log_ratio)
        separations.append(u[i] - u[j])
        exponents.append(fit.slope)
        r_squared.append(fit.rvalue ** 2)
    separations, exponents = np.array(separations), np.array(exponents)
    squares = separations ** 2
    D_fit = float(-np.dot(exponents, squares) / (N * np.dot(squares, squares)))
    deviation = float(np.max(np.abs(-exponents / (D_fit * N * squares) - 1.0)))
    worst = float(min(r_squared))
    accepted = worst >= 0.99
    if not accepted:
        log.warning(f'coherence decay is not linear in t: worst R^2 = {worst:.4f} < 0.99')
    return CoherenceFit(D_fit=D_fit, separations=separations, exponents=exponents, r_squared=worst,
                        quadratic_deviation=deviation, accepted=accepted)


def collapse_time_string(inputs: CollapseInputs) -> float:
    """t_col = hbar M_gus/(E^2 N), in seconds."""
    return inputs.hbar_eV_s * inputs.M_gus_eV / (inputs.E_eV ** 2 * inputs.N)


def collapse_time_pointlike(inputs: CollapseInputs) -> float:
    """t = (1/N) (M_gus/m)^3 / (m^3 dx^2) in natural units, converted to seconds."""
    m, delta_x = inputs.pointlike_inputs()
    delta_x_natural = delta_x / inputs.hbar_c_eV_m      # 1/eV
    return inputs.hbar_eV_s * (inputs.M_gus_eV / m) ** 3 / (inputs.N * m ** 3 * delta_x_natural ** 2)


def pointlike_number_for_time(inputs: CollapseInputs, t_target: float) -> float:
    """N for which collapse_time_pointlike equals t_target."""
    if not t_target > 0:
        raise ParameterError(f't_target must be > 0, got {t_target}')
    return collapse_time_pointlike(inputs) * inputs.N / t_target


def collapse_time_generic(rate: float, N: float, t_s: float) -> float:
    """t = t_s/(N rate)."""
    if not (rate > 0 and N > 0 and t_s > 0):
        raise ParameterError('collapse_time_generic needs positive rate, N and t_s')
    return t_s / (N * rate)


def localization_time(inputs: CollapseInputs, K0: Optional[float] = None,
                      channel_probs: Optional[Sequence[float]] = None) -> float:
    """[K(0)/sum_k p_k (1 - p_k)] times the string collapse time; the bracket defaults to 1."""
    ratio = 1.0
    if channel_probs is not None:
        probs = np.asarray(channel_probs, dtype=float)
        if np.any(probs <= 0) or np.any(probs >= 1):
            raise ParameterError(f'channel probabilities must lie in (0, 1), got {probs.tolist()}')
        if K0 is None:
            K0 = float(np.sum(entr(probs)))
        ratio = K0 / float(np.sum(probs * (1.0 - probs)))
    elif K0 == 0:
        ratio = 0.0
    elif K0 is not None:
        raise ParameterError('K0 needs channel_probs to form the localization ratio')
    if K0 is not None and K0 < 0:
        raise ParameterError(f'K0 must be >= 0, got {K0}')
    return ratio * collapse_time_string(inputs)


def _ito_block(psi0: np.ndarray, H: np.ndarray, ops: np.ndarray, dt: float, n_steps: int,
               record_every: int, seeds: Sequence[int]) -> np.ndarray:
    n_ops = len(ops)
    # per-trajectory noise streams keep results independent of the block split
    noise = np.array([np.random.default_rng(seed).standard_normal((n_steps, n_ops, 2)) for seed in seeds])
    d_xi = math.sqrt(dt / 2.0) * (noise[..., 0] + 1j * noise[..., 1])     # E|d_xi|^2 = dt
    K = np.einsum('mji,mjk->ik', ops.conj(), ops)
    psi = np.tile(psi0, (len(seeds), 1))
    records = [psi.copy()]
    for n in range(n_steps):
        expect = np.einsum('ni,mij,nj->nm', psi.conj(), ops, psi)
        ops_psi = np.einsum('mij,nj->nmi', ops, psi)
        drift = -1j * psi @ H.T - 0.5 * psi @ K.T \
            + np.einsum('nm,nmi->ni', expect.conj(), ops_psi) \
            - 0.5 * np.sum(np.abs(expect) ** 2, axis=1)[:, None] * psi
        deterministic = psi + dt * drift
        drift_error = np.max(np.abs(np.linalg.norm(deterministic, axis=1) - 1.0))
        if drift_error > ITO_NORM_TOL:
            raise NumericalError(f'Ito step too large: norm drift {drift_error:.3g} > {ITO_NORM_TOL} '
                                 f'at step {n} (dt = {dt})')
        innovation = ops_psi - expect[:, :, None] * psi[:, None, :]
        psi = deterministic + np.einsum('nmi,nm->ni', innovation, d_xi[:, n, :])
        psi /= np.linalg.norm(psi, axis=1)[:, None]
        if (n + 1) % record_every == 0 or n + 1 == n_steps:
            records.append(psi.copy())
    return np.stack(records, axis=1)


def _record_times(dt: float, n_steps: int, record_every: int) -> np.ndarray:
    steps = [0] + [n for n in range(1, n_steps + 1) if n % record_every == 0 or n == n_steps]
    return dt * np.array(steps, dtype=float)


@dataclass
class ItoEnsemble:
    t: np.ndarray
    states: np.ndarray          # (n_trajectories, n_records, d)

    def density_matrices(self) -> np.ndarray:
        """Ensemble mean of |psi><psi| per recorded time, reduced in trajectory order."""
        return np.einsum('nti,ntj->tij', self.states, self.states.conj()) / len(self.states)


def _check_ito(psi0: StateVector, sys: OpenSystem, dt: float, n_steps: int, record_every: int):
    sys.check_dim(psi0.dim)
    if not (dt > 0 and n_steps >= 1 and record_every >= 1):
        raise ParameterError('Ito evolution needs dt > 0, n_steps >= 1 and record_every >= 1')


def ito_trajectory(psi0: StateVector, sys: OpenSystem, dt: float, n_steps: int, seed: int,
                   record_every: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Euler-Maruyama quantum-state-diffusion trajectory, renormalized every step.
    Returns recorded times and states (n_records, d)."""
    _check_ito(psi0, sys, dt, n_steps, record_every)
    states = _ito_block(psi0.amplitudes, sys.H, sys.unraveling_ops(), dt, n_steps, record_every, [seed])
    return _record_times(dt, n_steps, record_every), states[0]


def ito_ensemble(psi0: StateVector, sys: OpenSystem, dt: float, n_steps: int, n_trajectories: int, seed: int,
                 record_every: int = 1, progress_bar: bool = False) -> ItoEnsemble:
    """Trajectory i uses seed + i; blocks of trajectories run on the thread pool, in order."""
    _check_ito(psi0, sys, dt, n_steps, record_every)
    if n_trajectories < 1:
        raise ParameterError(f'n_trajectories must be >= 1, got {n_trajectories}')
    ops = sys.unraveling_ops()

    def run_block(block: range) -> np.ndarray:
        return _ito_block(psi0.amplitudes, sys.H, ops, dt, n_steps, record_every, [seed + i for i in block])

    blocks = ordered_map(run_block, block_ranges(n_trajectories, TRAJECTORY_BLOCK),
                         progress_bar=progress_bar, desc='trajectories')
    return ItoEnsemble(t=_record_times(dt, n_steps, record_every), states=np.concatenate(blocks, axis=0))


def dispersion_entropy(psi, channels: ChannelProjectors):
    """K = -sum_k <P_k> ln <P_k> (0 ln 0 = 0), for one state or a stack of states."""
    amplitudes = psi.amplitudes if isinstance(psi, StateVector) else psi
    probs = np.clip(channels.probabilities(amplitudes), 0.0, 1.0)
    return np.sum(entr(probs), axis=-1)


def entropy_series(ensemble: ItoEnsemble, channels: ChannelProjectors) -> Tuple[np.ndarray, np.ndarray]:
    """Ensemble mean and standard error of K at every recorded time."""
    K = dispersion_entropy(ensemble.states, channels)
    n = K.shape[0]
    stderr = K.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(K.shape[1])
    return K.mean(axis=0), stderr


@dataclass
class EntropyRateReport:
    lhs: float                  # finite-difference d<K>/dt over the first recorded interval
    lhs_stderr: float
    rhs: float                  # Ito rate of K at the first recorded time
    agree: bool
    non_increasing: bool
    excluded_channels: List[int]


def entropy_rate(psi: np.ndarray, channels: ChannelProjectors, sys: OpenSystem,
                 excluded: Sequence[int] = ()) -> np.ndarray:
    """Ito drift of K per state in the stack psi:
        dK/dt = -sum_k [(ln p_k + 1) f_k + (1/p_k) sum_j |<P_k L_j> - p_k <L_j>|^2]
    with p_k = <P_k>, f_k = sum_j <L_j^+ P_k L_j - {L_j^+ L_j, P_k}/2> the population drift and
    L_j = sqrt(2) B_j. f_k vanishes when every L_j is block diagonal in the channels; channels listed in
    excluded are skipped."""
    psi = np.atleast_2d(psi)
    ops = sys.unraveling_ops()
    probs = channels.probabilities(psi)
    expect_ops = np.einsum('ni,mij,nj->nm', psi.conj(), ops, psi)
    rate = np.zeros(len(psi))
    for k, p in enumerate(channels.projectors):
        if k in excluded:
            continue
        generator = sum((op.conj().T @ p @ op - 0.5 * (op.conj().T @ op @ p + p @ op.conj().T @ op) for op in ops),
                        np.zeros(p.shape, dtype=complex))
        flow = np.einsum('ni,ij,nj->n', psi.conj(), generator, psi).real
        projected = np.einsum('ni,mij,nj->nm', psi.conj(), p @ ops, psi)
        noise = np.sum(np.abs(projected - probs[:, k, None] * expect_ops) ** 2, axis=1)
        rate -= (np.log(probs[:, k]) + 1.0) * flow + noise / probs[:, k]
    return rate


def entropy_rate_check(ensemble: ItoEnsemble, channels: ChannelProjectors, sys: OpenSystem,
                       floor: float = 1e-8, tol: float = 1e-10) -> EntropyRateReport:
    """Compares the finite-difference ensemble entropy rate over the first recorded interval
    with the Ito rate (entropy_rate) averaged over the trajectories at the first recorded time."""
    for k, p in enumerate(channels.projectors):
        if np.max(np.abs(sys.H @ p - p @ sys.H)) > tol:
            raise ParameterError(f'H does not commute with channel projector {k} (H must be block diagonal)')
    for j, op in enumerate(sys.unraveling_ops()):
        if np.max(np.abs(sum(p @ op @ p for p in channels.projectors) - op)) > tol:
            log.warning(f'environment operator {j} couples different channels; channel populations drift '
                        f'and K need not decrease')
    if len(ensemble.t) < 2:
        raise ParameterError('entropy_rate_check needs at least two recorded times')

    psi = ensemble.states[:, 0, :]
    probs = channels.probabilities(psi)
    excluded = sorted({k for k in range(len(channels)) if np.any(probs[:, k] < floor)})
    if excluded:
        log.warning(f'channels {excluded} have <P_k> < {floor} and are left out of the rate')
    rhs_per_trajectory = entropy_rate(psi, channels, sys, excluded)
    K = dispersion_entropy(ensemble.states, channels)
    dt = ensemble.t[1] - ensemble.t[0]
    increments = (K[:, 1] - K[:, 0]) / dt
    n = len(K)
    lhs = float(increments.mean())
    lhs_stderr = float(increments.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    rhs = float(rhs_per_trajectory.mean())
    rhs_stderr = float(rhs_per_trajectory.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    combined = math.hypot(lhs_stderr, rhs_stderr)
    diffs = np.diff(K, axis=1)
    diff_stderr = diffs.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(diffs.shape[1])
    non_increasing = bool(np.all(diffs.mean(axis=0) <= 3.0 * diff_stderr + tol))
    return EntropyRateReport(lhs=lhs, lhs_stderr=lhs_stderr, rhs=rhs,
                             agree=abs(lhs - rhs) <= 3.0 * combined + tol,
                             non_increasing=non_increasing, excluded_channels=excluded)


@dataclass
class EnergyStatistics:
    mean: np.ndarray
    variance: np.ndarray
    mean_conserved: bool
    variance_non_increasing: bool


def energy_statistics(rhos, H, tol: float = 1e-8) -> EnergyStatistics:
    """Tr(rho H) and Tr(rho H^2) - Tr(rho H)^2 along a density-matrix trace."""
    rhos = np.asarray(rhos, dtype=complex)
    H = np.asarray(H, dtype=complex)
    mean = np.einsum('tij,ji->t', rhos, H).real
    variance = np.einsum('tij,ji->t', rhos, H @ H).real - mean ** 2
    return EnergyStatistics(mean=mean, variance=variance,
                            mean_conserved=bool(np.all(np.abs(np.diff(mean)) <= tol)),
                            variance_non_increasing=bool(np.all(np.diff(variance) <= tol)))
