import math

import numpy as np
import pytest

from mtsim import kink, tdva
from mtsim.kink import MTParams
from mtsim.tdva import QuarticPotential, SqueezedState
from mtsim.util import NumericalError, ParameterError

POT = QuarticPotential(A=1.0, B=1.0)
M_WELL = math.sqrt(2.0)


def lattice(N: int, dx: float) -> np.ndarray:
    return (np.arange(N) - 0.5 * (N - 1)) * dx


def vacuum_at_well(N: int = 32, dx: float = 0.5):
    grid = lattice(N, dx)
    kernel = tdva.free_two_point(N, dx, M_WELL)
    state = SqueezedState.vacuum(grid, np.full(N, POT.well), np.zeros(N), kernel)
    return state, kernel


def test_potential_validation():
    with pytest.raises(ParameterError):
        QuarticPotential(A=1.0, B=0.0)
    assert POT.well == 1.0
    assert POT.well_curvature == 2.0


def test_smearing_identities():
    z = np.linspace(-2.0, 2.0, 9)
    for n in range(4):
        assert np.allclose(tdva.smeared_derivative(POT, n, z, 0.0), POT.polynomial.deriv(n)(z) if n
                           else POT.polynomial(z))
    pot = QuarticPotential(A=0.7, B=1.3)
    w = 0.3
    closed = -0.35 * z ** 2 + 1.3 / 4 * z ** 4 + w * (-0.7 + 3 * 1.3 * z ** 2) + 3 * 1.3 * w ** 2
    assert np.allclose(tdva.smeared_derivative(pot, 0, z, w), closed)
    h = 1e-5
    dM0 = (tdva.smeared_derivative(pot, 0, z + h, w) - tdva.smeared_derivative(pot, 0, z - h, w)) / (2 * h)
    assert np.allclose(tdva.smeared_derivative(pot, 1, z, w), dM0, atol=1e-8)
    dM0_dw = (tdva.smeared_derivative(pot, 0, z, w + h) - tdva.smeared_derivative(pot, 0, z, w - h)) / (2 * h)
    assert np.allclose(tdva.smeared_derivative(pot, 2, z, w), dM0_dw, atol=1e-8)


def test_free_two_point_matches_matrix_square_root():
    N, dx, m = 12, 0.3, 0.8
    kernel = tdva.free_two_point(N, dx, m)
    evals, evecs = np.linalg.eigh(m ** 2 * np.eye(N) - kernel.laplacian)
    expected = 0.5 * evecs @ np.diag(evals ** -0.5) @ evecs.T
    assert np.allclose(kernel.G0, expected, atol=1e-12)
    assert tdva.free_two_point(1, 1.0, 2.0).G0[0, 0] == pytest.approx(0.25)


def test_free_two_point_is_circulant_and_positive():
    rng = np.random.default_rng(11)
    for _ in range(5):
        N, dx, m = int(rng.integers(3, 20)), float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.1, 3.0))
        G0 = tdva.free_two_point(N, dx, m).G0
        for shift in range(1, N):
            assert np.allclose(np.roll(np.roll(G0, shift, axis=0), shift, axis=1), G0, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(G0)) > 0


def test_free_two_point_needs_mass():
    with pytest.raises(ParameterError, match='infrared-divergent'):
        tdva.free_two_point(8, 0.5, 0.0)


def test_state_validation():
    state, kernel = vacuum_at_well(8)
    with pytest.raises(ParameterError, match='positive definite'):
        SqueezedState(state.grid_x, state.C, state.D, -kernel.G0, state.Pi)
    asym = state.Pi.copy()
    asym[0, 1] = 1.0
    with pytest.raises(ParameterError, match='symmetric'):
        SqueezedState(state.grid_x, state.C, state.D, state.G, asym)
    with pytest.raises(ParameterError, match='uniform'):
        SqueezedState(state.grid_x ** 3, state.C, state.D, state.G, state.Pi)


def test_vacuum_energy_at_well():
    state, kernel = vacuum_at_well(32)
    assert tdva.quantum_energy(state, POT, kernel) == pytest.approx(-8.0, abs=1e-10)


def test_vacuum_at_well_is_stationary():
    state, kernel = vacuum_at_well(16)
    trace = tdva.tdva_evolve(state, POT, kernel, 0.01, 100)
    assert np.max(np.abs(trace.final.C - POT.well)) < 1e-10
    assert np.max(np.abs(trace.final.G - kernel.G0)) < 1e-10
    assert np.max(np.abs(trace.w)) < 1e-10


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    N, dx = 8, 0.5
    kernel = tdva.free_two_point(N, dx, M_WELL)
    perturbation = 0.01 * rng.standard_normal((N, N))
    state = SqueezedState(lattice(N, dx), tdva.kink_mean_field(lattice(N, dx), POT) + 0.05 * rng.standard_normal(N),
                          0.1 * rng.standard_normal(N), kernel.G0 + perturbation @ perturbation.T,
                          0.02 * (perturbation + perturbation.T))
    dH_dC, dH_dD, dH_dG, dH_dPi = tdva.hamilton_gradients(state, POT, kernel)
    h = 1e-6

    def energy(**changes):
        fields = dict(C=state.C, D=state.D, G=state.G, Pi=state.Pi)
        fields.update(changes)
        return tdva.quantum_energy(SqueezedState(state.grid_x, **fields), POT, kernel)

    for i in range(N):
        e = np.zeros(N)
        e[i] = h
        assert (energy(C=state.C + e) - energy(C=state.C - e)) / (2 * h) == pytest.approx(dH_dC[i], abs=1e-6)
        assert (energy(D=state.D + e) - energy(D=state.D - e)) / (2 * h) == pytest.approx(dH_dD[i], abs=1e-6)
    for i, j in [(0, 0), (3, 3), (1, 2), (0, 7), (4, 5)]:
        E = np.zeros((N, N))
        E[i, j] = E[j, i] = h
        weight = 1.0 if i == j else 2.0
        dG = (energy(G=state.G + E) - energy(G=state.G - E)) / (2 * h)
        dPi = (energy(Pi=state.Pi + E) - energy(Pi=state.Pi - E)) / (2 * h)
        assert dG == pytest.approx(weight * dH_dG[i, j], abs=1e-6)
        assert dPi == pytest.approx(weight * dH_dPi[i, j], abs=1e-6)


def test_energy_is_permutation_invariant_for_uniform_mean_field():
    rng = np.random.default_rng(3)
    state, kernel = vacuum_at_well(10)
    bump = 0.02 * rng.standard_normal((10, 10))
    G = kernel.G0 + bump @ bump.T
    shifted = np.roll(np.roll(G, 3, axis=0), 3, axis=1)
    one = tdva.quantum_energy(SqueezedState(state.grid_x, state.C, state.D, G, state.Pi), POT, kernel)
    two = tdva.quantum_energy(SqueezedState(state.grid_x, state.C, state.D, shifted, state.Pi), POT, kernel)
    assert one == pytest.approx(two, rel=1e-12)


def test_frozen_mode_reproduces_classical_evolution():
    N, dx, dt, n_steps = 64, 0.04, 0.01, 200
    grid = lattice(N, dx)
    params = MTParams(M=1.0, A=1.0, B=1.0, k=1.0, R0=1.0)
    start = kink.kink_state(params, grid, v=0.2)
    classical = kink.evolve_pde(start, params, dt, n_steps)
    kernel = tdva.free_two_point(N, dx, M_WELL)
    state = SqueezedState.vacuum(grid, start.u, start.u_dot, kernel)
    trace = tdva.tdva_evolve(state, POT, kernel, dt, n_steps, frozen_G=True, record_every=50)
    assert np.max(np.abs(trace.final.C - classical.u)) < 1e-6
    assert np.allclose(trace.final.G, kernel.G0)
    assert len(trace.t) == 5


def test_energy_conservation_with_fluctuations():
    N, dx = 32, 0.5
    grid = lattice(N, dx)
    kernel = tdva.free_two_point(N, dx, M_WELL)
    state = SqueezedState.vacuum(grid, tdva.kink_mean_field(grid, POT), np.zeros(N), kernel)
    trace = tdva.tdva_evolve(state, POT, kernel, 0.01, 1000, record_every=100)
    drift = np.max(np.abs(trace.energy - trace.energy[0]))
    assert drift < 1e-3 * abs(trace.energy[0])
    assert np.max(np.abs(trace.w[-1])) > 0


def test_step_limit():
    state, kernel = vacuum_at_well(16, 0.5)
    with pytest.raises(ParameterError, match='CFL'):
        tdva.tdva_step(state, POT, kernel, 0.3)
    other = tdva.free_two_point(16, 0.25, M_WELL)
    with pytest.raises(ParameterError, match='does not match'):
        tdva.tdva_step(state, POT, other, 0.01)


def test_ansatz_breakdown_is_reported():
    state, kernel = vacuum_at_well(8)
    squeezed = SqueezedState(state.grid_x, state.C, state.D, state.G, -40.0 * np.eye(8))
    with pytest.raises(NumericalError, match='Gaussian ansatz breakdown'):
        tdva.tdva_evolve(squeezed, POT, kernel, 0.1, 200)


def test_residual_spatial_convergence():
    def residual(dx):
        grid = np.arange(-8.0, 8.0 + dx / 2, dx)
        C = tdva.kink_mean_field(grid, POT)
        return tdva.modified_soliton_residual(np.stack([C, C, C]), None, POT, 0.1, dx)

    assert residual(0.2) / residual(0.1) == pytest.approx(4.0, rel=0.1)


def test_residual_time_convergence():
    dx, t_end = 0.05, 1.0
    grid = np.arange(-6.0, 6.0 + dx / 2, dx)
    params = MTParams(M=1.0, A=1.0, B=1.0, k=1.0, R0=1.0)
    start = kink.kink_state(params, grid, v=0.5)
    kernel = tdva.free_two_point(len(grid), dx, M_WELL)

    def residual(dt):
        state = SqueezedState.vacuum(grid, start.u, start.u_dot, kernel)
        trace = tdva.tdva_evolve(state, POT, kernel, dt, int(round(t_end / dt)), frozen_G=True)
        return tdva.modified_soliton_residual(trace.C, trace.w, POT, dt, dx)

    assert residual(0.01) / residual(0.005) == pytest.approx(4.0, rel=0.15)


def test_classical_step_leaves_fluctuations_alone():
    grid = lattice(16, 0.25)
    kernel = tdva.free_two_point(16, 0.25, M_WELL)
    state = SqueezedState.vacuum(grid, tdva.kink_mean_field(grid, POT, x0=0.3), np.zeros(16), kernel)
    one = tdva.classical_step(state, POT, kernel, 0.01)
    two = tdva.tdva_step(state, POT, kernel, 0.01, frozen_G=True)
    assert np.array_equal(one.C, two.C)
    assert np.array_equal(one.G, state.G)


def test_trace_residual_matches_explicit_call():
    grid = lattice(24, 0.25)
    kernel = tdva.free_two_point(24, 0.25, M_WELL)
    state = SqueezedState.vacuum(grid, tdva.kink_mean_field(grid, POT), np.zeros(24), kernel)
    trace = tdva.tdva_evolve(state, POT, kernel, 0.02, 20)
    expected = tdva.modified_soliton_residual(trace.C, trace.w, POT, 0.02, 0.25)
    assert tdva.trace_residual(trace, POT, kernel) == pytest.approx(expected)
    sparse = tdva.tdva_evolve(state, POT, kernel, 0.02, 20, record_every=8)
    with pytest.raises(ParameterError, match='uniform'):
        tdva.trace_residual(sparse, POT, kernel)


def test_kink_initial_state():
    grid = lattice(40, 0.2)
    kernel = tdva.free_two_point(40, 0.2, M_WELL)
    static = tdva.kink_initial_state(grid, POT, kernel, x0=0.5)
    assert np.allclose(static.C, tdva.kink_mean_field(grid, POT, x0=0.5))
    assert np.all(static.D == 0)
    moving = tdva.kink_initial_state(grid, POT, kernel, v=0.6)
    gamma = 1.0 / math.sqrt(1.0 - 0.36)
    assert np.allclose(moving.C, np.tanh(gamma * grid / math.sqrt(2.0)))
    assert np.allclose(moving.D, -0.6 * np.gradient(moving.C, grid), atol=2e-2)
    with pytest.raises(ParameterError):
        tdva.kink_initial_state(grid, POT, kernel, v=1.0)


def test_residual_needs_three_times():
    with pytest.raises(ParameterError):
        tdva.modified_soliton_residual(np.zeros((2, 5)), None, POT, 0.1, 0.1)
