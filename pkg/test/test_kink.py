import math

import numpy as np
import pytest

from mtsim import kink
from mtsim.kink import FieldState, KinkRoots, MTParams
from mtsim.util import EV_IN_J, ParameterError

UNIT = dict(M=1.0, A=1.0, B=1.0, k=1.0, R0=1.0)


def unit_params(**kwargs) -> MTParams:
    return MTParams(**{**UNIT, **kwargs})


def test_temperature_coefficient():
    assert kink.temperature_coefficient(300.0, 300.0, 2.0) == 0.0
    assert kink.temperature_coefficient(290.0, 300.0, 2.0) == pytest.approx(20.0)
    assert kink.temperature_coefficient(310.0, 300.0, 2.0) == pytest.approx(-20.0)
    with pytest.raises(ParameterError):
        kink.temperature_coefficient(290.0, 300.0, 0.0)


def test_at_temperature():
    params = unit_params(Tc=300.0, temper_const=0.5).at_temperature(280.0)
    assert params.A == pytest.approx(10.0)
    assert params.T == 280.0


def test_params_invariants():
    with pytest.raises(ParameterError):
        unit_params(B=0.0)
    with pytest.raises(ParameterError):
        unit_params(gamma=-1.0)


def test_reduce_trivial_limits():
    dp = kink.reduce(unit_params(gamma=0.0, E=0.3), 0.5)
    assert dp.rho == 0.0
    assert dp.gamma_vs == 0.0
    assert dp.vs_squared == -math.inf
    assert kink.reduce(unit_params(gamma=0.2, E=0.0), 0.5).sigma == 0.0


def test_reduce_errors():
    with pytest.raises(ParameterError, match='no double well'):
        kink.reduce(unit_params(A=-1.0), 0.1)
    with pytest.raises(ParameterError, match='supersonic'):
        kink.reduce(unit_params(), 1.0)


def test_reduce_realistic():
    params = kink.microtubule_parameters()
    assert params.v0 == pytest.approx(1000.0)
    dp = kink.reduce(params, 2.0)
    assert math.isfinite(dp.alpha) and dp.alpha > 0
    assert dp.rho > 0
    assert dp.sigma == pytest.approx(0.0242, rel=0.01)


def test_solve_cubic_symmetric():
    roots = kink.solve_cubic(0.0)
    assert (roots.a, roots.d, roots.b) == pytest.approx((-1.0, 0.0, 1.0), abs=1e-12)


def test_solve_cubic_degenerate_rejected():
    with pytest.raises(ParameterError, match='fewer than 3 real roots'):
        kink.solve_cubic(2.0 / (3.0 * math.sqrt(3.0)))
    with pytest.raises(ParameterError):
        kink.solve_cubic(-0.5)


def test_solve_cubic_companion_oracle():
    roots = kink.solve_cubic(0.1)
    expected = np.sort(np.roots([1.0, 0.0, -1.0, -0.1]).real)
    assert (roots.a, roots.d, roots.b) == pytest.approx(tuple(expected), abs=1e-12)


def test_root_identities():
    rng = np.random.default_rng(7)
    for sigma in rng.uniform(-0.38, 0.38, 200):
        r = kink.solve_cubic(float(sigma))
        assert r.a <= r.d <= r.b
        assert abs(r.a + r.b + r.d) < 1e-12
        assert abs(r.a * r.b + r.a * r.d + r.b * r.d + 1.0) < 1e-12
        assert abs(r.a * r.b * r.d - sigma) < 1e-12 * max(1.0, abs(sigma))


def test_kink_profile_symmetric():
    roots = kink.solve_cubic(0.0)
    assert kink.kink_profile(0.0, roots) == pytest.approx(0.0, abs=1e-12)
    xi = np.linspace(-20.0, 20.0, 401)
    assert np.max(np.abs(kink.kink_profile(xi, roots) + np.tanh(xi / math.sqrt(2.0)))) < 1e-12


def test_kink_profile_limits_and_monotone():
    roots = kink.solve_cubic(0.2)
    assert kink.kink_profile(1e3, roots) == pytest.approx(roots.a, abs=1e-12)
    assert kink.kink_profile(-1e3, roots) == pytest.approx(roots.b, abs=1e-12)
    psi = kink.kink_profile(np.linspace(-30.0, 30.0, 1001), roots)
    assert np.all(np.diff(psi) <= 0)


def test_profile_rows_tanh():
    rows = kink.profile_rows(kink.solve_cubic(0.0), [-1.0, 0.0, 2.0])
    assert [xi for xi, _ in rows] == [-1.0, 0.0, 2.0]
    assert [psi for _, psi in rows] == pytest.approx([-math.tanh(x / math.sqrt(2.0)) for x in (-1.0, 0.0, 2.0)])


def test_residual_ode_phi4():
    roots = kink.solve_cubic(0.0)
    assert kink.residual_ode(roots, 0.0, 0.0, np.linspace(-15.0, 15.0, 301)) < 1e-10


def test_residual_ode_random_sigma():
    rng = np.random.default_rng(11)
    xi = np.linspace(-25.0, 25.0, 501)
    for sigma in rng.uniform(-0.3, 0.3, 50):
        roots = kink.solve_cubic(float(sigma))
        assert kink.residual_ode(roots, roots.rho, float(sigma), xi) < 1e-8
        assert kink.residual_ode(roots, roots.rho + 0.05, float(sigma), xi) > 1e-3


def test_residual_ode_negative_control():
    roots = kink.solve_cubic(0.1)
    xi = np.linspace(-20.0, 20.0, 401)
    assert kink.residual_ode(roots, roots.rho, 0.1, xi) < 1e-8
    assert kink.residual_ode(roots, 0.5, 0.1, xi) > 1e-3


def test_kink_velocity_frictionless():
    params = unit_params(gamma=0.0, E=0.1)
    assert kink.kink_velocity(params, kink.solve_cubic(0.1)) == params.v0


def test_kink_velocity_needs_forcing():
    with pytest.raises(ParameterError, match='sigma = 0'):
        kink.kink_velocity(unit_params(gamma=0.1), KinkRoots(a=-1.0, d=0.0, b=1.0))


def test_kink_velocity_realistic():
    params = kink.microtubule_parameters()
    roots = kink.solve_cubic(kink.reduce(params, 0.0).sigma)
    assert 1.5 < kink.kink_velocity(params, roots) < 2.5


def test_velocity_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        M, A, k, R0 = (10 ** rng.uniform(-1.0, 1.0) for _ in range(4))
        sigma = rng.choice([-1.0, 1.0]) * rng.uniform(0.01, 0.35)
        roots = kink.solve_cubic(float(sigma))
        X = 10 ** rng.uniform(-1.0, 4.0)
        gamma = math.sqrt(X * 9.0 * roots.d ** 2 * M * A / 2.0)
        params = MTParams(M=M, A=A, B=1.0, k=k, R0=R0, gamma=gamma)
        v = kink.kink_velocity(params, roots)
        assert 0 < v < params.v0
        assert abs(kink.reduce(params, v).rho - 3.0 * abs(roots.d) / math.sqrt(2.0)) < 1e-10


def test_transfer_time():
    assert kink.transfer_time(1e-6, 2.0) == 5e-7
    assert kink.transfer_time(2e-6, 2.0) == pytest.approx(1e-6)
    with pytest.raises(ParameterError):
        kink.transfer_time(0.0, 2.0)


def test_kink_energetics_realistic():
    params = kink.microtubule_parameters()
    en = kink.kink_energetics(params, 2.0)
    assert 0.5 < en.binding_plus_resonant / EV_IN_J < 2.0
    assert 2e-27 < en.effective_mass < 1e-26
    assert en.total_energy == pytest.approx(en.binding_plus_resonant + 0.5 * en.effective_mass * 4.0)


def test_kink_energetics_at_rest():
    en = kink.kink_energetics(unit_params(), 0.0)
    assert en.total_energy == en.binding_plus_resonant
    assert en.binding_plus_resonant == pytest.approx(math.sqrt(2.0))


def test_central_charges():
    assert kink.central_charges(0.0) == (1.0, 25.0)
    rng = np.random.default_rng(5)
    for vs2 in rng.uniform(-50.0, 0.999, 1000):
        c_t, c_x = kink.central_charges(float(vs2))
        assert c_t + c_x == pytest.approx(26.0, abs=1e-9)
    with pytest.raises(ParameterError, match='null boost'):
        kink.central_charges(1.0)


def test_wick_matter_central_charge():
    for vs2 in (0.0, -0.5, -3.0, -1e6):
        c = kink.wick_matter_central_charge(vs2)
        assert 1.0 <= c <= 25.0
        assert c == pytest.approx(kink.central_charges(vs2)[0])


def test_friction_to_deficit_and_reality():
    assert kink.friction_to_deficit(2.0) == 1.0
    assert kink.friction_to_deficit(0.0) == 0.0
    assert kink.reality_check(1.0)
    assert not kink.reality_check(0.9)
    assert kink.reality_check(math.sqrt(8.0 / 9.0))
    assert not kink.reality_check(math.sqrt(8.0 / 9.0 - 1e-9))


def test_boost_velocity_matches_reality_check():
    for d in (0.5, 0.9, 0.95, 1.0, 1.5):
        rho = 3.0 * d / math.sqrt(2.0)
        assert (kink.boost_velocity_squared(rho) >= -1e-12) == kink.reality_check(d)


def test_boost_coordinates_and_dilaton():
    x, t = kink.boost_coordinates(1.0, 0.0, 0.6)
    assert x == pytest.approx(1.25)
    assert t == pytest.approx(-0.75)
    assert kink.linear_dilaton(2.0, 0.5) == -1.0


def test_string_length():
    base = kink.string_length(1e-68, 1e3)
    assert kink.string_length(2e-68, 1e3) == pytest.approx(math.sqrt(2.0) * base)
    assert base == pytest.approx(math.sqrt(1.054571817e-34 * 1e-68) / 1e3)


def dimensionless_kink(params: MTParams, v: float, half_width: float = 10.0, dx: float = 0.04) -> FieldState:
    x = np.linspace(-half_width, half_width, int(round(2 * half_width / dx)) + 1)
    return kink.kink_state(params, x, v=v)


def test_stationary_fixed_point():
    params = unit_params()
    x = np.linspace(-5.0, 5.0, 251)
    state = FieldState(grid_x=x, u=np.ones_like(x), u_dot=np.zeros_like(x))
    out = kink.evolve_pde(state, params, 0.01, 500)
    assert np.max(np.abs(out.u - 1.0)) < 1e-10
    assert out.t == pytest.approx(5.0)


def test_cfl_violation_rejected():
    params = unit_params()
    state = dimensionless_kink(params, 0.0)
    with pytest.raises(ParameterError, match='CFL'):
        kink.evolve_pde(state, params, 0.05, 1)


def test_coarse_grid_rejected():
    params = unit_params()
    x = np.linspace(-5.0, 5.0, 51)
    state = FieldState(grid_x=x, u=np.tanh(x), u_dot=np.zeros_like(x))
    with pytest.raises(ParameterError, match='too coarse'):
        kink.evolve_pde(state, params, 0.01, 1)


def test_energy_conserved_without_friction():
    params = unit_params()
    state = dimensionless_kink(params, 0.05)
    e0 = kink.field_energy(state, params)
    out = kink.evolve_pde(state, params, 0.01, 10000)
    assert abs(kink.field_energy(out, params) - e0) < 1e-3 * abs(e0)


def test_energy_non_increasing_with_friction():
    params = unit_params(gamma=0.1)
    state = dimensionless_kink(unit_params(), 0.2)
    energies = [kink.field_energy(state, params)]
    for _ in range(20):
        state = kink.evolve_pde(state, params, 0.01, 100)
        energies.append(kink.field_energy(state, params))
    assert all(e1 <= e0 + 1e-10 * abs(e0) for e0, e1 in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]


def test_damped_perturbation_envelope():
    params = unit_params(gamma=0.2)
    x = np.linspace(-10.0, 10.0, 501)
    eps = 1e-3
    u = 1.0 + eps * np.sin(math.pi * (x + 10.0) / 20.0)
    state = FieldState(grid_x=x, u=u, u_dot=np.zeros_like(x))
    omega = math.sqrt(2.0 + (math.pi / 20.0) ** 2 - 0.01)
    block = int(round(2 * math.pi / omega / 0.01))
    maxima = []
    for _ in range(5):
        peak = 0.0
        for _ in range(block // 10):
            state = kink.evolve_pde(state, params, 0.01, 10)
            peak = max(peak, float(np.max(np.abs(state.u - 1.0))))
        maxima.append(peak)
    assert all(m1 < m0 for m0, m1 in zip(maxima, maxima[1:]))
    expected = math.exp(-0.1 * 4 * 2 * math.pi / omega)
    assert maxima[-1] / maxima[0] == pytest.approx(expected, rel=0.1)


def test_comoving_drift_zero_at_start():
    params = kink.microtubule_parameters()
    x = np.linspace(0.0, 8e-6, 512)
    state = kink.kink_state(params, x, x0=3.5e-6)
    v = kink.kink_velocity(params, kink.solve_cubic(kink.reduce(params, 0.0).sigma))
    assert kink.comoving_drift(state, params, v, x0=3.5e-6) < 1e-12


@pytest.mark.slow
def test_travelling_kink_transport():
    params = kink.microtubule_parameters()
    roots = kink.solve_cubic(kink.reduce(params, 0.0).sigma)
    v = kink.kink_velocity(params, roots)
    x = np.linspace(0.0, 8e-6, 512)
    state = kink.kink_state(params, x, v=v, x0=3.5e-6)
    t_transfer = kink.transfer_time(1e-6, v)
    dt = 0.9 * kink.cfl_limit(params, state.dx)
    n_steps = int(math.ceil(t_transfer / dt))
    out = kink.evolve_pde(state, params, t_transfer / n_steps, n_steps)
    assert out.t == pytest.approx(t_transfer)
    assert kink.comoving_drift(out, params, v, x0=3.5e-6) < 0.01
