import math

import numpy as np
import pytest

from mtsim import liouville
from mtsim.liouville import (CouplingState, FlowSpec, GridDistribution, RGKinkSpec, TelegraphRates)
from mtsim.util import NumericalError, ParameterError


def constant_Q(value: float):
    return lambda C: value


def test_deficit_normalizations():
    assert liouville.deficit_ctheorem(28.0) == pytest.approx(1.0)
    assert liouville.deficit_friction(31.0) == pytest.approx(1.0)
    with pytest.raises(NumericalError, match='subcritical'):
        liouville.deficit_ctheorem(24.9)


def test_flow_fixed_point():
    spec = FlowSpec.quadratic([1.0, 2.0])
    state = CouplingState(g=[0.0, 0.0], g_dot=[0.0, 0.0], C=25.0)
    new_state = liouville.flow_step(state, spec, 0.01)
    assert np.array_equal(new_state.g, state.g)
    assert np.array_equal(new_state.g_dot, state.g_dot)
    assert new_state.C == 25.0
    assert new_state.t == pytest.approx(0.01)


def test_flow_subcritical():
    spec = FlowSpec(central_charge=lambda g: 24.0, central_charge_gradient=lambda g: np.zeros(1),
                    metric_G=lambda g: np.eye(1))
    state = CouplingState(g=[0.1], g_dot=[0.0], C=25.0)
    with pytest.raises(NumericalError, match='subcritical'):
        liouville.flow_step(state, spec, 0.01)
    with pytest.raises(ParameterError):
        liouville.flow_step(state, spec, 0.0)


def test_flow_rejects_indefinite_metric():
    spec = FlowSpec(central_charge=lambda g: 26.0, central_charge_gradient=lambda g: np.zeros(1),
                    metric_G=lambda g: -np.eye(1))
    with pytest.raises(ParameterError, match='positive definite'):
        liouville.flow_trace([0.1], [0.0], spec, 0.01, 10)


def test_flow_damped_oscillator():
    # g'' + g'/2 + 2 g = 0, g(0) = 1, g'(0) = 0
    spec = FlowSpec.quadratic([1.0], Q_of_C=constant_Q(0.5))
    dt, n_steps = 0.01, 1000
    t, g, C, Q = liouville.flow_trace([1.0], [0.0], spec, dt, n_steps)
    omega = math.sqrt(2.0 - 1.0 / 16.0)
    expected = np.exp(-t / 4.0) * (np.cos(omega * t) + np.sin(omega * t) / (4.0 * omega))
    assert np.max(np.abs(g[:, 0] - expected)) < 1e-7
    assert np.allclose(C, 25.0 + g[:, 0] ** 2)
    # successive maxima of C fall: C settles at the fixed point
    peaks = [C[i] for i in range(1, len(C) - 1) if C[i] >= C[i - 1] and C[i] > C[i + 1]]
    assert len(peaks) >= 3
    assert all(later < earlier for earlier, later in zip(peaks, peaks[1:]))


def test_c_flow_check_on_overdamped_flow():
    spec = FlowSpec.quadratic([1.0], Q_of_C=constant_Q(6.0))
    dt = 0.01
    t, g, C, Q = liouville.flow_trace([1.0], [0.0], spec, dt, 1000)
    r1, r2 = -3.0 + math.sqrt(7.0), -3.0 - math.sqrt(7.0)
    expected = (r2 * np.exp(r1 * t) - r1 * np.exp(r2 * t)) / (r2 - r1)
    assert np.max(np.abs(g[:, 0] - expected)) < 1e-7
    assert liouville.c_flow_check(C, Q, dt, tol=1e-6)


def test_c_flow_check_controls():
    t = np.linspace(0.0, 1.0, 101)
    assert liouville.c_flow_check(np.full_like(t, 30.0), np.ones_like(t), t[1] - t[0])
    assert not liouville.c_flow_check(25.0 + t ** 2, np.zeros_like(t), t[1] - t[0])
    with pytest.raises(ParameterError, match='insufficient trace'):
        liouville.c_flow_check([26.0, 26.0], [1.0, 1.0], 0.1)


def test_rg_kink_values():
    spec = RGKinkSpec(a2=1.0, a4=-1.0)
    assert spec.u_wave == pytest.approx(-3.0)
    assert float(rg_value(spec, 0.0)) == pytest.approx(0.5)
    assert float(rg_value(spec, 60.0)) == pytest.approx(1.0)      # -a2/a4
    assert float(rg_value(spec, -60.0)) == pytest.approx(0.0, abs=1e-15)
    assert RGKinkSpec(a2=1.0, a4=-1.0, A3=2.0).u_wave == pytest.approx(-5.0)
    with pytest.raises(ParameterError):
        RGKinkSpec(a2=1.0, a4=0.0)


def rg_value(spec, x):
    return liouville.rg_kink(spec, x, 0.0)


def test_rg_kink_travels_at_u_wave():
    spec = RGKinkSpec(a2=0.7, a4=1.3, A3=0.4)
    x = np.linspace(-10.0, 10.0, 101)
    assert np.allclose(liouville.rg_kink(spec, x + 2.0 * spec.u_wave, 2.0), liouville.rg_kink(spec, x, 0.0))


@pytest.mark.parametrize('a2, a4', [(1.0, -1.0), (1.0, 1.0), (-0.5, 2.0), (2.0, 0.3)])
def test_rg_kink_solves_beta_equation(a2, a4):
    spec = RGKinkSpec(a2=a2, a4=a4)
    xi = np.linspace(-20.0, 20.0, 1000)
    assert liouville.rg_kink_residual(spec, xi) < 1e-8
    # independent check of the derivative on a fine grid
    fine = np.linspace(-5.0, 5.0, 20001)
    T = liouville.rg_kink(spec, fine, 0.0)
    assert np.max(np.abs(np.gradient(T, fine)[1:-1] - spec.R(T)[1:-1])) < 1e-5


def test_rg_kink_printed_sign():
    xi = np.linspace(-20.0, 20.0, 1000)
    # printed sign agrees with the working one only for a2 a4 < 0
    assert liouville.rg_kink_residual(RGKinkSpec(1.0, -1.0), xi, printed_sign=True) < 1e-8
    assert liouville.rg_kink_residual(RGKinkSpec(1.0, 1.0), xi, printed_sign=True) == pytest.approx(0.5, rel=1e-3)


def test_fokker_planck_pure_diffusion():
    grid = np.linspace(-10.0, 10.0, 401)
    dist = GridDistribution.gaussian(grid, 0.0, 1.0)
    D = 1.0 / (8.0 * math.pi ** 2)
    final = liouville.fokker_planck_evolve(dist, lambda lam: np.zeros_like(lam), lambda tau: 1.0, 0.05, 1000)
    assert final.tau == pytest.approx(50.0)
    assert final.mass() == pytest.approx(dist.mass(), abs=1e-6)
    assert final.variance() - dist.variance() == pytest.approx(2.0 * D * 50.0, rel=1e-3)
    assert np.all(final.P >= 0)


def test_fokker_planck_mass_conservation():
    grid = np.linspace(-5.0, 5.0, 201)
    dist = GridDistribution.gaussian(grid, 0.5, 1.0)
    final = liouville.fokker_planck_evolve(dist, lambda lam: lam, lambda tau: 1.0, 0.004, 10000)
    assert abs(final.mass() - 1.0) < 1e-6
    assert final.mean() == pytest.approx(0.0, abs=1e-2)


def test_fokker_planck_localization():
    grid = np.linspace(-5.0, 5.0, 201)
    dist = GridDistribution.gaussian(grid, 0.5, 1.0)
    initial_variance = dist.variance()
    variances = []
    for _ in range(6):
        dist = liouville.fokker_planck_evolve(dist, lambda lam: lam, lambda tau: math.exp(-tau), 0.004, 125)
        variances.append(dist.variance())
    assert variances[-1] < initial_variance / 10.0
    assert all(later < earlier for earlier, later in zip(variances, variances[1:]))
    assert abs(dist.mass() - 1.0) < 1e-6


def test_fokker_planck_frozen():
    grid = np.linspace(-1.0, 1.0, 41)
    P = np.zeros_like(grid)
    P[20] = 1.0 / 0.05
    dist = GridDistribution(grid, P)
    final = liouville.fokker_planck_evolve(dist, lambda lam: np.zeros_like(lam), lambda tau: 0.0, 0.1, 100)
    assert np.array_equal(final.P, P)


def test_fokker_planck_step_bound():
    grid = np.linspace(-1.0, 1.0, 41)
    dist = GridDistribution.gaussian(grid, 0.0, 0.3)
    with pytest.raises(ParameterError, match='stability bound'):
        liouville.fokker_planck_evolve(dist, lambda lam: lam, lambda tau: 2.0, 0.5, 10)


def test_growth_constant_Q():
    series = liouville.growth_density(1.0, 1.0, 1.0, lambda t: 2.0, 0.01, 100)
    assert np.allclose(series.rate, 6.0)
    assert series.delta[-1] == pytest.approx(math.exp(6.0), rel=1e-8)
    assert series.crossover_time is None
    still = liouville.growth_density(2.5, 1.0, 1.0, lambda t: 0.0, 0.01, 100)
    assert np.allclose(still.delta, 2.5)


def test_growth_crossover():
    series = liouville.growth_density(1.0, 1.0, 1.0, lambda t: 3.0 * math.exp(-t), 0.01, 300)
    assert series.sign_changes == 1
    assert series.crossover_time == pytest.approx(math.log(3.0), abs=1e-9)
    peak = int(np.argmax(series.delta))
    assert series.t[peak] == pytest.approx(math.log(3.0), abs=0.01)
    with pytest.raises(ParameterError):
        liouville.growth_density(1.0, 0.0, 1.0, lambda t: 1.0, 0.01, 10)


def test_telegraph_drift():
    assert liouville.telegraph_drift(TelegraphRates(1.0, 1.0, 1.0, 1.0)) == 0.0
    assert liouville.telegraph_drift(TelegraphRates(1.0, 2.0, 1.0, 1.0)) == pytest.approx(-0.5)
    assert liouville.telegraph_drift(TelegraphRates(3.0, 1.0, 1.0, 2.0)) == pytest.approx(5.0 / 3.0)
    with pytest.raises(ParameterError, match='negative'):
        TelegraphRates(1.0, -1.0, 1.0, 1.0)


def test_sawtooth_mean_matches_drift():
    rates = TelegraphRates(v_plus=1.0, v_minus=2.0, k_cat=1.0, k_res=1.0)
    result = liouville.sawtooth_series(rates, 10.0, 51, 10000, seed=7, reflecting_floor=False)
    assert result.lengths.shape == (10000, 51)
    assert result.bounded
    expected = result.drift * result.t[-1]
    assert abs(result.mean[-1] - expected) < 3.0 * result.stderr[-1]


def test_sawtooth_regimes():
    bounded = liouville.sawtooth_series(TelegraphRates(1.0, 2.0, 1.0, 1.0), 20.0, 41, 200, seed=1)
    assert bounded.bounded
    assert np.all(bounded.lengths >= 0.0)
    unbounded = liouville.sawtooth_series(TelegraphRates(2.0, 1.0, 1.0, 1.0), 20.0, 41, 200, seed=1)
    assert not unbounded.bounded
    assert unbounded.mean[-1] > unbounded.mean[0]


def test_sawtooth_independent_of_thread_count(monkeypatch):
    rates = TelegraphRates(1.0, 1.5, 0.5, 1.0)
    monkeypatch.setenv('MTSIM_THREADS', '1')
    single = liouville.sawtooth_series(rates, 5.0, 11, 600, seed=3)
    monkeypatch.setenv('MTSIM_THREADS', '8')
    multi = liouville.sawtooth_series(rates, 5.0, 11, 600, seed=3)
    assert np.array_equal(single.lengths, multi.lengths)
    assert np.array_equal(single.mean, multi.mean)


def test_selection_rules_examples():
    assert liouville.selection_rules(3, 0.0, 1.5).satisfied
    assert liouville.selection_rules(5, 0.0, 3.0).j_min == 0.0
    assert not liouville.selection_rules(4, 1.0 + 1e-8, 3.0).equality_ok
    assert liouville.kinematic_sums(4) == pytest.approx((math.sqrt(2.0), -math.sqrt(2.0)))
    with pytest.raises(ParameterError):
        liouville.selection_rules(2, 0.0, 0.0)


def test_selection_rules_scan():
    for N in range(3, 9):
        for m in np.arange(-6.0, 6.5, 0.5):
            j = m / 3.0 - 1.0 + 0.5 * (N - 2)
            report = liouville.selection_rules(N, j, m)
            assert report.equality_ok
            assert report.satisfied == liouville.selection_rules_satisfiable(N, m)
            assert report.satisfied == (m >= 0.75 * (3 - N))


def test_level_shifts():
    assert liouville.instanton_k_shift(3.0, 0.0) == 3.0
    assert liouville.instanton_k_shift(3.0, 0.01) == pytest.approx(3.0 - 2.0 * math.pi * 9.0 * 0.01)
    assert liouville.k_renormalized(3.0, 5.0, 0.0, 1.0) == 3.0
    assert liouville.k_renormalized(3.0, 1.0, 0.7, 2.0) == 3.0
    assert liouville.k_renormalized(3.0, 4.0, 0.5, 1.0) == pytest.approx(6.0)
    with pytest.raises(ParameterError, match='ADM mass singular'):
        liouville.instanton_k_shift(2.0, 0.1)
    with pytest.raises(ParameterError):
        liouville.k_renormalized(3.0, 0.0, 0.5, 1.0)


def test_adm_mass_decreases_along_increasing_level():
    k_trace = np.linspace(2.5, 100.0, 50)
    masses = liouville.adm_mass_flow(k_trace, 0.3)
    assert np.all(masses > 0)
    assert np.all(np.diff(masses) < 0)
    assert masses[-1] < masses[0] / 10.0
