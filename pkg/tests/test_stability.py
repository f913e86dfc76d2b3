import math

import numpy as np
import pytest

from src.errors import ParameterError
from src.model import ModelParams, equilibrium
from src.stability import (
    SearchBox, characteristic_residual, chart_boundary_a, chart_margin, critical_kappa,
    delay_phase_margin, eigenvalue_sensitivity, hopf_frequency, is_stable,
    rightmost_root_scan, stability_margin, sufficient_condition, track_root,
    unstable_phase_interval,
)


def random_params(rng, n):
    sets = []
    for _ in range(n):
        b = 0.0 if rng.random() < 0.2 else float(10 ** rng.uniform(-3, 0.3))
        tau1, tau2 = rng.uniform(1.0, 100.0, size=2)
        sets.append(ModelParams(a=float(rng.uniform(0.2, 3.0)), b=b,
                                gamma=float(rng.uniform(0.8, 1.0)),
                                tau1=float(tau1), tau2=float(tau2)))
    return sets


@pytest.mark.parametrize("a, b, tau1, tau2", [
    (2.16, 0.0222, 10, 70),
    (0.87, 0.0222, 10, 15),
    (1.17, 0.736, 10, 20),
])
def test_critical_kappa_of_worked_examples(a, b, tau1, tau2):
    params = ModelParams(a=a, b=b, capacity=100, tau1=tau1, tau2=tau2)
    assert critical_kappa(params).kappa_c == pytest.approx(1.0, abs=0.005)


def test_hopf_frequency_and_phase():
    omega0, theta = hopf_frequency(10, 70)
    assert omega0 == pytest.approx(math.pi / 80)
    assert theta == pytest.approx(math.pi / 8)
    with pytest.raises(ParameterError):
        hopf_frequency(0.0, 10.0)


def test_verdict_flips_across_critical_kappa(supercritical_set):
    kappa_c = critical_kappa(supercritical_set).kappa_c
    assert is_stable(supercritical_set.with_kappa(0.95 * kappa_c)).stable
    assert not is_stable(supercritical_set.with_kappa(1.05 * kappa_c)).stable
    assert stability_margin(supercritical_set.with_kappa(kappa_c)) == pytest.approx(0.0, abs=1e-12)


def test_chart_boundary_values():
    assert chart_boundary_a(0.0) == pytest.approx(math.pi / 4)
    assert chart_margin(math.pi / 4, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert chart_boundary_a(1e6) == pytest.approx(math.pi / 2, abs=1e-4)
    assert chart_margin(math.pi / 2 + 0.01, 0.1) > 0


@pytest.mark.parametrize("b", [0.0, 0.01, 0.3, 1.0, 5.0])
def test_chart_margin_matches_radical_form(b):
    for a in (0.1, 0.7, 1.4):
        radical = a * (8 + b - math.sqrt(b * b + 8 * b)) / 4 - math.pi / 2
        assert chart_margin(a, b) == pytest.approx(radical, abs=1e-12)


def test_sufficient_condition_implies_stability():
    rng = np.random.default_rng(3)
    checked = 0
    for params in random_params(rng, 300):
        if sufficient_condition(params):
            checked += 1
            assert is_stable(params).stable
    assert checked > 20


def test_delay_swap_and_time_rescaling_keep_kappa_c():
    rng = np.random.default_rng(7)
    for params in random_params(rng, 50):
        kappa_c = critical_kappa(params).kappa_c
        assert critical_kappa(params.swapped()).kappa_c == pytest.approx(kappa_c, rel=1e-12)
        scaled = ModelParams(a=params.a, b=params.b, gamma=params.gamma,
                             tau1=3 * params.tau1, tau2=3 * params.tau2)
        assert critical_kappa(scaled).kappa_c == pytest.approx(kappa_c, rel=1e-12)


def test_delay_phase_margin_reproduces_margin(supercritical_set):
    _, theta = hopf_frequency(supercritical_set.tau1, supercritical_set.tau2)
    assert delay_phase_margin(supercritical_set, theta) == pytest.approx(
        stability_margin(supercritical_set), abs=1e-12)
    with pytest.raises(ParameterError):
        delay_phase_margin(supercritical_set, math.pi)


def test_unstable_phase_interval(supercritical_set):
    assert unstable_phase_interval(supercritical_set.with_kappa(0.3)) is None
    low, high = unstable_phase_interval(supercritical_set.with_kappa(1.5))
    assert low + high == pytest.approx(math.pi)
    hot = supercritical_set.with_kappa(1.5)
    assert delay_phase_margin(hot, low) == pytest.approx(0.0, abs=1e-12)
    assert delay_phase_margin(hot, 0.5 * (low + high)) > 0


def test_transversality_is_positive():
    rng = np.random.default_rng(11)
    for params in random_params(rng, 500):
        assert critical_kappa(params).alpha_prime > 0


def test_transversality_matches_root_tracking():
    rng = np.random.default_rng(5)
    for params in random_params(rng, 40):
        hp = critical_kappa(params)
        h = 1e-4 * hp.kappa_c
        guess = 1j * hp.omega0
        up = track_root(params.with_kappa(hp.kappa_c + h), guess)
        down = track_root(params.with_kappa(hp.kappa_c - h), guess)
        slope = (up.real - down.real) / (2 * h)
        assert slope == pytest.approx(hp.alpha_prime, rel=1e-4)


def test_eigenvalue_sensitivity_at_crossing(subcritical_set):
    hp = critical_kappa(subcritical_set)
    at_kc = subcritical_set.with_kappa(hp.kappa_c)
    lam = 1j * hp.omega0
    assert abs(characteristic_residual(lam, at_kc)) < 1e-12
    assert eigenvalue_sensitivity(lam, at_kc).real == pytest.approx(hp.alpha_prime, rel=1e-10)


def test_root_scan_finds_crossing_pair(subcritical_set):
    hp = critical_kappa(subcritical_set)
    roots = rightmost_root_scan(subcritical_set.with_kappa(hp.kappa_c))
    assert roots
    assert roots[0].real == pytest.approx(0.0, abs=1e-9)
    assert roots[0].imag == pytest.approx(hp.omega0, rel=1e-9)


def test_root_scan_sign_follows_verdict(supercritical_set):
    kappa_c = critical_kappa(supercritical_set).kappa_c
    unstable = rightmost_root_scan(supercritical_set.with_kappa(1.2 * kappa_c))
    assert unstable[0].real > 0
    stable = rightmost_root_scan(supercritical_set.with_kappa(0.8 * kappa_c))
    assert all(lam.real < 0 for lam in stable)


def test_root_scan_rejects_empty_box(supercritical_set):
    with pytest.raises(ParameterError):
        rightmost_root_scan(supercritical_set, SearchBox(1.0, 0.0, 0.0, 1.0))


def test_loop_gain_uses_equilibrium_slope(supercritical_set):
    eq = equilibrium(supercritical_set)
    assert eq.a_tilde == pytest.approx(2.16 * (1 + eq.rho_star) / 80)
