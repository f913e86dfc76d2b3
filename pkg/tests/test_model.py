import math

import numpy as np

import pytest

from src.errors import ParameterError
from src.model import (
    ModelParams, equilibrium, mean_queue, rho_to_b, rhs, taylor_coefficients,
    utilization_from_b,
)


@pytest.mark.parametrize("rho, expected", [
    (0.9, 1 / 45),
    (0.95, 1 / 190),
    (0.55, 81 / 110),
    (0.75, 1 / 6),
])
def test_rho_to_b_known_values(rho, expected):
    assert rho_to_b(rho) == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("rho", [0.05, 0.3, 0.55, 0.9, 0.99])
def test_utilization_inverts_rho_to_b(rho):
    assert utilization_from_b(rho_to_b(rho)) == pytest.approx(rho, rel=1e-12)


@pytest.mark.parametrize("rho", [0.0, 1.0, -0.2, 1.5])
def test_rho_to_b_rejects_out_of_range(rho):
    with pytest.raises(ParameterError):
        rho_to_b(rho)


def test_equilibrium_with_queue_satisfies_fixed_point():
    params = ModelParams(a=2.16, b=0.0222, capacity=100, tau1=10, tau2=70)
    eq = equilibrium(params)
    c = params.capacity
    assert (c - 2 * eq.r_star) ** 2 == pytest.approx(params.b * c * eq.r_star, rel=1e-10)
    assert eq.rho_star == pytest.approx(0.9, abs=1e-3)
    assert eq.r_star == pytest.approx(45.0, abs=0.1)
    assert eq.effective_capacity == c


def test_utilization_falls_strictly_with_b():
    rho = np.array([utilization_from_b(b) for b in np.logspace(-6, 3, 400)])
    assert np.all(np.diff(rho) < 0)
    assert np.all((rho > 0) & (rho < 1))


def test_fixed_point_holds_across_random_b_and_capacity():
    rng = np.random.default_rng(7)
    for b, c in zip(10 ** rng.uniform(-6, 3, 1000), rng.uniform(1.0, 1000.0, 1000)):
        params = ModelParams(a=1.0, b=float(b), capacity=float(c), tau1=10, tau2=20)
        r_star = equilibrium(params).r_star
        assert (c - 2 * r_star) ** 2 == pytest.approx(b * c * r_star, rel=1e-9)


def test_equilibrium_without_queue_uses_gamma():
    params = ModelParams(a=1.6, b=0.0, gamma=0.95, capacity=125, tau1=100, tau2=150)
    eq = equilibrium(params)
    assert eq.r_star == pytest.approx(0.5 * 0.95 * 125)
    assert eq.rho_star == 0.95
    assert eq.a_tilde == pytest.approx(1.6 / 250)


def test_sigma_sq_enters_through_effective_gain():
    base = ModelParams(a=1.0, b=0.04, capacity=100, tau1=10, tau2=20, sigma_sq=0.5)
    same = ModelParams(a=1.0, b=0.02, capacity=100, tau1=10, tau2=20)
    assert equilibrium(base).r_star == pytest.approx(equilibrium(same).r_star, rel=1e-12)


@pytest.mark.parametrize("params", [
    ModelParams(a=2.16, b=0.0222, capacity=100, tau1=10, tau2=70),
    ModelParams(a=1.6, b=0.0, gamma=0.95, capacity=125, tau1=100, tau2=150),
])
def test_rhs_vanishes_at_equilibrium(params):
    eq = equilibrium(params)
    assert rhs(params, eq.r_star, 2 * eq.r_star) == pytest.approx(0.0, abs=1e-10)


def test_linear_gain_matches_exact_derivative():
    params = ModelParams(a=1.17, b=0.736, capacity=100, tau1=10, tau2=20)
    eq = equilibrium(params)
    h = 1e-5
    y0 = 2 * eq.r_star
    slope = (rhs(params, eq.r_star, y0 + h) - rhs(params, eq.r_star, y0 - h)) / (2 * h)
    assert slope == pytest.approx(-eq.a_tilde, rel=1e-7)


def test_taylor_coefficients_symmetry_and_second_derivative():
    params = ModelParams(a=2.16, b=0.0222, capacity=100, tau1=10, tau2=70)
    eq = equilibrium(params)
    c = taylor_coefficients(params, eq)
    assert c.xi_y == c.xi_z
    assert c.xi_xy == c.xi_xz
    assert c.xi_yy == c.xi_zz == pytest.approx(c.xi_yz / 2)
    assert c.xi_xyy == c.xi_xzz == pytest.approx(c.xi_xyz / 2)
    assert c.xi_yyz == c.xi_yzz
    assert c.xi_yyy == c.xi_zzz

    h = 1e-3
    y0 = 2 * eq.r_star
    second = (rhs(params, eq.r_star, y0 + h) - 2 * rhs(params, eq.r_star, y0)
              + rhs(params, eq.r_star, y0 - h)) / h ** 2
    assert second == pytest.approx(c.xi_yz, rel=1e-5)


def test_taylor_coefficients_without_queue_have_no_pure_delay_terms():
    params = ModelParams(a=1.6, b=0.0, gamma=0.95, capacity=125, tau1=100, tau2=150)
    c = taylor_coefficients(params, equilibrium(params))
    assert c.xi_yy == c.xi_yz == c.xi_yyy == 0.0
    assert c.xi_y == pytest.approx(-1.6 / 250)


def test_mean_queue():
    assert mean_queue(50.0, 100.0) == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        mean_queue(100.0, 100.0)
    with pytest.raises(ParameterError):
        mean_queue(-1.0, 100.0)


@pytest.mark.parametrize("overrides", [
    {"a": 0.0},
    {"a": math.nan},
    {"capacity": -1.0},
    {"tau1": 0.0},
    {"b": -0.1},
    {"gamma": 1.2},
    {"kappa": 0.0},
])
def test_invalid_parameters_are_rejected(overrides):
    fields = dict(a=1.0, tau1=10.0, tau2=20.0, b=0.01)
    fields.update(overrides)
    with pytest.raises(ParameterError):
        ModelParams(**fields)


def test_parameter_error_is_value_error():
    assert issubclass(ParameterError, ValueError)


def test_swapped_and_with_kappa():
    params = ModelParams(a=1.0, tau1=10.0, tau2=20.0, b=0.01)
    assert params.swapped().tau1 == 20.0
    assert params.with_kappa(1.3).kappa == 1.3
    assert params.mean_rtt == 15.0
