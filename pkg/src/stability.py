"""
Linear stability of the two-delay RCP model

The characteristic equation is λ + κã(e^{-λτ1} + e^{-λτ2}) = 0. The first
crossing of the imaginary axis happens at ω0 = π/(τ1 + τ2); everything
here is built around that n = 0 branch.
"""
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from config.config import NEWTON_MAX_ITER, ROOT_DEDUP_TOL
from src.errors import NumericalError, OracleDisagreementError, ParameterError
from src.model import ModelParams, equilibrium, utilization_from_b


@dataclass(frozen=True)
class HopfPoint:
    """Crossing frequency, phase, critical κ and transversality at the Hopf point"""
    omega0: float
    theta: float
    kappa_c: float
    alpha_prime: float


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    margin: float


@dataclass(frozen=True)
class SearchBox:
    """Rectangle of the complex plane scanned for characteristic roots"""
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def contains(self, lam: complex, slack: float = 0.0) -> bool:
        return (self.re_min - slack <= lam.real <= self.re_max + slack
                and self.im_min - slack <= lam.imag <= self.im_max + slack)


def hopf_frequency(tau1: float, tau2: float) -> Tuple[float, float]:
    """Return (ω0, ϑ) for the first crossover"""
    if tau1 <= 0 or tau2 <= 0:
        raise ParameterError(f"delays must be > 0 (got {tau1}, {tau2})")
    tau_sum = tau1 + tau2
    return math.pi / tau_sum, math.pi * tau1 / tau_sum


def loop_gain(params: ModelParams) -> float:
    """κã, the coefficient of the delayed terms in the characteristic equation"""
    return params.kappa * equilibrium(params).a_tilde


def stability_margin(params: ModelParams) -> float:
    tau_sum = params.tau_sum
    phase = math.pi * (params.tau1 - params.tau2) / (2.0 * tau_sum)
    return loop_gain(params) * tau_sum * math.cos(phase) - math.pi / 2.0


def is_stable(params: ModelParams) -> StabilityVerdict:
    """Necessary and sufficient local stability test"""
    margin = stability_margin(params)
    return StabilityVerdict(stable=margin < 0.0, margin=margin)


def sufficient_condition(params: ModelParams) -> bool:
    """Delay-independent test: κa(1+ρ*) < π/2 with queue feedback, κa < π/2 without"""
    eq = equilibrium(params)
    factor = 1.0 + eq.rho_star if params.with_queue else 1.0
    return params.kappa * params.a * factor < math.pi / 2.0


def chart_boundary_a(b: float, sigma_sq: float = 1.0) -> float:
    """Largest a meeting the κ = 1 sufficient condition for queue gain b.

    At b = 0 this is the limit of the queue-feedback branch (ρ* -> 1),
    i.e. π/4, not the γ-target model.
    """
    if b < 0:
        raise ParameterError(f"b must be >= 0 (got {b})")
    rho = utilization_from_b(b * sigma_sq)
    return math.pi / (2.0 * (1.0 + rho))


def chart_margin(a: float, b: float, sigma_sq: float = 1.0) -> float:
    """a(8 + b - sqrt(b^2 + 8b))/4 - π/2 for the κ = 1 stability chart"""
    rho = utilization_from_b(b * sigma_sq)
    return a * (1.0 + rho) - math.pi / 2.0


def delay_phase_margin(params: ModelParams, theta: float) -> float:
    """Stability margin when the delay sum is kept and the split moves to phase ϑ"""
    if not 0.0 < theta < math.pi:
        raise ParameterError(f"theta must lie in (0, pi) (got {theta})")
    return loop_gain(params) * params.tau_sum * math.sin(theta) - math.pi / 2.0


def unstable_phase_interval(params: ModelParams) -> Optional[Tuple[float, float]]:
    """Open ϑ interval, at fixed τ1 + τ2, on which the equilibrium is unstable"""
    ratio = math.pi / (2.0 * loop_gain(params) * params.tau_sum)
    if ratio >= 1.0:
        return None
    low = math.asin(ratio)
    return low, math.pi - low


def transversality_constants(tau1: float, tau2: float) -> Tuple[float, float]:
    """A and B of the transversality expression"""
    omega0, theta = hopf_frequency(tau1, tau2)
    big_a = 1.0 - omega0 * math.cos(theta) * (tau1 - tau2) / (2.0 * math.sin(theta))
    return big_a, math.pi / 2.0


def transversality(params: ModelParams, hp: HopfPoint) -> float:
    """α'(0) = Re(dλ/dκ) at the Hopf point"""
    a_tilde = equilibrium(params).a_tilde
    big_a, big_b = transversality_constants(params.tau1, params.tau2)
    return math.pi * a_tilde * math.sin(hp.theta) / (big_a ** 2 + big_b ** 2)


def critical_kappa(params: ModelParams) -> HopfPoint:
    """Critical κ of the first Hopf crossing, with α'(0)"""
    omega0, theta = hopf_frequency(params.tau1, params.tau2)
    a_tilde = equilibrium(params).a_tilde
    cos_term = math.cos(omega0 * (params.tau1 - params.tau2) / 2.0)
    kappa_c = math.pi / (2.0 * a_tilde * params.tau_sum * cos_term)

    hp = HopfPoint(omega0=omega0, theta=theta, kappa_c=kappa_c, alpha_prime=float("nan"))
    alpha = transversality(params.with_kappa(kappa_c), hp)
    return replace(hp, alpha_prime=alpha)


def at_hopf_point(params: ModelParams) -> Tuple[ModelParams, HopfPoint]:
    """Params moved to κ = κc together with the Hopf point"""
    hp = critical_kappa(params)
    return params.with_kappa(hp.kappa_c), hp


def characteristic_function(lam, gain: float, tau1: float, tau2: float):
    """λ + g(e^{-λτ1} + e^{-λτ2}); works on scalars and arrays"""
    return lam + gain * (np.exp(-lam * tau1) + np.exp(-lam * tau2))


def characteristic_derivative(lam, gain: float, tau1: float, tau2: float):
    return 1.0 - gain * (tau1 * np.exp(-lam * tau1) + tau2 * np.exp(-lam * tau2))


def characteristic_residual(lam: complex, params: ModelParams) -> complex:
    return complex(characteristic_function(lam, loop_gain(params), params.tau1, params.tau2))


def eigenvalue_sensitivity(lam: complex, params: ModelParams) -> complex:
    """dλ/dκ along a root branch"""
    a_tilde = equilibrium(params).a_tilde
    t1, t2 = params.tau1, params.tau2
    numerator = -a_tilde * (np.exp(-lam * t1) + np.exp(-lam * t2))
    return complex(numerator / characteristic_derivative(lam, params.kappa * a_tilde, t1, t2))


def track_root(params: ModelParams, guess: complex,
               tol: float = 1e-14, max_iter: int = NEWTON_MAX_ITER) -> complex:
    """Newton iteration on the characteristic function from a single guess"""
    gain = loop_gain(params)
    t1, t2 = params.tau1, params.tau2
    scale = max(abs(guess), math.pi / params.tau_sum)
    lam = complex(guess)
    for _ in range(max_iter):
        step = complex(characteristic_function(lam, gain, t1, t2)
                       / characteristic_derivative(lam, gain, t1, t2))
        lam -= step
        if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
            break
        if abs(step) <= tol * scale:
            return lam
    raise NumericalError(f"root tracking from {guess} did not converge (last {lam})")


def default_search_box(params: ModelParams, reach: float = 2.0) -> SearchBox:
    """Re λ in [-reach·ω0, reach·ω0], Im λ in [0, 3ω0]"""
    omega0, _ = hopf_frequency(params.tau1, params.tau2)
    return SearchBox(-reach * omega0, reach * omega0, 0.0, 3.0 * omega0)


def _dedupe(roots: np.ndarray) -> List[complex]:
    unique: List[complex] = []
    for lam in roots[np.argsort(-roots.real, kind="stable")]:
        tol = ROOT_DEDUP_TOL * max(1.0, abs(lam))
        if all(abs(lam - kept) > tol for kept in unique):
            unique.append(complex(lam))
    return unique


def rightmost_root_scan(params: ModelParams, search_box: Optional[SearchBox] = None,
                        max_iter: int = NEWTON_MAX_ITER) -> List[complex]:
    """All characteristic roots inside the box with Im λ >= 0, rightmost first.

    Newton is started from every node of a uniform seed grid; seeds that
    diverge or leave the box are dropped.
    """
    box = search_box or default_search_box(params)
    if box.re_max <= box.re_min or box.im_max <= box.im_min:
        raise ParameterError(f"empty search box {box}")

    gain = loop_gain(params)
    t1, t2 = params.tau1, params.tau2
    omega0, _ = hopf_frequency(t1, t2)
    spacing = min(0.1 / params.tau_sum, omega0 / 10.0)

    n_re = int(math.ceil((box.re_max - box.re_min) / spacing)) + 1
    n_im = int(math.ceil((box.im_max - box.im_min) / spacing)) + 1
    re_axis = np.linspace(box.re_min, box.re_max, n_re)
    im_axis = np.linspace(box.im_min, box.im_max, n_im)
    lam = (re_axis[np.newaxis, :] + 1j * im_axis[:, np.newaxis]).ravel()

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(max_iter):
            step = (characteristic_function(lam, gain, t1, t2)
                    / characteristic_derivative(lam, gain, t1, t2))
            lam = lam - step
        residual = np.abs(characteristic_function(lam, gain, t1, t2))
        size = np.abs(lam) + gain * (np.abs(np.exp(-lam * t1)) + np.abs(np.exp(-lam * t2)))

    finite = np.isfinite(lam) & np.isfinite(residual)
    converged = finite & (residual <= 1e-10 * np.where(finite, size, 1.0))
    lam = lam[converged]

    slack = 1e-9 * omega0
    lam = lam[(lam.real >= box.re_min - slack) & (lam.real <= box.re_max + slack)
              & (lam.imag >= box.im_min - slack) & (lam.imag <= box.im_max + slack)]
    # real roots come back with round-off imaginary parts of either sign
    lam = np.where(np.abs(lam.imag) <= slack, lam.real + 0j, lam)

    roots = _dedupe(lam)
    if not roots and not is_stable(params).stable:
        raise OracleDisagreementError(
            f"unstable verdict but no characteristic roots found in {box} for {params}"
        )
    return roots
