"""
Hopf normal form of the two-delay RCP model at κ = κc

Center-manifold reduction in the Hassard style: eigenvector normalization D,
quadratic and cubic coefficients g20, g11, g02, g21, the first Lyapunov
quantity c1(0), and from it μ2 (direction) and β2 (Floquet exponent).
Also the closed-form criticality functions f̃(ϑ) and g̃(ϑ, ρ*).
"""
import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import pandas as pd
from tqdm import tqdm

from config.config import (
    DEFAULT_CAPACITY, DEFAULT_GAMMA, DEGENERATE_TOL, KAPPA_MATCH_RTOL,
    RESONANCE_TOL, SHOW_PROGRESS,
)
from src.errors import DegenerateParametersError, ParameterError, ResonanceError
from src.model import (
    Equilibrium, ModelParams, TaylorCoefficients, equilibrium, rho_to_b,
    taylor_coefficients,
)
from src.stability import HopfPoint, at_hopf_point, transversality_constants

RHO_MIN, RHO_MAX = 0.01, 0.99


class Criticality(str, Enum):
    SUPERCRITICAL = "Supercritical"
    SUBCRITICAL = "Subcritical"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class NormalForm:
    """Normal-form quantities at the Hopf point"""
    d_norm: complex
    g20: complex
    g11: complex
    g02: complex
    g21: complex
    e_const: complex
    f_const: complex
    w20_0: complex
    w20_t1: complex
    w20_t2: complex
    w11_0: complex
    w11_t1: complex
    w11_t2: complex
    c1_0: complex
    mu2: float
    beta2: float
    criticality: Criticality


def classify(c1_0: complex) -> Criticality:
    # α'(0) > 0, so the sign of Re c1(0) alone decides
    if abs(c1_0.real) < DEGENERATE_TOL * max(1.0, abs(c1_0)):
        return Criticality.DEGENERATE
    return Criticality.SUPERCRITICAL if c1_0.real < 0 else Criticality.SUBCRITICAL


def normalization_constant(kappa: float, coeffs: TaylorCoefficients, hp: HopfPoint,
                           tau1: float, tau2: float) -> complex:
    """D with <q*, q> = 1"""
    w = hp.omega0
    return 1.0 / (1.0 + kappa * tau1 * coeffs.xi_y * cmath.exp(1j * w * tau1)
                  + kappa * tau2 * coeffs.xi_z * cmath.exp(1j * w * tau2))


def normal_form(params: ModelParams, eq: Equilibrium, coeffs: TaylorCoefficients,
                hp: HopfPoint) -> NormalForm:
    """Full normal-form computation; params must sit at κ = κc"""
    if abs(params.kappa - hp.kappa_c) > KAPPA_MATCH_RTOL * hp.kappa_c:
        raise ParameterError(
            f"normal form needs kappa = kappa_c (got {params.kappa}, kappa_c={hp.kappa_c})"
        )

    k = params.kappa
    w = hp.omega0
    t1, t2 = params.tau1, params.tau2
    c = coeffs

    # e^{-iω0τ1}, e^{-iω0τ2} and their conjugates, reused below
    e1 = cmath.exp(-1j * w * t1)
    e2 = cmath.exp(-1j * w * t2)
    e1c, e2c = e1.conjugate(), e2.conjugate()

    d = normalization_constant(k, c, hp, t1, t2)
    dk = d.conjugate() * k

    g20 = dk * (2 * c.xi_xy * e1 + 2 * c.xi_xz * e2 + 2 * c.xi_yy * e1 ** 2
                + 2 * c.xi_yz * e1 * e2 + 2 * c.xi_zz * e2 ** 2)
    g11 = dk * (c.xi_xy * (e1 + e1c) + c.xi_xz * (e2 + e2c) + 2 * c.xi_yy
                + c.xi_yz * (e1 * e2c + e1c * e2) + 2 * c.xi_zz)
    g02 = dk * (2 * c.xi_xy * e1c + 2 * c.xi_xz * e2c + 2 * c.xi_yy * e1c ** 2
                + 2 * c.xi_yz * e1c * e2c + 2 * c.xi_zz * e2c ** 2)

    e_denominator = d.conjugate() * (k * c.xi_y * e1 ** 2 + k * c.xi_z * e2 ** 2 - 2j * w)
    if abs(e_denominator) < RESONANCE_TOL * max(1.0, w):
        raise ResonanceError(f"second-harmonic denominator vanishes for {params}")
    e_const = -g20 / e_denominator

    if c.xi_y + c.xi_z == 0:
        raise DegenerateParametersError(f"xi_y + xi_z = 0 for {params}")
    f_const = -g11 / (d.conjugate() * k * (c.xi_y + c.xi_z))

    iw = 1j * w

    def w20(shift: complex) -> complex:
        # shift = e^{iω0θ} at the evaluation point θ
        return (-g20 / iw * shift - g02.conjugate() / (3 * iw) * shift.conjugate()
                + e_const * shift ** 2)

    def w11(shift: complex) -> complex:
        return g11 / iw * shift - g11.conjugate() / iw * shift.conjugate() + f_const

    w20_0, w20_t1, w20_t2 = w20(1.0 + 0j), w20(e1), w20(e2)
    w11_0, w11_t1, w11_t2 = w11(1.0 + 0j), w11(e1), w11(e2)

    bracket = (
        c.xi_xy * (2 * w11_0 * e1 + w20_0 * e1c + 2 * w11_t1 + w20_t1)
        + c.xi_xz * (2 * w11_0 * e2 + w20_0 * e2c + 2 * w11_t2 + w20_t2)
        + c.xi_yy * (4 * w11_t1 * e1 + 2 * w20_t1 * e1c)
        + c.xi_yz * (2 * w11_t1 * e2 + w20_t1 * e2c + 2 * w11_t2 * e1 + w20_t2 * e1c)
        + c.xi_zz * (4 * w11_t2 * e2 + 2 * w20_t2 * e2c)
        + c.xi_xyy * (2 * e1 ** 2 + 4)
        + c.xi_xzz * (2 * e2 ** 2 + 4)
        + c.xi_yyz * (2 * e1 ** 2 * e2c + 4 * e2)
        + c.xi_yzz * (2 * e2 ** 2 * e1c + 4 * e1)
        + c.xi_xyz * (2 * e1 * e2c + 2 * e1c * e2 + 2 * e1 * e2)
        + 6 * c.xi_yyy * e1
        + 6 * c.xi_zzz * e2
    )
    g21 = dk * bracket

    c1_0 = (1j / (2 * w)) * (g20 * g11 - 2 * abs(g11) ** 2 - abs(g02) ** 2 / 3) + g21 / 2
    mu2 = -c1_0.real / hp.alpha_prime
    beta2 = 2 * c1_0.real

    return NormalForm(
        d_norm=d, g20=g20, g11=g11, g02=g02, g21=g21,
        e_const=e_const, f_const=f_const,
        w20_0=w20_0, w20_t1=w20_t1, w20_t2=w20_t2,
        w11_0=w11_0, w11_t1=w11_t1, w11_t2=w11_t2,
        c1_0=c1_0, mu2=mu2, beta2=beta2,
        criticality=classify(c1_0),
    )


def analyze(params: ModelParams):
    """Move params to κc and return (params_at_kc, eq, hp, normal form)"""
    params_kc, hp = at_hopf_point(params)
    eq = equilibrium(params_kc)
    nf = normal_form(params_kc, eq, taylor_coefficients(params_kc, eq), hp)
    return params_kc, eq, hp, nf


def bilinear_form(nf: NormalForm, params: ModelParams, coeffs: TaylorCoefficients,
                  hp: HopfPoint, conjugate: bool = False) -> complex:
    """<q*, q> (or <q*, q̄> when conjugate) rebuilt from D.

    <ψ, φ> = ψ̄(0)φ(0) - Σ_j κξ_j ∫_0^{-τ_j} ψ̄(ξ + τ_j) φ(ξ) dξ with
    ψ = D e^{iω0 s} and φ = e^{±iω0 θ}.
    """
    w = hp.omega0
    s = -1j * w if conjugate else 1j * w
    total = 1.0 + 0j
    for xi, tau in ((coeffs.xi_y, params.tau1), (coeffs.xi_z, params.tau2)):
        rate = s - 1j * w
        if abs(rate) < 1e-300:
            segment = -tau
        else:
            segment = (cmath.exp(-rate * tau) - 1.0) / rate
        total -= params.kappa * xi * cmath.exp(-1j * w * tau) * segment
    return nf.d_norm.conjugate() * total


def predicted_amplitude(nf: NormalForm, hp: HopfPoint, kappa: float) -> Optional[float]:
    """Leading-order peak-to-trough rate swing of the bifurcating cycle"""
    if nf.criticality is not Criticality.SUPERCRITICAL or kappa <= hp.kappa_c:
        return None
    return 4.0 * math.sqrt((kappa - hp.kappa_c) / nf.mu2)


def f_tilde(theta: float) -> float:
    """Sign function of Re c1(0) without queue feedback"""
    if not 0.0 < theta < math.pi:
        raise ParameterError(f"theta must lie in (0, pi) (got {theta})")
    s, c = math.sin(theta), math.cos(theta)
    c2 = math.cos(2 * theta)
    return (-2 * math.pi * s ** 4 - math.pi * s ** 2 * c2 ** 2
            - 2 * c2 * s ** 3 - c2 * s ** 2 * c * (math.pi - 2 * theta))


def re_c1_without_queue(theta: float, gamma_capacity: float, tau_sum: float) -> float:
    """Exact Re c1(0) for b = 0, a positive multiple of f̃(ϑ)"""
    s, c2 = math.sin(theta), math.cos(2 * theta)
    big_a, big_b = _phase_constants(theta)
    prefactor = 2 * math.pi / (gamma_capacity ** 2 * tau_sum)
    shape = s ** 2 * (c2 ** 2 + 4 * s ** 2) * (big_a ** 2 + big_b ** 2)
    return prefactor * f_tilde(theta) / shape


def _phase_constants(theta: float):
    # A and B depend on the delays only through ϑ
    return transversality_constants(theta, math.pi - theta)


def _check_phase_and_utilization(theta: float, rho_star: float) -> None:
    if not 0.0 < theta < math.pi:
        raise ParameterError(f"theta must lie in (0, pi) (got {theta})")
    if not RHO_MIN <= rho_star <= RHO_MAX:
        raise ParameterError(
            f"rho_star must lie in [{RHO_MIN}, {RHO_MAX}] (got {rho_star})"
        )


def g_tilde(theta: float, rho_star: float) -> complex:
    """The four-term closed form g̃(ϑ, ρ*)"""
    _check_phase_and_utilization(theta, rho_star)
    s, c2 = math.sin(theta), math.cos(2 * theta)
    rho = rho_star
    den = c2 + 2j * s

    first = s / (rho * (1 - rho)) * (2j * s - (2 * c2 + 1j * s) / den)
    second = (1 + rho) * (-s + 1j * c2) / (rho ** 2 * den)
    third = 2 * s ** 2 * (-4 * s + 3j * c2) / ((1 - rho) ** 2 * (1 + rho) * den)
    fourth = -3j * (3 * s - math.sin(3 * theta)) / (4 * (1 - rho) ** 2 * s)
    return first + second + third + fourth


def _closed_form_terms(theta: float, rho_star: float, a: float, capacity: float):
    # (μ2, dimensionless sign term, size of its parts)
    _check_phase_and_utilization(theta, rho_star)
    realization = ModelParams(
        a=a, b=rho_to_b(rho_star), capacity=capacity,
        tau1=1.0, tau2=(math.pi - theta) / theta,
    )
    params_kc, hp = at_hopf_point(realization)
    eq = equilibrium(params_kc)
    coeffs = taylor_coefficients(params_kc, eq)
    d_bar = normalization_constant(params_kc.kappa, coeffs, hp,
                                   params_kc.tau1, params_kc.tau2).conjugate()

    numerator = g_tilde(theta, rho_star) * d_bar
    denominator = (1j * (1 + rho_star) * d_bar).real
    quotient = numerator.real / denominator
    size = abs(numerator) / abs(denominator)
    scale = 2 * math.pi / (a * math.sin(theta) * capacity ** 2 * (1 + rho_star))
    return scale * quotient, quotient, size


def g_tilde_mu2(theta: float, rho_star: float, a: float = 1.0,
                capacity: float = 1.0) -> float:
    """μ2 from the closed form g̃.

    Re(g̃D̄)/Re(i(1+ρ*)D̄) carries the sign of μ2; the factor
    2π/(a sinϑ C²(1+ρ*)) turns it into the exact μ2 for gain a and capacity C.
    """
    mu2, _, _ = _closed_form_terms(theta, rho_star, a, capacity)
    return mu2


def _verdict_from_sign_term(term: float, size: float) -> Criticality:
    if abs(term) < DEGENERATE_TOL * max(1.0, size):
        return Criticality.DEGENERATE
    return Criticality.SUPERCRITICAL if term > 0 else Criticality.SUBCRITICAL


def criticality_map(theta_grid: Sequence[float],
                    rho_grid: Optional[Sequence[float]] = None,
                    b_grid: Optional[Sequence[float]] = None,
                    a: float = 1.0,
                    capacity: float = DEFAULT_CAPACITY,
                    gamma: float = DEFAULT_GAMMA,
                    tau1: float = 10.0,
                    progress: bool = SHOW_PROGRESS) -> pd.DataFrame:
    """Tabulate μ2 and the criticality verdict over a phase × utilization grid.

    With rho_grid the closed form is used; with b_grid each point runs the
    full normal form on τ1 = tau1, τ2 = tau1(π - ϑ)/ϑ (b = 0 rows use gamma).
    """
    if (rho_grid is None) == (b_grid is None):
        raise ParameterError("pass exactly one of rho_grid or b_grid")

    rows = []
    if rho_grid is not None:
        points = [(float(t), float(r)) for r in rho_grid for t in theta_grid]
        for theta, rho in tqdm(points, desc="criticality map", disable=not progress):
            mu2, term, size = _closed_form_terms(theta, rho, a, capacity)
            # judged on the C-free sign term; μ2 itself scales as 1/C²
            verdict = _verdict_from_sign_term(term, size)
            rows.append({"theta": theta, "rho_star": rho, "b": rho_to_b(rho),
                         "mu2": mu2, "criticality": verdict.value})
    else:
        points = [(float(t), float(b)) for b in b_grid for t in theta_grid]
        for theta, b in tqdm(points, desc="criticality map", disable=not progress):
            if not 0.0 < theta < math.pi:
                raise ParameterError(f"theta must lie in (0, pi) (got {theta})")
            params = ModelParams(a=a, b=b, gamma=gamma, capacity=capacity,
                                 tau1=tau1, tau2=tau1 * (math.pi - theta) / theta)
            _, eq, _, nf = analyze(params)
            rows.append({"theta": theta, "rho_star": eq.rho_star, "b": b,
                         "mu2": nf.mu2, "criticality": nf.criticality.value})

    return pd.DataFrame(rows, columns=["theta", "rho_star", "b", "mu2", "criticality"])
