"""
Nonlinear fluid simulation of the two-delay RCP model

Fixed-step fourth-order integration with cubic interpolation of the stored
history for the delayed terms. The state is advanced as v = ln R: the
right-hand side only depends on delayed rates, so dv/dt = κ·a/(C T̄)·(C - y - bC·p(y))
and the rate stays positive by construction.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from numba import njit
from tqdm import tqdm

from config.config import (
    DEFAULT_DELAY_SUMS, ENVELOPE_DECAY, ESCAPE_LOWER, ESCAPE_UPPER, HISTORY_EPSILON,
    MAX_DELAY_SUMS, MIN_DELAY_SUMS, SATURATION_MARGIN, SETTLING_TIMES, SHOW_PROGRESS,
    STEPS_PER_MIN_DELAY, TRANSIENT_FRACTION,
)
from src.cycle_metrics import CycleMetrics, cycle_metrics
from src.errors import IntegrationError, ParameterError
from src.model import ModelParams, equilibrium
from src.stability import critical_kappa, transversality

NUMBA_OPTIONS = {
    "nogil": True,
    "cache": False,
    "fastmath": False,
    "boundscheck": False,
    "error_model": "numpy",
}

STATUS_OK, STATUS_ESCAPED, STATUS_NONFINITE = 0, 1, 2


class OutcomeKind(str, Enum):
    CONVERGED = "ConvergedToEquilibrium"
    LIMIT_CYCLE = "LimitCycle"
    ESCAPED = "Escaped"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    amplitude: float = 0.0
    period: Optional[float] = None
    escape_time: Optional[float] = None


def default_t_end(params: ModelParams) -> float:
    """Run length giving the linear mode SETTLING_TIMES e-folds at the current distance to κc"""
    hp = critical_kappa(params)
    rate = transversality(params, hp) * abs(params.kappa - hp.kappa_c)
    longest = MAX_DELAY_SUMS * params.tau_sum
    if rate <= 0.0:
        return longest
    return min(max(SETTLING_TIMES / rate, DEFAULT_DELAY_SUMS * params.tau_sum), longest)


@dataclass(frozen=True)
class SimConfig:
    """One fluid run; None fields are resolved from the parameters"""
    params: ModelParams
    t_end: Optional[float] = None
    dt: Optional[float] = None
    history: Optional[float] = None
    transient_fraction: float = TRANSIENT_FRACTION
    escape_upper: float = ESCAPE_UPPER
    escape_lower: float = ESCAPE_LOWER

    def resolved(self) -> "SimConfig":
        p = self.params
        max_dt = min(p.tau1, p.tau2) / STEPS_PER_MIN_DELAY
        min_t_end = MIN_DELAY_SUMS * p.tau_sum
        dt = max_dt if self.dt is None else float(self.dt)
        t_end = default_t_end(p) if self.t_end is None else float(self.t_end)
        history = self.history
        if history is None:
            history = equilibrium(p).r_star * (1.0 + HISTORY_EPSILON)

        if not 0 < dt <= max_dt * (1.0 + 1e-12):
            raise ParameterError(f"dt must lie in (0, {max_dt:.6g}] (got {dt})")
        if t_end < min_t_end * (1.0 - 1e-12):
            raise ParameterError(f"t_end must be >= {min_t_end:.6g} (got {t_end})")
        if not history > 0:
            raise ParameterError(f"history must be > 0 (got {history})")
        if not 0.0 <= self.transient_fraction < 1.0:
            raise ParameterError(
                f"transient_fraction must lie in [0, 1) (got {self.transient_fraction})"
            )
        if not 0 < self.escape_lower < self.escape_upper:
            raise ParameterError("escape bounds must satisfy 0 < lower < upper")
        return replace(self, dt=dt, t_end=t_end, history=float(history))


@dataclass(frozen=True)
class TraceSeries:
    """Sampled rates (and queue proxy) of one run with its outcome"""
    times: np.ndarray
    rates: np.ndarray
    r_star: float
    queue: Optional[np.ndarray] = None
    outcome: Optional[Outcome] = None
    saturation_count: int = 0
    tau_sum: Optional[float] = None

    @property
    def saturated(self) -> bool:
        return self.saturation_count > 0


@njit(**NUMBA_OPTIONS)
def _cubic_lookup(v, pos):
    # 4-point Lagrange on the uniform grid around pos
    j = int(math.floor(pos))
    u = pos - j
    return (-u * (u - 1.0) * (u - 2.0) / 6.0 * v[j - 1]
            + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * v[j]
            - (u + 1.0) * u * (u - 2.0) / 2.0 * v[j + 1]
            + (u + 1.0) * u * (u - 1.0) / 6.0 * v[j + 2])


@njit(**NUMBA_OPTIONS)
def _advance(v, origin, n_steps, dt, lag1, lag2, gain, target, queue_weight,
             capacity, sigma_sq, saturation_cap, v_hi, v_lo):
    saturated = 0
    for n in range(n_steps):
        i = origin + n
        total = 0.0
        for stage in range(3):
            pos = i + 0.5 * stage
            y = math.exp(_cubic_lookup(v, pos - lag1)) + math.exp(_cubic_lookup(v, pos - lag2))
            drive = target - y
            if queue_weight > 0.0:
                yq = y
                if y >= saturation_cap:
                    saturated += 1
                    yq = saturation_cap
                drive -= queue_weight * sigma_sq * yq / (2.0 * (capacity - yq))
            # Simpson weights: the two midpoint stages coincide
            weight = 4.0 if stage == 1 else 1.0
            total += weight * gain * drive
        nxt = v[i] + dt * total / 6.0
        if not math.isfinite(nxt):
            return n, STATUS_NONFINITE, saturated
        v[i + 1] = nxt
        if nxt > v_hi or nxt < v_lo:
            return n + 1, STATUS_ESCAPED, saturated
    return n_steps, STATUS_OK, saturated


def _queue_proxy(params: ModelParams, times: np.ndarray, rates: np.ndarray,
                 history: float) -> np.ndarray:
    full_t = np.concatenate(([-max(params.tau1, params.tau2) - 1.0], times))
    full_r = np.concatenate(([history], rates))
    y = (np.interp(times - params.tau1, full_t, full_r)
         + np.interp(times - params.tau2, full_t, full_r))
    cap = params.capacity * (1.0 - SATURATION_MARGIN)
    y = np.minimum(y, cap)
    return params.sigma_sq * y / (2.0 * (params.capacity - y))


def classify_trace(trace: TraceSeries, transient_fraction: float) -> Tuple[Outcome, CycleMetrics]:
    metrics = extract_cycle_metrics(trace, transient_fraction)
    if metrics.amplitude == 0.0:
        return Outcome(OutcomeKind.CONVERGED), metrics
    if metrics.inconclusive:
        return Outcome(OutcomeKind.INCONCLUSIVE, amplitude=metrics.amplitude), metrics
    if metrics.envelope_change < -ENVELOPE_DECAY:
        return Outcome(OutcomeKind.CONVERGED), metrics
    return Outcome(OutcomeKind.LIMIT_CYCLE, amplitude=metrics.amplitude,
                   period=metrics.period), metrics


def integrate(config: SimConfig) -> TraceSeries:
    """Integrate the fluid model and classify the long-run behaviour"""
    cfg = config.resolved()
    p = cfg.params
    eq = equilibrium(p)
    dt = cfg.dt

    origin = int(math.ceil(max(p.tau1, p.tau2) / dt)) + 2
    n_steps = int(round(cfg.t_end / dt))
    v = np.empty(origin + n_steps + 3, dtype=np.float64)
    v[: origin + 1] = math.log(cfg.history)

    target = eq.effective_capacity
    gain = p.kappa * p.a / (target * p.mean_rtt)
    queue_weight = p.b * p.capacity if p.with_queue else 0.0
    saturation_cap = p.capacity * (1.0 - SATURATION_MARGIN)

    done, status, saturated = _advance(
        v, origin, n_steps, dt, p.tau1 / dt, p.tau2 / dt, gain, target, queue_weight,
        p.capacity, p.sigma_sq, saturation_cap,
        math.log(cfg.escape_upper * p.capacity), math.log(cfg.escape_lower * p.capacity),
    )
    if status == STATUS_NONFINITE:
        raise IntegrationError("non-finite log-rate", step=int(done), time=done * dt,
                               value=float(v[origin + done]))

    times = np.arange(done + 1, dtype=np.float64) * dt
    with np.errstate(over="ignore"):
        rates = np.exp(v[origin: origin + done + 1])
    queue = _queue_proxy(p, times, rates, cfg.history) if p.with_queue else None
    trace = TraceSeries(times=times, rates=rates, r_star=eq.r_star, queue=queue,
                        saturation_count=int(saturated), tau_sum=p.tau_sum)

    if status == STATUS_ESCAPED:
        return replace(trace, outcome=Outcome(OutcomeKind.ESCAPED, escape_time=float(times[-1])))
    outcome, _ = classify_trace(trace, cfg.transient_fraction)
    return replace(trace, outcome=outcome)


def extract_cycle_metrics(trace: TraceSeries,
                          transient_fraction: float = TRANSIENT_FRACTION) -> CycleMetrics:
    """(amplitude, period) of the post-transient part of a non-escaped trace"""
    if trace.outcome is not None and trace.outcome.kind is OutcomeKind.ESCAPED:
        raise ParameterError("cycle metrics undefined for an escaped trajectory")
    spacing = None if trace.tau_sum is None else 0.5 * trace.tau_sum
    return cycle_metrics(trace.times, trace.rates, trace.r_star,
                         transient_fraction=transient_fraction, min_spacing=spacing)


@dataclass(frozen=True)
class SweepPoint:
    kappa: float
    amplitude: float
    period: Optional[float]
    outcome: OutcomeKind


def _sweep_point(args) -> SweepPoint:
    params, kappa, t_end, dt = args
    trace = integrate(SimConfig(params=params.with_kappa(kappa), t_end=t_end, dt=dt))
    out = trace.outcome
    amplitude = out.amplitude if out.kind is OutcomeKind.LIMIT_CYCLE else 0.0
    if out.kind is OutcomeKind.ESCAPED:
        amplitude = float("nan")
    return SweepPoint(kappa=kappa, amplitude=amplitude, period=out.period, outcome=out.kind)


def amplitude_sweep(params: ModelParams, kappa_range: Tuple[float, float], n_points: int,
                    t_end: Optional[float] = None, dt: Optional[float] = None,
                    workers: int = 1, progress: bool = SHOW_PROGRESS) -> List[SweepPoint]:
    """Steady amplitude against κ; escaped points carry NaN amplitude"""
    k_lo, k_hi = kappa_range
    if n_points < 2 or not k_lo < k_hi:
        raise ParameterError(f"need n_points >= 2 and kappa_min < kappa_max (got {kappa_range}, {n_points})")
    kappa_c = critical_kappa(params).kappa_c
    if not k_lo < kappa_c < k_hi:
        raise ParameterError(f"kappa range {kappa_range} does not span kappa_c={kappa_c:.6g}")

    jobs = [(params, float(k), t_end, dt) for k in np.linspace(k_lo, k_hi, n_points)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(tqdm(pool.map(_sweep_point, jobs), total=len(jobs),
                               desc="bifurcation sweep", disable=not progress))
    else:
        points = [_sweep_point(job) for job in tqdm(jobs, desc="bifurcation sweep",
                                                    disable=not progress)]
    return sorted(points, key=lambda point: point.kappa)
