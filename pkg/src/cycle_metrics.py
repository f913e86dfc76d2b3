"""
Amplitude, period and oscillation metrics of rate and queue traces
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.signal import find_peaks

from config.config import EQUILIBRIUM_VARIATION, MIN_PEAKS, TRANSIENT_FRACTION
from src.errors import ParameterError

PEAK_PROMINENCE = 0.05
SWINGS_AVERAGED = 10


@dataclass(frozen=True)
class CycleMetrics:
    """Steady oscillation summary of a post-transient window"""
    amplitude: float
    period: Optional[float]
    inconclusive: bool = False
    envelope_change: float = 0.0
    n_peaks: int = 0


@dataclass(frozen=True)
class OscillationMetrics:
    mean: float
    peak: float
    peak_to_peak: float


def post_transient_window(times: np.ndarray, values: np.ndarray,
                          transient_fraction: float) -> Tuple[np.ndarray, np.ndarray]:
    if not 0.0 <= transient_fraction < 1.0:
        raise ParameterError(f"transient_fraction must lie in [0, 1) (got {transient_fraction})")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 2:
        raise ParameterError("trace needs at least two samples")
    start = times[0] + transient_fraction * (times[-1] - times[0])
    keep = times >= start
    return times[keep], values[keep]


def swing_envelope_change(times: np.ndarray, swings: np.ndarray) -> float:
    """Fractional change of the swing envelope across the window from a log-linear fit.

    Negative values mean the oscillation is dying out, positive that it still grows.
    """
    swings = np.asarray(swings, dtype=float)
    times = np.asarray(times, dtype=float)
    if swings.size < 2 or np.any(swings <= 0):
        return 0.0
    slope, _ = np.polyfit(times, np.log(swings), 1)
    return float(np.expm1(slope * (times[-1] - times[0])))


def cycle_metrics(times: np.ndarray, values: np.ndarray, reference: float,
                  transient_fraction: float = TRANSIENT_FRACTION,
                  min_spacing: Optional[float] = None) -> CycleMetrics:
    """Mean peak-to-trough swing and mean peak spacing after the transient"""
    t, x = post_transient_window(times, values, transient_fraction)
    variation = float(x.max() - x.min())
    if variation < EQUILIBRIUM_VARIATION * abs(reference):
        return CycleMetrics(amplitude=0.0, period=None)

    distance = None
    if min_spacing is not None and t.size > 1:
        distance = max(1, int(min_spacing / (t[1] - t[0])))
    prominence = PEAK_PROMINENCE * variation
    peaks, _ = find_peaks(x, prominence=prominence, distance=distance)
    troughs, _ = find_peaks(-x, prominence=prominence, distance=distance)

    n_swings = min(peaks.size, troughs.size)
    if n_swings < MIN_PEAKS:
        return CycleMetrics(amplitude=variation, period=None, inconclusive=True,
                            n_peaks=int(peaks.size))

    swings = x[peaks[:n_swings]] - x[troughs[:n_swings]]
    envelope_change = swing_envelope_change(t[peaks[:n_swings]], swings)

    k = min(n_swings, SWINGS_AVERAGED)
    amplitude = float(np.mean(x[peaks[-k:]]) - np.mean(x[troughs[-k:]]))
    period = float(np.mean(np.diff(t[peaks])))
    return CycleMetrics(amplitude=amplitude, period=period, envelope_change=envelope_change,
                        n_peaks=int(peaks.size))


def oscillation_metrics(times: np.ndarray, values: np.ndarray,
                        max_rtt: Optional[float] = None) -> OscillationMetrics:
    """Mean, peak and peak-to-peak over the final half of a trace"""
    times = np.asarray(times, dtype=float)
    if max_rtt is not None and times.size and times[-1] - times[0] < 10.0 * max_rtt:
        raise ParameterError(
            f"trace spans {times[-1] - times[0]:.1f} ms, needs at least 10 x max RTT ({10 * max_rtt:.1f} ms)"
        )
    _, x = post_transient_window(times, values, 0.5)
    return OscillationMetrics(
        mean=float(np.mean(x)),
        peak=float(np.max(x)),
        peak_to_peak=float(np.max(x) - np.min(x)),
    )
