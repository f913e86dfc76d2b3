import numpy as np
import pytest

from src.cycle_metrics import (
    cycle_metrics, oscillation_metrics, post_transient_window, swing_envelope_change,
)
from src.errors import ParameterError


def test_sustained_sine():
    t = np.arange(0.0, 1000.0, 0.1)
    x = 45.0 + 2.0 * np.sin(2 * np.pi * t / 50.0)
    metrics = cycle_metrics(t, x, reference=45.0, transient_fraction=0.5, min_spacing=25.0)
    assert not metrics.inconclusive
    assert metrics.amplitude == pytest.approx(4.0, rel=1e-3)
    assert metrics.period == pytest.approx(50.0, rel=1e-3)
    assert abs(metrics.envelope_change) < 1e-3


def test_decaying_oscillation_has_shrinking_envelope():
    t = np.arange(0.0, 1000.0, 0.1)
    x = 45.0 + 2.0 * np.exp(-t / 150.0) * np.sin(2 * np.pi * t / 50.0)
    metrics = cycle_metrics(t, x, reference=45.0, transient_fraction=0.0)
    assert metrics.envelope_change < -0.5


def test_flat_trace_has_zero_amplitude():
    t = np.linspace(0.0, 100.0, 1001)
    metrics = cycle_metrics(t, np.full_like(t, 45.0), reference=45.0)
    assert metrics.amplitude == 0.0
    assert metrics.period is None


def test_too_few_peaks_is_inconclusive():
    t = np.linspace(0.0, 100.0, 1001)
    x = 45.0 + np.sin(2 * np.pi * t / 60.0)
    metrics = cycle_metrics(t, x, reference=45.0, transient_fraction=0.0)
    assert metrics.inconclusive


def test_window_validation():
    with pytest.raises(ParameterError):
        post_transient_window(np.arange(10.0), np.arange(10.0), 1.0)
    with pytest.raises(ParameterError):
        post_transient_window(np.array([0.0]), np.array([1.0]), 0.5)


def test_oscillation_metrics_use_final_half():
    t = np.arange(0.0, 2000.0, 1.0)
    x = np.where(t < 1000.0, 500.0, 10.0 + 5.0 * np.sin(2 * np.pi * t / 100.0))
    metrics = oscillation_metrics(t, x, max_rtt=150.0)
    assert metrics.mean == pytest.approx(10.0, abs=0.1)
    assert metrics.peak == pytest.approx(15.0, abs=0.01)
    assert metrics.peak_to_peak == pytest.approx(10.0, abs=0.02)


def test_oscillation_metrics_need_ten_rtts():
    t = np.arange(0.0, 1000.0, 1.0)
    with pytest.raises(ParameterError):
        oscillation_metrics(t, np.zeros_like(t), max_rtt=150.0)


def test_slow_decay_is_measured_from_all_swings():
    # one percent per period
    t = np.arange(0.0, 2000.0, 0.1)
    x = 45.0 + 2.0 * np.exp(-t * np.log(1 / 0.99) / 50.0) * np.sin(2 * np.pi * t / 50.0)
    metrics = cycle_metrics(t, x, reference=45.0, transient_fraction=0.0)
    expected = 0.99 ** (metrics.n_peaks - 1) - 1.0
    assert metrics.envelope_change == pytest.approx(expected, abs=0.02)
    assert metrics.envelope_change < -0.2


def test_growing_envelope_is_positive():
    t = np.array([0.0, 100.0, 200.0, 300.0])
    assert swing_envelope_change(t, np.array([1.0, 1.1, 1.21, 1.331])) == pytest.approx(0.331)
    assert swing_envelope_change(t[:1], np.array([1.0])) == 0.0
