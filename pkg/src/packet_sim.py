"""
Packet-level discrete-event simulation of a single RCP bottleneck

Poisson sources split into two RTT classes feed a FIFO link served at a
deterministic C packets/ms. Every Δ the router recomputes the fair rate from
the measured load and queue, and each source applies the new rate one RTT
after it was stamped.
"""
import heapq
import itertools
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import List, Optional

import numpy as np

from config.config import (
    DEFAULT_CAPACITY, DEFAULT_SEED, DEFAULT_SIGMA_SQ, EXPONENTIAL_BATCH, PACKET_BYTES,
    QUEUE_OVERFLOW, RATE_FLOOR_FRACTION,
)
from src.cycle_metrics import OscillationMetrics
from src.cycle_metrics import oscillation_metrics as _oscillation_metrics
from src.errors import ParameterError
from src.model import ModelParams, equilibrium

RTT_ASSIGNMENTS = ("half", "swapped", "all1", "all2")


class EventKind(IntEnum):
    """Event types; the value is the tie-break priority at equal times"""
    SERVICE_COMPLETION = 0
    PACKET_ARRIVAL = 1
    RATE_UPDATE = 2
    FEEDBACK_DELIVERY = 3


class EventQueue:
    """Time-ordered events, ties broken by kind then insertion order"""

    def __init__(self):
        self._heap = []
        self._counter = itertools.count()

    def push(self, time: float, kind: EventKind, source: int = -1, value: float = 0.0):
        heapq.heappush(self._heap, (time, int(kind), next(self._counter), source, value))

    def pop(self):
        time, kind, _, source, value = heapq.heappop(self._heap)
        return time, kind, source, value

    def __len__(self):
        return len(self._heap)


def gbps_to_packets_per_ms(gbps: float, packet_bytes: int = PACKET_BYTES) -> float:
    return gbps * 1e9 / (8.0 * packet_bytes) / 1000.0


@dataclass(frozen=True)
class NetworkConfig:
    """Bottleneck, sources and router settings of one packet run"""
    a: float
    tau1: float
    tau2: float
    b: float = 0.0
    gamma: float = 1.0
    kappa: float = 1.0
    capacity: float = DEFAULT_CAPACITY
    n_sources: int = 100
    rtt_assignment: str = "half"
    update_interval: Optional[float] = None
    sim_duration: float = 5000.0
    rng_seed: int = DEFAULT_SEED
    initial_rate: Optional[float] = None
    sigma_sq: float = DEFAULT_SIGMA_SQ

    def model_params(self) -> ModelParams:
        return ModelParams(a=self.a, b=self.b, gamma=self.gamma, capacity=self.capacity,
                           tau1=self.tau1, tau2=self.tau2, kappa=self.kappa,
                           sigma_sq=self.sigma_sq)

    def resolved(self) -> "NetworkConfig":
        params = self.model_params()
        if self.n_sources < 1:
            raise ParameterError(f"n_sources must be >= 1 (got {self.n_sources})")
        if self.rtt_assignment not in RTT_ASSIGNMENTS:
            raise ParameterError(
                f"rtt_assignment must be one of {RTT_ASSIGNMENTS} (got {self.rtt_assignment!r})"
            )
        if not self.sim_duration > 0:
            raise ParameterError(f"sim_duration must be > 0 (got {self.sim_duration})")
        interval = params.mean_rtt if self.update_interval is None else float(self.update_interval)
        if not interval > 0:
            raise ParameterError(f"update_interval must be > 0 (got {interval})")
        initial = self.initial_rate
        if initial is None:
            initial = 0.5 * equilibrium(params).rho_star * self.capacity / self.n_sources
        if not initial > 0:
            raise ParameterError(f"initial_rate must be > 0 (got {initial})")
        return replace(self, update_interval=interval, initial_rate=float(initial))

    def rtts(self) -> np.ndarray:
        n = self.n_sources
        first = n // 2
        if self.rtt_assignment == "all1":
            return np.full(n, self.tau1)
        if self.rtt_assignment == "all2":
            return np.full(n, self.tau2)
        short, long_ = (self.tau1, self.tau2)
        if self.rtt_assignment == "swapped":
            short, long_ = long_, short
        return np.concatenate((np.full(first, short), np.full(n - first, long_)))

    def stream_ids(self) -> np.ndarray:
        """Random-stream index per source: its rank with the τ1 class listed first"""
        order = np.argsort(self.rtts() != self.tau1, kind="stable")
        ids = np.empty(self.n_sources, dtype=np.int64)
        ids[order] = np.arange(self.n_sources)
        return ids


@dataclass
class RouterState:
    current_rate: float
    measured_arrivals: int = 0
    queue_occupancy: int = 0
    last_update_time: float = 0.0


@dataclass(frozen=True)
class Trace:
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class UtilizationStats:
    mean_utilization: float
    mean_arrival_rate: float
    packets_arrived: int
    packets_departed: int
    final_queue: int
    rate_clamps: int
    overflow: bool


@dataclass(frozen=True)
class PacketRunResult:
    """Traces sampled at every router update"""
    times: np.ndarray
    queue: np.ndarray
    router_rate: np.ndarray
    arrivals_per_ms: np.ndarray
    arrived: np.ndarray
    departed: np.ndarray
    stats: UtilizationStats
    config: NetworkConfig = field(repr=False, default=None)

    @property
    def queue_trace(self) -> Trace:
        return Trace(self.times, self.queue)

    @property
    def rate_trace(self) -> Trace:
        return Trace(self.times, self.router_rate)

    @property
    def utilization_stats(self) -> UtilizationStats:
        return self.stats

    def __iter__(self):
        return iter((self.queue_trace, self.rate_trace, self.stats))


class _ExponentialStream:
    """Unit-mean exponential draws from a private generator, fetched in batches"""
    __slots__ = ("_rng", "_buffer", "_pos")

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buffer: List[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buffer):
            self._buffer = self._rng.standard_exponential(EXPONENTIAL_BATCH).tolist()
            self._pos = 0
        value = self._buffer[self._pos]
        self._pos += 1
        return value


def run(config: NetworkConfig) -> PacketRunResult:
    """Simulate one configuration; returns traces and utilization statistics"""
    cfg = config.resolved()
    params = cfg.model_params()
    eq = equilibrium(params)

    n = cfg.n_sources
    capacity = cfg.capacity
    service_time = 1.0 / capacity
    interval = cfg.update_interval
    duration = cfg.sim_duration
    rtts = cfg.rtts()
    # one feedback event per RTT class; its members apply the rate at the same instant
    class_rtts = sorted(set(rtts.tolist()))
    members = [np.flatnonzero(rtts == r).tolist() for r in class_rtts]

    target = eq.effective_capacity
    step_gain = cfg.kappa * cfg.a * interval / (target * params.mean_rtt)
    queue_weight = cfg.b * capacity if params.with_queue else 0.0
    rate_floor = RATE_FLOOR_FRACTION * capacity / n

    streams = [_ExponentialStream(np.random.default_rng([cfg.rng_seed, int(k)]))
               for k in cfg.stream_ids()]
    source_rate = [cfg.initial_rate] * n
    next_arrival = [0.0] * n
    version = [0] * n

    events = EventQueue()
    push, pop = events.push, events.pop
    service_kind = EventKind.SERVICE_COMPLETION
    arrival_kind = EventKind.PACKET_ARRIVAL
    update_kind = EventKind.RATE_UPDATE
    feedback_kind = EventKind.FEEDBACK_DELIVERY

    for i in range(n):
        next_arrival[i] = streams[i].next() / source_rate[i]
        push(next_arrival[i], arrival_kind, i, 0)
    push(interval, update_kind)

    router = RouterState(current_rate=cfg.initial_rate)
    busy = False
    queue = 0
    arrived = departed = 0
    clamps = 0
    overflow = False
    samples = []

    while len(events):
        t, kind, src, value = pop()
        if t > duration:
            break

        if kind == service_kind:
            departed += 1
            queue -= 1
            if queue > 0:
                push(t + service_time, service_kind)
            else:
                busy = False

        elif kind == arrival_kind:
            if value != version[src]:
                continue
            arrived += 1
            router.measured_arrivals += 1
            queue += 1
            if not busy:
                busy = True
                push(t + service_time, service_kind)
            if queue > QUEUE_OVERFLOW:
                overflow = True
                break
            nxt = t + streams[src].next() / source_rate[src]
            next_arrival[src] = nxt
            push(nxt, arrival_kind, src, version[src])

        elif kind == update_kind:
            y_hat = router.measured_arrivals / interval
            router.queue_occupancy = queue
            drive = target - y_hat - queue_weight * queue
            rate = router.current_rate * (1.0 + step_gain * drive)
            if rate < rate_floor:
                rate = rate_floor
                clamps += 1
            router.current_rate = rate
            router.measured_arrivals = 0
            router.last_update_time = t
            samples.append((t, queue, rate, y_hat, arrived, departed))
            for group, delay in enumerate(class_rtts):
                push(t + delay, feedback_kind, group, rate)
            push(t + interval, update_kind)

        else:
            for i in members[src]:
                old = source_rate[i]
                if value == old:
                    continue
                source_rate[i] = value
                version[i] += 1
                # rescaling the residual keeps the process Poisson at the new rate
                nxt = t + (next_arrival[i] - t) * old / value
                next_arrival[i] = nxt
                push(nxt, arrival_kind, i, version[i])

    table = np.array(samples, dtype=float).reshape(-1, 6)
    times, queue_trace, rate_trace, load_trace = table[:, 0], table[:, 1], table[:, 2], table[:, 3]
    arrived_trace = table[:, 4].astype(np.int64)
    departed_trace = table[:, 5].astype(np.int64)

    if len(times):
        window = times >= times[0] + 0.5 * (times[-1] - times[0])
        mean_rate = float(np.mean(load_trace[window]))
    else:
        mean_rate = 0.0

    stats = UtilizationStats(
        mean_utilization=mean_rate / capacity,
        mean_arrival_rate=mean_rate,
        packets_arrived=arrived,
        packets_departed=departed,
        final_queue=queue,
        rate_clamps=clamps,
        overflow=overflow,
    )
    return PacketRunResult(times=times, queue=queue_trace, router_rate=rate_trace,
                           arrivals_per_ms=load_trace, arrived=arrived_trace,
                           departed=departed_trace, stats=stats, config=cfg)


def oscillation_metrics(queue_trace: Trace, max_rtt: Optional[float] = None) -> OscillationMetrics:
    """Mean, peak and peak-to-peak of the final half of a trace"""
    return _oscillation_metrics(queue_trace.times, queue_trace.values, max_rtt=max_rtt)
