"""Event-driven simulation of one EEE link.

The link cycles through Active -> Sleeping (Ts) -> Idle -> Waking (Tw) ->
Active. Transitions draw full power, Idle draws ``sigma_off``. A frame's
queuing delay is its service start minus its arrival (transmission time is
not included).
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernel
from .model import GovernorSpec, LinkParams
from .traffic import TraceStream


class BacklogOverflow(RuntimeError):
    """A link queue grew beyond the simulator's memory guard."""


class Mode(enum.IntEnum):
    ACTIVE = _kernel.ACTIVE
    SLEEPING = _kernel.SLEEPING
    IDLE = _kernel.IDLE
    WAKING = _kernel.WAKING


@dataclass
class LinkState:
    """Observable state of a link, as seen by the sleep governor."""

    mode: Mode = Mode.ACTIVE
    mode_entered_at: float = 0.0
    queue: deque = field(default_factory=deque)
    backlog_bytes: int = 0
    coalesce_first_arrival: float | None = None


def governor_wake_decision(state: LinkState, now: float, gov: GovernorSpec) -> bool:
    """Whether an idle (or just-slept) link should start waking at ``now``.

    Frame transmission wakes on any queued frame. Burst transmission wakes
    once Qw frames are queued or Tmax has passed since the first of them.
    """
    if not state.queue:
        return False
    if not gov.is_burst:
        return True
    if len(state.queue) >= gov.qw:
        return True
    first = state.coalesce_first_arrival
    return first is not None and now >= first + gov.tmax


@dataclass
class EnergyAccumulator:
    active_time: float = 0.0
    sleeping_time: float = 0.0
    idle_time: float = 0.0
    waking_time: float = 0.0
    sleep_cycles: int = 0

    @property
    def total_time(self) -> float:
        return self.active_time + self.sleeping_time + self.idle_time + self.waking_time

    def normalized_energy(self, sigma_off: float) -> float:
        """Time-averaged power relative to full active power."""
        total = self.total_time
        if total <= 0:
            return float("nan")
        full = self.active_time + self.sleeping_time + self.waking_time
        return (full + sigma_off * self.idle_time) / total

    @property
    def mean_idle_period(self) -> float:
        """Average Idle sojourn per sleep cycle (zero-length ones included)."""
        return self.idle_time / self.sleep_cycles if self.sleep_cycles else float("nan")


@dataclass
class DelayAccumulator:
    total_wait: float = 0.0
    frames: int = 0

    @property
    def mean(self) -> float:
        return self.total_wait / self.frames if self.frames else 0.0


class LinkRun(NamedTuple):
    energy: EnergyAccumulator
    delay: DelayAccumulator


@dataclass
class KernelResult:
    start: np.ndarray
    assign: np.ndarray
    acc: np.ndarray
    cycles: np.ndarray


def check_window(stream: TraceStream, duration: float | None, warmup: float) -> float:
    horizon = stream.duration if duration is None else float(duration)
    if not horizon > 0:
        raise ValueError("simulation duration must be positive")
    if len(stream) and stream.timestamps[-1] > horizon:
        raise ValueError(f"arrival at {stream.timestamps[-1]} beyond duration {horizon}")
    if not 0 <= warmup < horizon:
        raise ValueError(f"warm-up {warmup} must lie in [0, duration)")
    return horizon


def run_kernel(stream: TraceStream, capacities, params: LinkParams, gov: GovernorSpec,
               assign: np.ndarray | None, horizon: float, warmup: float = 0.0,
               expected_delay: float = 0.0, beta: float = 0.1,
               post_enqueue: bool = False) -> KernelResult:
    """Drive the compiled event loop; ``assign=None`` selects the dynamic dispatcher."""
    dynamic = assign is None
    if dynamic:
        assign = np.zeros(len(stream), dtype=np.int64)
    else:
        assign = np.ascontiguousarray(assign, dtype=np.int64)
    burst = gov.is_burst
    start, acc, cycles, overflow = _kernel.simulate(
        stream.timestamps, stream.sizes, assign, dynamic,
        np.ascontiguousarray(capacities, dtype=float), params.ts, params.tw, burst,
        gov.qw if burst else 1, gov.tmax if burst else 0.0,
        float(expected_delay), float(beta), bool(post_enqueue), float(warmup), float(horizon))
    if overflow:
        raise BacklogOverflow(f"a link queue exceeded {_kernel.MAX_BACKLOG} frames")
    # the kernel schedules whole wake-up batches; service after the horizon never happened
    start[start > horizon] = np.nan
    return KernelResult(start, assign, acc, cycles)


def delay_of(stream: TraceStream, start: np.ndarray, horizon: float, warmup: float,
             mask: np.ndarray | None = None) -> DelayAccumulator:
    """Queuing delay of frames arriving after warm-up whose service began in the run."""
    sel = (stream.timestamps >= warmup) & (start <= horizon)
    if mask is not None:
        sel &= mask
    waits = start[sel] - stream.timestamps[sel]
    return DelayAccumulator(float(waits.sum()), int(sel.sum()))


def energy_of(acc_row, cycles: int) -> EnergyAccumulator:
    a = [float(v) for v in acc_row]
    return EnergyAccumulator(a[Mode.ACTIVE], a[Mode.SLEEPING], a[Mode.IDLE], a[Mode.WAKING],
                             int(cycles))


def simulate_link(stream: TraceStream, params: LinkParams, gov: GovernorSpec,
                  duration: float | None = None, warmup: float = 0.0) -> LinkRun:
    """Simulate one link fed by ``stream`` up to ``duration`` seconds.

    The link starts Active with an empty queue, so it enters Sleeping at
    t = 0. Accounting covers ``[warmup, duration)``.
    """
    horizon = check_window(stream, duration, warmup)
    res = run_kernel(stream, [params.capacity_bps], params, gov,
                     np.zeros(len(stream), dtype=np.int64), horizon, warmup)
    return LinkRun(energy_of(res.acc[0], res.cycles[0]),
                   delay_of(stream, res.start, horizon, warmup))
