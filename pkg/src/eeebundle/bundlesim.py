"""Simulation of a bundle of EEE links under a traffic dispatch strategy."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from . import _kernel
from .allocation import AllocationVector, BundleSpec, allocate
from .linksim import DelayAccumulator, EnergyAccumulator, check_window, energy_of, run_kernel
from .model import GovernorSpec
from .traffic import FrameEvent, TraceStream


class Strategy(str, enum.Enum):
    EQUITABLE = "equitable"
    STATIC_WATERFILL = "waterfill"
    CAPPED_WATERFILL = "capped"
    DYNAMIC_WATERFILL = "dynamic"


@dataclass(frozen=True)
class DispatcherConfig:
    """How a bundle spreads arriving frames over its links.

    ``expected_delay`` and ``beta`` only matter for the dynamic strategy.
    With ``post_enqueue`` the delay average is fed the chosen queue's delay
    after the frame joins it instead of before.
    """

    strategy: Strategy = Strategy.DYNAMIC_WATERFILL
    expected_delay: float = 10e-6
    beta: float = 0.1
    post_enqueue: bool = False
    split: str = "round_robin"

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.strategy is Strategy.DYNAMIC_WATERFILL:
            if not self.expected_delay > 0:
                raise ValueError("dynamic water-filling needs expected_delay > 0")
            if not 0 < self.beta < 1:
                raise ValueError("beta must lie in (0, 1)")
        if self.split not in ("round_robin", "random"):
            raise ValueError(f"split must be 'round_robin' or 'random', got {self.split!r}")

    @property
    def static_name(self) -> str:
        return self.strategy.value


@dataclass
class DispatcherState:
    """Short-term delay average and per-link queue delays (backlog bits / C_i)."""

    queue_delays: list[float]
    d_av: float = 0.0


def dispatch_frame(state: DispatcherState, config: DispatcherConfig,
                   frame: FrameEvent | None = None) -> int:
    """Pick the link for an arriving frame and update the delay average once.

    Below the target every frame goes to the first link; otherwise to the
    first link whose queue delay is under the target, or the last link if
    none is.
    """
    q = state.queue_delays
    if not q:
        raise ValueError("no links to dispatch to")
    de = config.expected_delay
    if state.d_av < de:
        choice = 0
    else:
        choice = next((i for i, qi in enumerate(q) if qi < de), len(q) - 1)
    if not config.post_enqueue:
        state.d_av = config.beta * q[choice] + (1 - config.beta) * state.d_av
    return choice


@njit(cache=True)
def _weighted_round_robin(sizes, weights):
    # smooth weighted round-robin over bytes: credit every link its share of
    # each frame, send the frame to the link holding the most credit
    n_links = weights.shape[0]
    credit = np.zeros(n_links)
    out = np.empty(sizes.shape[0], dtype=np.int64)
    for k in range(sizes.shape[0]):
        s = sizes[k]
        best = -1
        for i in range(n_links):
            if weights[i] > 0:
                credit[i] += weights[i] * s
                if best < 0 or credit[i] > credit[best]:
                    best = i
        credit[best] -= s
        out[k] = best
    return out


def split_stream(stream: TraceStream, alloc: AllocationVector, method: str = "round_robin",
                 seed: int | None = None) -> np.ndarray:
    """Per-frame link indices that realize the rates of ``alloc``.

    ``round_robin`` is deterministic and byte-exact to within one frame;
    ``random`` draws each frame's link independently (seeded), which keeps
    Poisson arrivals Poisson on every link.
    """
    rates = np.asarray(alloc.rates, dtype=float)
    if alloc.demand <= 0 or not len(stream):
        return np.zeros(len(stream), dtype=np.int64)
    weights = rates / rates.sum()
    if method == "round_robin":
        return _weighted_round_robin(stream.sizes, weights)
    if method == "random":
        rng = np.random.default_rng(seed)
        if len(weights) == 2:
            return (rng.random(len(stream)) >= weights[0]).astype(np.int64)
        return np.minimum(np.searchsorted(np.cumsum(weights), rng.random(len(stream)),
                                          side="right"), len(weights) - 1).astype(np.int64)
    raise ValueError(f"unknown split method {method!r}")


@dataclass
class SimReport:
    """Outcome of one bundle run, per link in the bundle's original order."""

    per_link_energy: list[float]
    per_link_carried: list[float]
    per_link_offered: list[float]
    mean_delay: float
    config_echo: DispatcherConfig | None
    energy: list[EnergyAccumulator] = field(repr=False, default_factory=list)
    delay: DelayAccumulator = field(repr=False, default_factory=DelayAccumulator)
    per_link_delay: list[DelayAccumulator] = field(repr=False, default_factory=list)
    transmitted_bytes: list[int] = field(repr=False, default_factory=list)
    residual_bytes: list[int] = field(repr=False, default_factory=list)
    offered_bytes: list[int] = field(repr=False, default_factory=list)
    assignment: np.ndarray | None = field(repr=False, default=None)

    @property
    def bundle_energy_normalized(self) -> float:
        return float(np.mean(self.per_link_energy))


def run_bundle(stream: TraceStream, bundle: BundleSpec, gov: GovernorSpec,
               config: DispatcherConfig, duration: float | None = None,
               warmup: float = 0.0, seed: int | None = None,
               keep_assignment: bool = False) -> SimReport:
    """Feed ``stream`` to ``bundle`` and run every link's sleep governor.

    Static strategies compute their allocation from the stream's mean rate
    and split frames with ``config.split``. The dynamic strategy assigns
    frames one at a time, scanning links by non-increasing capacity.
    Rates and energies are measured over ``[warmup, duration)``.
    """
    horizon = check_window(stream, duration, warmup)
    order = bundle.order
    caps = bundle.capacities[order]
    if config.strategy is Strategy.DYNAMIC_WATERFILL:
        res = run_kernel(stream, caps, bundle.params, gov, None, horizon, warmup,
                         config.expected_delay, config.beta, config.post_enqueue)
        return _report(stream, bundle, res, horizon, warmup, config, keep_assignment)
    demand = 8.0 * stream.total_bytes / horizon
    alloc = allocate(config.static_name, bundle, demand)
    return run_allocation(stream, bundle, gov, alloc, duration, warmup, config.split, seed,
                          keep_assignment, config)


def run_allocation(stream: TraceStream, bundle: BundleSpec, gov: GovernorSpec,
                   alloc: AllocationVector, duration: float | None = None,
                   warmup: float = 0.0, split: str = "round_robin", seed: int | None = None,
                   keep_assignment: bool = False,
                   config: DispatcherConfig | None = None) -> SimReport:
    """Split ``stream`` in proportion to ``alloc.rates`` and simulate every link."""
    horizon = check_window(stream, duration, warmup)
    if len(alloc) != len(bundle):
        raise ValueError("allocation and bundle sizes differ")
    order = bundle.order
    caps = bundle.capacities[order]
    sorted_alloc = AllocationVector(np.asarray(alloc.rates)[order], alloc.demand, caps)
    assign = split_stream(stream, sorted_alloc, split, seed)
    res = run_kernel(stream, caps, bundle.params, gov, assign, horizon, warmup)
    return _report(stream, bundle, res, horizon, warmup, config, keep_assignment)


def _report(stream, bundle, res, horizon, warmup, config, keep_assignment) -> SimReport:
    order = bundle.order
    n = len(bundle)
    window = horizon - warmup
    sigma = bundle.params.sigma_off
    off, tx, carried, offered, wait_sum, wait_n = _kernel.tally(
        stream.timestamps, stream.sizes, res.assign, res.start, bundle.capacities[order],
        float(warmup), float(horizon))
    carried = carried * 8.0 / window
    offered = offered * 8.0 / window

    energy = [energy_of(res.acc[pos], res.cycles[pos]) for pos in range(n)]
    back = np.argsort(order)  # original index -> sorted position
    link_delay = [DelayAccumulator(float(wait_sum[p]), int(wait_n[p])) for p in back]
    total = DelayAccumulator(float(wait_sum.sum()), int(wait_n.sum()))
    return SimReport(
        per_link_energy=[energy[p].normalized_energy(sigma) for p in back],
        per_link_carried=[float(carried[p]) for p in back],
        per_link_offered=[float(offered[p]) for p in back],
        mean_delay=total.mean,
        config_echo=config,
        energy=[energy[p] for p in back],
        delay=total,
        per_link_delay=link_delay,
        transmitted_bytes=[int(tx[p]) for p in back],
        residual_bytes=[int(off[p] - tx[p]) for p in back],
        offered_bytes=[int(off[p]) for p in back],
        assignment=order[res.assign] if keep_assignment else None,
    )


def measure_delay_tracking(stream: TraceStream, bundle: BundleSpec, gov: GovernorSpec,
                           targets: Sequence[float], beta: float = 0.1,
                           duration: float | None = None, warmup: float = 0.0):
    """Mean queuing delay obtained by the dynamic dispatcher for each target delay."""
    out = []
    for target in targets:
        if not target > 0:
            raise ValueError("target delays must be positive")
        config = DispatcherConfig(Strategy.DYNAMIC_WATERFILL, target, beta)
        report = run_bundle(stream, bundle, gov, config, duration, warmup)
        out.append((float(target), report.mean_delay))
    return out
