"""Static traffic allocation across the links of a bundle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Distribution, GovernorSpec, LinkParams, link_energy_at_rates

SUM_RTOL = 1e-6


class InfeasibleDemand(ValueError):
    """Demand exceeds what the bundle can carry."""


@dataclass(frozen=True)
class AllocationVector:
    """Per-link offered rates (bits/s) in the bundle's original link order."""

    rates: tuple[float, ...]
    demand: float
    capacities: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        caps = tuple(float(c) for c in self.capacities)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "capacities", caps)
        if len(rates) != len(caps) or not rates:
            raise ValueError("rates and capacities must be non-empty and of equal length")
        if abs(sum(rates) - self.demand) > SUM_RTOL * max(abs(self.demand), 1.0):
            raise ValueError(f"rates sum to {sum(rates)}, demand is {self.demand}")
        for r, c in zip(rates, caps):
            if r < -1e-9 * c or r > c * (1 + 1e-9):
                raise ValueError(f"rate {r} outside [0, {c}]")

    @property
    def loads(self) -> np.ndarray:
        return np.asarray(self.rates) / np.asarray(self.capacities)

    def __len__(self):
        return len(self.rates)


@dataclass(frozen=True)
class BundleSpec:
    """Links of a bundle plus the utilization cap used by the capped water-fill.

    Hardware constants (Ts, Tw, sigma_off) are taken from the first link;
    only capacities may differ between links.
    """

    links: tuple[LinkParams, ...]
    max_utilization: float = 1.0

    def __post_init__(self):
        links = tuple(self.links)
        object.__setattr__(self, "links", links)
        if not links:
            raise ValueError("a bundle needs at least one link")
        if not 0 < self.max_utilization <= 1:
            raise ValueError("max_utilization must lie in (0, 1]")
        first = links[0]
        for lk in links[1:]:
            if (lk.ts, lk.tw, lk.sigma_off) != (first.ts, first.tw, first.sigma_off):
                raise ValueError("links of a bundle must share Ts, Tw and sigma_off")

    @classmethod
    def homogeneous(cls, n: int, params: LinkParams | None = None,
                    max_utilization: float = 1.0) -> "BundleSpec":
        return cls((params or LinkParams(),) * n, max_utilization)

    @property
    def params(self) -> LinkParams:
        return self.links[0]

    @property
    def capacities(self) -> np.ndarray:
        return np.array([lk.capacity_bps for lk in self.links])

    @property
    def order(self) -> np.ndarray:
        """Link indices by non-increasing capacity; ties keep original order."""
        return np.argsort(-self.capacities, kind="stable")

    @property
    def total_capacity(self) -> float:
        return float(self.capacities.sum())

    def __len__(self):
        return len(self.links)


def _fill(bundle: BundleSpec, demand: float, effective: np.ndarray) -> AllocationVector:
    if demand < 0:
        raise ValueError("demand must be non-negative")
    total = effective.sum()
    if demand > total * (1 + 1e-12):
        raise InfeasibleDemand(f"demand {demand:g} exceeds usable capacity {total:g}")
    rates = np.zeros(len(bundle))
    remaining = float(demand)
    for i in bundle.order:
        take = min(effective[i], remaining)
        rates[i] = take
        remaining -= take
    return AllocationVector(tuple(rates), demand, tuple(bundle.capacities))


def waterfill(bundle: BundleSpec, demand: float) -> AllocationVector:
    """Fill links to capacity one after another, largest capacity first."""
    return _fill(bundle, demand, bundle.capacities)


def waterfill_capped(bundle: BundleSpec, demand: float) -> AllocationVector:
    """Water-fill against ``max_utilization * C_i`` instead of ``C_i``."""
    return _fill(bundle, demand, bundle.max_utilization * bundle.capacities)


def equitable(bundle: BundleSpec, demand: float) -> AllocationVector:
    """Spread demand so that every link carries the same load (rate ~ capacity)."""
    caps = bundle.capacities
    if demand < 0:
        raise ValueError("demand must be non-negative")
    if demand > caps.sum() * (1 + 1e-12):
        raise InfeasibleDemand(f"demand {demand:g} exceeds capacity {caps.sum():g}")
    rates = np.minimum(demand * caps / caps.sum(), caps)
    return AllocationVector(tuple(rates), demand, tuple(caps))


def brute_force_sweep(bundle: BundleSpec, demand: float, gov: GovernorSpec, pkt_size: float,
                      step: float | None = None, distribution=Distribution.POISSON):
    """Evaluate bundle energy on every feasible grid point of the allocation simplex.

    Returns ``(points, energies)`` where ``points`` has one row per grid
    point (original link order) and ``energies`` is the raw bundle sum.
    """
    n = len(bundle)
    if n > 3:
        raise NotImplementedError("brute-force search is limited to 3 links")
    caps = bundle.capacities
    if demand > caps.sum() * (1 + 1e-12):
        raise InfeasibleDemand(f"demand {demand:g} exceeds capacity {caps.sum():g}")
    step = step or caps.min() / 100
    axes = [np.arange(int(np.floor(c / step + 1e-9)) + 1) * step for c in caps[:-1]]
    if axes:
        grids = np.meshgrid(*axes, indexing="ij")
        free = np.stack([g.ravel() for g in grids], axis=1)
    else:
        free = np.zeros((1, 0))
    last = demand - free.sum(axis=1)
    tol = 1e-9 * caps[-1]
    ok = (last >= -tol) & (last <= caps[-1] + tol)
    points = np.column_stack([free[ok], np.clip(last[ok], 0.0, caps[-1])])
    energy = link_energy_at_rates(points, caps, gov, bundle.params, pkt_size,
                                  distribution).sum(axis=1)
    return points, energy


def brute_force_min(bundle: BundleSpec, demand: float, gov: GovernorSpec, pkt_size: float,
                    step: float | None = None, distribution=Distribution.POISSON,
                    rtol: float = 1e-12) -> AllocationVector:
    """Grid point of minimum analytic bundle energy.

    Points within ``rtol`` of the minimum count as ties; the lexicographically
    largest one (most traffic on the earliest links) wins.
    """
    points, energy = brute_force_sweep(bundle, demand, gov, pkt_size, step, distribution)
    best = energy.min()
    tied = points[energy <= best + rtol * abs(best)]
    winner = max(map(tuple, tied))
    return AllocationVector(winner, demand, tuple(bundle.capacities))


def allocate(strategy: str, bundle: BundleSpec, demand: float) -> AllocationVector:
    """Named static allocation: ``equitable``, ``waterfill`` or ``capped``."""
    table = {"equitable": equitable, "waterfill": waterfill, "capped": waterfill_capped}
    try:
        return table[strategy](bundle, demand)
    except KeyError:
        raise ValueError(f"unknown static strategy {strategy!r}") from None
