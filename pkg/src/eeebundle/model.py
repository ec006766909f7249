"""Analytic energy model of a single EEE link and of a bundle of links.

All T_off functions are vectorized over ``TrafficSpec.load``: pass a float to
get a float back, or an array to get an array.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .gamma import gammaincc


class ModelDomainError(ValueError):
    """Raised when a T_off formula is evaluated outside its domain."""


@dataclass(frozen=True)
class LinkParams:
    """Capacity and EEE hardware constants of one link.

    Defaults are the 10GBASE-T profile: 10 Gb/s, Ts = 2.88 us, Tw = 4.48 us,
    idle power at 10% of active power.
    """

    capacity_bps: float = 10e9
    ts: float = 2.88e-6
    tw: float = 4.48e-6
    sigma_off: float = 0.1

    def __post_init__(self):
        if not self.capacity_bps > 0:
            raise ValueError(f"capacity_bps must be positive, got {self.capacity_bps}")
        if not self.ts > 0 or not self.tw > 0:
            raise ValueError("transition times ts and tw must be positive")
        if not 0 <= self.sigma_off < 1:
            raise ValueError(f"sigma_off must lie in [0, 1), got {self.sigma_off}")

    @property
    def transition_time(self) -> float:
        """Ts + Tw, the ``b`` constant of the concavity condition."""
        return self.ts + self.tw

    @property
    def idle_saving(self) -> float:
        """1 - sigma_off, the ``a`` constant of the concavity condition."""
        return 1.0 - self.sigma_off

    def service_rate(self, pkt_size: float) -> float:
        """Frames per second the link serves at full rate for ``pkt_size`` bytes."""
        return self.capacity_bps / (8.0 * pkt_size)

    def with_capacity(self, capacity_bps: float) -> "LinkParams":
        return LinkParams(capacity_bps, self.ts, self.tw, self.sigma_off)


class Governor(str, enum.Enum):
    FRAME = "frame"
    BURST = "burst"


@dataclass(frozen=True)
class GovernorSpec:
    """Sleep governor: frame transmission, or burst transmission with (qw, tmax)."""

    kind: Governor = Governor.FRAME
    qw: int | None = None
    tmax: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Governor(self.kind))
        if self.kind is Governor.BURST:
            if self.qw is None or self.tmax is None:
                raise ValueError("burst governor needs qw and tmax")
            if int(self.qw) != self.qw or self.qw < 1:
                raise ValueError(f"qw must be an integer >= 1, got {self.qw}")
            if not self.tmax > 0:
                raise ValueError(f"tmax must be positive, got {self.tmax}")
            object.__setattr__(self, "qw", int(self.qw))

    @classmethod
    def frame(cls) -> "GovernorSpec":
        return cls(Governor.FRAME)

    @classmethod
    def burst(cls, qw: int = 20, tmax: float = 100e-6) -> "GovernorSpec":
        return cls(Governor.BURST, qw, tmax)

    @property
    def is_burst(self) -> bool:
        return self.kind is Governor.BURST


class Distribution(str, enum.Enum):
    POISSON = "poisson"
    GENERAL = "general"


@dataclass(frozen=True)
class TrafficSpec:
    """Offered traffic on one link: service rate mu, load rho and arrival family."""

    mean_service_rate: float
    load: float | np.ndarray
    distribution: Distribution = Distribution.POISSON

    def __post_init__(self):
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        if not self.mean_service_rate > 0:
            raise ValueError("mean_service_rate must be positive")
        load = np.asarray(self.load, dtype=float)
        if np.any(load < 0) or np.any(load > 1) or np.any(np.isnan(load)):
            raise ValueError("load must lie in [0, 1]")

    @classmethod
    def for_packets(cls, params: LinkParams, pkt_size: float, load,
                    distribution=Distribution.POISSON) -> "TrafficSpec":
        return cls(params.service_rate(pkt_size), load, distribution)


def _arrival_rate(spec: TrafficSpec):
    load = np.asarray(spec.load, dtype=float)
    if np.any(load == 0):
        raise ModelDomainError("T_off is unbounded at zero load; use link_energy for the limit")
    return spec.mean_service_rate * load


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def toff_frame(spec: TrafficSpec, params: LinkParams):
    """Mean idle sojourn per sleep cycle under frame transmission.

    Poisson arrivals use the exact ``exp(-lam*Ts)/lam``; anything else uses
    the ``(1/lam - Ts)^+`` approximation.
    """
    lam = _arrival_rate(spec)
    if spec.distribution is Distribution.POISSON:
        return _out(np.exp(-lam * params.ts) / lam)
    return _out(np.maximum(1.0 / lam - params.ts, 0.0))


def toff_burst_low(spec: TrafficSpec, gov: GovernorSpec, params: LinkParams):
    """Timer-driven regime: ``1/lam + Tmax - Ts`` (exact for Poisson)."""
    _require_burst(gov)
    lam = _arrival_rate(spec)
    return _out(np.maximum(1.0 / lam + gov.tmax - params.ts, 0.0))


def toff_burst_high(spec: TrafficSpec, gov: GovernorSpec, params: LinkParams):
    """Count-driven regime: sojourn until the Qw-th arrival, less Ts.

    Poisson uses the Erlang expectation written with incomplete Gamma
    functions, ``[G(Qw+1, x) - x G(Qw, x)] / (lam G(Qw))`` with x = lam*Ts.
    """
    _require_burst(gov)
    lam = _arrival_rate(spec)
    qw = gov.qw
    if spec.distribution is Distribution.POISSON:
        x = lam * params.ts
        # G(Qw+1, x) / G(Qw) = Qw * Q(Qw+1, x)
        num = qw * gammaincc(qw + 1, x) - x * gammaincc(qw, x)
        return _out(np.maximum(num, 0.0) / lam)
    return _out(np.maximum(qw / lam - params.ts, 0.0))


def rho_star(gov: GovernorSpec, spec: TrafficSpec) -> float:
    """Load threshold ``(Qw - 1) / (mu Tmax)`` between burst regimes, clamped to [0, 1]."""
    _require_burst(gov)
    value = (gov.qw - 1) / (spec.mean_service_rate * gov.tmax)
    return float(min(max(value, 0.0), 1.0))


def toff(spec: TrafficSpec, gov: GovernorSpec, params: LinkParams):
    """Regime dispatcher: frame, burst-low when rho < rho*, burst-high otherwise."""
    if not gov.is_burst:
        return toff_frame(spec, params)
    threshold = rho_star(gov, spec)
    load = np.asarray(spec.load, dtype=float)
    if load.ndim == 0:
        if load < threshold:
            return toff_burst_low(spec, gov, params)
        return toff_burst_high(spec, gov, params)
    low = load < threshold
    out = np.empty_like(load)
    if np.any(low):
        out[low] = toff_burst_low(_subset(spec, load[low]), gov, params)
    if np.any(~low):
        out[~low] = toff_burst_high(_subset(spec, load[~low]), gov, params)
    return out


def _subset(spec: TrafficSpec, load) -> TrafficSpec:
    return TrafficSpec(spec.mean_service_rate, load, spec.distribution)


def _require_burst(gov: GovernorSpec):
    if not gov.is_burst:
        raise ValueError("this T_off formula requires a burst governor")


def energy_from_toff(load, t_off, params: LinkParams):
    """Normalized link power ``1 - (1 - sigma_off)(1 - rho) T_off / (T_off + Ts + Tw)``."""
    t_off = np.asarray(t_off, dtype=float)
    with np.errstate(invalid="ignore"):
        share = np.where(np.isinf(t_off), 1.0, t_off / (t_off + params.transition_time))
    return _out(1.0 - params.idle_saving * (1.0 - np.asarray(load)) * share)


def link_energy(spec: TrafficSpec, gov: GovernorSpec, params: LinkParams):
    """Normalized power of one link, in [sigma_off, 1].

    Zero load returns the T_off -> infinity limit sigma_off instead of
    dividing by zero.
    """
    load = np.asarray(spec.load, dtype=float)
    out = np.full_like(load, params.sigma_off, dtype=float)
    busy = load > 0
    if np.any(busy):
        sub = _subset(spec, load[busy] if load.ndim else float(load))
        with np.errstate(over="ignore"):
            t_off = np.asarray(toff(sub, gov, params))
        out[busy] = energy_from_toff(load[busy], t_off, params)
    return _out(out)


class BundleEnergy(NamedTuple):
    total: float
    normalized: float
    per_link: np.ndarray


def link_energy_at_rates(rates, capacities, gov: GovernorSpec, params: LinkParams,
                         pkt_size: float, distribution=Distribution.POISSON):
    """Elementwise link energy for offered rates in bits/s on links of given capacity."""
    rates = np.asarray(rates, dtype=float)
    caps = np.broadcast_to(np.asarray(capacities, dtype=float), rates.shape)
    tol = 1e-9 * caps
    if np.any(rates < -tol) or np.any(rates > caps + tol):
        raise ValueError("every rate must lie in [0, C]")
    load = np.clip(rates / caps, 0.0, 1.0)
    out = np.empty_like(load)
    for cap in np.unique(caps):
        sel = caps == cap
        mu = cap / (8.0 * pkt_size)
        out[sel] = link_energy(TrafficSpec(mu, load[sel], distribution), gov, params)
    return out


def bundle_energy(alloc, gov: GovernorSpec, params: LinkParams, pkt_size: float,
                  distribution=Distribution.POISSON) -> BundleEnergy:
    """Bundle power: raw sum of link energies and its mean over links.

    ``alloc`` is an AllocationVector or a plain sequence of rates (then every
    link has ``params.capacity_bps``).
    """
    rates = np.asarray(getattr(alloc, "rates", alloc), dtype=float)
    caps = getattr(alloc, "capacities", None)
    if caps is None:
        caps = np.full_like(rates, params.capacity_bps)
    per_link = link_energy_at_rates(rates, caps, gov, params, pkt_size, distribution)
    total = float(per_link.sum())
    return BundleEnergy(total, total / len(per_link), per_link)


# --- concavity ---------------------------------------------------------------

FD_STEP = 1e-4


def _central_derivatives(f: Callable[[float], float], x: float, h: float):
    f0 = f(x)
    fp, fm = f(x + h), f(x - h)
    return f0, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


def concavity_margin(f: Callable[[float], float], b: float, x: float, *,
                     df: Callable[[float], float] | None = None,
                     d2f: Callable[[float], float] | None = None,
                     h: float = FD_STEP, domain: tuple[float, float] = (0.0, 1.0)) -> float:
    """Return ``f''(x) (f(x) + b) - 2 f'(x)^2``.

    A positive value certifies that ``1 - a(1 - x) f / (f + b)`` is concave at
    ``x``. Derivatives not supplied are taken by central differences.
    """
    if df is not None and d2f is not None:
        f0, f1, f2 = f(x), df(x), d2f(x)
    else:
        lo, hi = domain
        if x - 2 * h < lo or x + 2 * h > hi:
            raise ArithmeticError(f"x={x} is within 2h of the domain edge {domain}")
        f0, f1, f2 = _central_derivatives(f, x, h)
        if df is not None:
            f1 = df(x)
        if d2f is not None:
            f2 = d2f(x)
    return f2 * (f0 + b) - 2.0 * f1 * f1


CONCAVITY_VARIANTS = (
    "frame-poisson",
    "frame-general",
    "burst-low",
    "burst-high-general",
    "burst-high-poisson",
)


def toff_curve(variant: str, params: LinkParams, pkt_size: float,
               gov: GovernorSpec | None = None) -> Callable[[float], float]:
    """Smooth T_off(rho) for one analysed case, without the ``(.)^+`` clamp.

    The unclamped expressions are the ones whose concavity condition is
    analysed; the clamp only adds a flat, trivially concave piece.
    """
    mu = params.service_rate(pkt_size)
    ts = params.ts
    if variant == "frame-poisson":
        return lambda r: float(np.exp(-mu * r * ts) / (mu * r))
    if variant == "frame-general":
        return lambda r: 1.0 / (mu * r) - ts
    gov = gov or GovernorSpec.burst()
    if variant == "burst-low":
        return lambda r: 1.0 / (mu * r) + gov.tmax - ts
    if variant == "burst-high-general":
        return lambda r: gov.qw / (mu * r) - ts
    if variant == "burst-high-poisson":
        qw = gov.qw

        def f(r):
            x = mu * r * ts
            return (qw * gammaincc(qw + 1, x) - x * gammaincc(qw, x)) / (mu * r)

        return f
    raise ValueError(f"unknown variant {variant!r}; expected one of {CONCAVITY_VARIANTS}")


def concavity_grid(variant: str, params: LinkParams, pkt_sizes: Sequence[float],
                   loads: Sequence[float], gov: GovernorSpec | None = None,
                   h: float = FD_STEP) -> np.ndarray:
    """Concavity margins on a (pkt_size x load) grid, by central differences."""
    out = np.empty((len(pkt_sizes), len(loads)))
    for i, pkt in enumerate(pkt_sizes):
        f = toff_curve(variant, params, pkt, gov)
        for j, rho in enumerate(loads):
            out[i, j] = concavity_margin(f, params.transition_time, rho, h=h)
    return out


def energy_second_derivative_grid(gov: GovernorSpec, params: LinkParams,
                                  pkt_sizes: Sequence[float], loads: Sequence[float],
                                  distribution=Distribution.POISSON,
                                  regime: str | None = None, h: float = FD_STEP) -> np.ndarray:
    """Central-difference h''(rho) of ``h = T_off / (T_off + Ts + Tw)``.

    ``regime`` pins a burst governor to ``"low"`` or ``"high"``; by default
    the regime dispatcher decides per point. Rows are packet sizes.
    """
    loads = np.asarray(loads, dtype=float)
    if np.any(loads - 2 * h < 0) or np.any(loads + 2 * h > 1):
        raise ArithmeticError("grid loads must stay 2h away from 0 and 1")
    if regime not in (None, "low", "high"):
        raise ValueError(f"regime must be None, 'low' or 'high', got {regime!r}")
    fn = {None: lambda s: toff(s, gov, params),
          "low": lambda s: toff_burst_low(s, gov, params),
          "high": lambda s: toff_burst_high(s, gov, params)}[regime]
    b = params.transition_time
    out = np.empty((len(pkt_sizes), len(loads)))
    for i, pkt in enumerate(pkt_sizes):
        mu = params.service_rate(pkt)

        def hfun(r):
            t = np.asarray(fn(TrafficSpec(mu, r, distribution)))
            return t / (t + b)

        out[i] = (hfun(loads + h) - 2 * hfun(loads) + hfun(loads - h)) / (h * h)
    return out
