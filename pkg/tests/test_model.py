import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eeebundle.model import (CONCAVITY_VARIANTS, Distribution, GovernorSpec, LinkParams,
                             ModelDomainError, TrafficSpec, bundle_energy, concavity_grid,
                             concavity_margin, energy_second_derivative_grid, link_energy,
                             rho_star, toff, toff_burst_high, toff_burst_low, toff_curve,
                             toff_frame)

P = LinkParams()
MU = 1.25e6  # 1000 B frames on 10 Gb/s
POI, GEN = Distribution.POISSON, Distribution.GENERAL
BURST = GovernorSpec.burst(20, 100e-6)
FRAME = GovernorSpec.frame()

# frozen from an mpmath evaluation at 30 digits: exp(-1.8) / 6.25e5
TOFF_FRAME_HALF = 2.6447822115453846e-07
# 1 - 0.9 * 0.5 * T / (T + 7.36e-6) with T as above
ENERGY_FRAME_HALF = 0.9843903810769203


def spec(load, dist=POI, mu=MU):
    return TrafficSpec(mu, load, dist)


def test_frozen_constants_against_mpmath():
    mpmath.mp.dps = 30
    t = mpmath.exp(-mpmath.mpf("1.8")) / mpmath.mpf("6.25e5")
    e = 1 - mpmath.mpf("0.45") * t / (t + mpmath.mpf("7.36e-6"))
    assert float(t) == pytest.approx(TOFF_FRAME_HALF, rel=1e-15)
    assert float(e) == pytest.approx(ENERGY_FRAME_HALF, rel=1e-15)


class TestToffFrame:
    def test_poisson_example(self):
        assert toff_frame(spec(0.5), P) == pytest.approx(TOFF_FRAME_HALF, rel=1e-12)

    def test_general_clamps_above_threshold(self):
        threshold = 1 / (MU * P.ts)
        assert threshold == pytest.approx(0.2777777, rel=1e-6)
        assert toff_frame(spec(threshold, GEN), P) == pytest.approx(0.0, abs=1e-20)
        assert toff_frame(spec(0.9, GEN), P) == 0.0

    def test_general_example(self):
        assert toff_frame(spec(0.1, GEN), P) == pytest.approx(5.12e-6, rel=1e-12)

    def test_zero_load_is_a_domain_error(self):
        with pytest.raises(ModelDomainError):
            toff_frame(spec(0.0), P)

    def test_poisson_strictly_decreasing(self):
        loads = np.linspace(0.01, 0.99, 100)
        assert np.all(np.diff(toff_frame(spec(loads), P)) < 0)


class TestBurst:
    def test_low_example(self):
        assert toff_burst_low(spec(0.1), BURST, P) == pytest.approx(1.0512e-4, rel=1e-12)

    def test_low_is_frame_approx_plus_tmax(self):
        for rho in (0.02, 0.1, 0.15):
            frame = toff_frame(spec(rho, GEN), P)
            assert toff_burst_low(spec(rho), BURST, P) == pytest.approx(frame + BURST.tmax)

    def test_low_with_zero_timer_is_frame_approx(self):
        gov = GovernorSpec.burst(20, 1e-300)
        assert toff_burst_low(spec(0.1), gov, P) == pytest.approx(toff_frame(spec(0.1, GEN), P))

    def test_low_continuous_near_threshold(self):
        rs = rho_star(BURST, spec(0.5))
        below = toff_burst_low(spec(np.array([rs - 1e-6, rs - 2e-6])), BURST, P)
        assert np.all(below > 0) and abs(below[0] - below[1]) < 1e-9

    def test_high_general_example(self):
        assert toff_burst_high(spec(0.5, GEN), BURST, P) == pytest.approx(2.912e-5, rel=1e-12)

    def test_high_poisson_close_to_general(self):
        exact = toff_burst_high(spec(0.5), BURST, P)
        assert exact == pytest.approx(2.912e-5, rel=0.01)

    def test_high_poisson_monte_carlo(self):
        # Qw-th arrival epoch is Erlang(Qw, lam); idle time is that epoch less Ts, if positive
        rng = np.random.default_rng(2024)
        lam = MU * 0.5
        epochs = rng.gamma(BURST.qw, 1 / lam, size=400_000)
        mc = np.maximum(epochs - P.ts, 0).mean()
        assert toff_burst_high(spec(0.5), BURST, P) == pytest.approx(mc, rel=0.005)

    def test_high_poisson_monte_carlo_near_clamp(self):
        rng = np.random.default_rng(7)
        gov = GovernorSpec.burst(3, 100e-6)
        mu = P.service_rate(64)
        lam = mu * 0.8
        epochs = rng.gamma(gov.qw, 1 / lam, size=400_000)
        mc = np.maximum(epochs - P.ts, 0).mean()
        assert toff_burst_high(spec(0.8, mu=mu), gov, P) == pytest.approx(mc, rel=0.02)

    def test_regime_gap_at_threshold(self):
        rs = rho_star(BURST, spec(0.5))
        low = toff_burst_low(spec(rs), BURST, P)
        high = toff_burst_high(spec(rs), BURST, P)
        gap = abs(low - high) / max(low, high)
        assert gap < 0.2, f"relative gap at rho* is {gap:.4f}"

    def test_requires_burst_governor(self):
        with pytest.raises(ValueError):
            toff_burst_high(spec(0.5), FRAME, P)


@given(st.floats(1e-3, 0.999))
def test_single_frame_burst_is_frame_transmission(rho):
    gov = GovernorSpec.burst(1, 100e-6)
    a = toff_burst_high(spec(rho), gov, P)
    b = toff_frame(spec(rho), P)
    assert a == pytest.approx(b, rel=1e-9)


class TestRhoStar:
    def test_example(self):
        assert rho_star(BURST, spec(0.5)) == pytest.approx(0.152, rel=1e-12)

    def test_single_frame_burst(self):
        assert rho_star(GovernorSpec.burst(1, 1e-4), spec(0.5)) == 0.0

    def test_long_timer_limit(self):
        assert rho_star(GovernorSpec.burst(20, 1e6), spec(0.5)) < 1e-10

    def test_clamped_to_one(self):
        assert rho_star(GovernorSpec.burst(64, 1e-6), spec(0.5)) == 1.0


class TestDispatch:
    def test_frame(self):
        assert toff(spec(0.3), FRAME, P) == toff_frame(spec(0.3), P)

    def test_burst_low(self):
        assert toff(spec(0.05), BURST, P) == toff_burst_low(spec(0.05), BURST, P)

    def test_burst_high(self):
        assert toff(spec(0.5), BURST, P) == toff_burst_high(spec(0.5), BURST, P)

    def test_threshold_goes_high(self):
        rs = rho_star(BURST, spec(0.5))
        assert toff(spec(rs), BURST, P) == toff_burst_high(spec(rs), BURST, P)

    def test_vector_matches_scalar(self):
        loads = np.array([0.05, 0.1, 0.152, 0.3, 0.9])
        vec = toff(spec(loads), BURST, P)
        assert np.allclose(vec, [toff(spec(x), BURST, P) for x in loads], rtol=1e-15)


class TestLinkEnergy:
    def test_example(self):
        assert link_energy(spec(0.5), FRAME, P) == pytest.approx(ENERGY_FRAME_HALF, rel=1e-12)

    @pytest.mark.parametrize("gov", [FRAME, BURST])
    def test_zero_load(self, gov):
        assert link_energy(spec(0.0), gov, P) == P.sigma_off

    @pytest.mark.parametrize("gov", [FRAME, BURST])
    def test_full_load(self, gov):
        assert link_energy(spec(1.0), gov, P) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("gov", [FRAME, BURST])
    def test_limit_at_tiny_load(self, gov):
        assert link_energy(spec(1e-9), gov, P) == pytest.approx(P.sigma_off, abs=1e-3)

    @given(st.floats(0.0, 1.0), st.sampled_from([FRAME, BURST]), st.sampled_from([POI, GEN]))
    def test_bounds(self, rho, gov, dist):
        e = link_energy(spec(rho, dist), gov, P)
        assert P.sigma_off - 1e-12 <= e <= 1 + 1e-12


class TestBundleEnergy:
    def test_all_idle(self):
        assert bundle_energy([0, 0, 0, 0], FRAME, P, 1000).total == pytest.approx(4 * P.sigma_off)

    def test_all_saturated(self):
        e = bundle_energy([10e9] * 4, BURST, P, 1000)
        assert e.total == pytest.approx(4.0)
        assert e.normalized == pytest.approx(1.0)

    def test_concentrating_beats_spreading(self):
        wf = bundle_energy([5e9, 0], FRAME, P, 1000).total
        eq = bundle_energy([2.5e9, 2.5e9], FRAME, P, 1000).total
        assert wf < eq

    def test_rate_out_of_range(self):
        with pytest.raises(ValueError):
            bundle_energy([11e9, 0], FRAME, P, 1000)


class TestConcavity:
    def test_constant_function_gives_zero(self):
        assert concavity_margin(lambda x: 3.0, 1e-6, 0.5) == 0.0

    def test_edge_of_domain_raises(self):
        with pytest.raises(ArithmeticError):
            concavity_margin(lambda x: x, 1.0, 1.5e-4)

    def test_frame_poisson_analytic_point(self):
        # mu*rho*Ts = 1.8 with 1000 B frames
        rho = 1.8 / (MU * P.ts)
        lam = lambda r: MU * r
        f = lambda r: math.exp(-lam(r) * P.ts) / lam(r)
        df = lambda r: -f(r) * (MU * P.ts + 1 / r)
        d2f = lambda r: f(r) * ((MU * P.ts + 1 / r) ** 2 + 1 / r ** 2)
        analytic = concavity_margin(f, P.transition_time, rho, df=df, d2f=d2f)
        numeric = concavity_margin(f, P.transition_time, rho)
        assert analytic > 0
        assert numeric == pytest.approx(analytic, rel=1e-4)

    def test_frame_general_sign(self):
        for rho in np.linspace(0.01, 0.99, 99):
            f = toff_curve("frame-general", P, 1000)
            assert concavity_margin(f, P.transition_time, rho) > 0

    @pytest.mark.parametrize("variant", CONCAVITY_VARIANTS)
    def test_grid_positive(self, variant):
        loads = np.round(np.arange(1, 100) / 100, 10)
        grid = concavity_grid(variant, P, [64, 512, 1500, 9000], loads, BURST)
        assert np.all(grid > 0), f"{variant}: min margin {grid.min():.3e}"

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            toff_curve("nope", P, 1000)


class TestSecondDerivativeGrid:
    loads = np.round(np.arange(1, 100) / 100, 10)

    def test_frame_poisson_nonnegative(self):
        grid = energy_second_derivative_grid(FRAME, P, [64, 512, 1500, 9000], self.loads)
        assert np.all(grid >= 0)

    def test_burst_low_nonnegative(self):
        grid = energy_second_derivative_grid(BURST, P, [64, 512, 1500, 9000], self.loads,
                                             regime="low")
        assert np.all(grid >= 0)

    def test_matches_analytic_differentiation(self):
        mpmath.mp.dps = 40
        mu, ts, b = mpmath.mpf(MU), mpmath.mpf(P.ts), mpmath.mpf(P.transition_time)

        def h(r):
            t = mpmath.exp(-mu * r * ts) / (mu * r)
            return t / (t + b)

        rho = 0.3
        exact = float(mpmath.diff(h, mpmath.mpf(rho), 2))
        fd = energy_second_derivative_grid(FRAME, P, [1000], [rho])[0, 0]
        assert fd == pytest.approx(exact, rel=1e-4)

    def test_edge_rejected(self):
        with pytest.raises(ArithmeticError):
            energy_second_derivative_grid(FRAME, P, [1000], [1e-4])
