import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eeebundle import experiments as ex
from eeebundle.model import GovernorSpec, LinkParams

P = LinkParams()
FRAME = GovernorSpec.frame()
BURST = GovernorSpec.burst()
US = 1e-6


class TestCsv:
    @given(st.lists(st.floats(allow_nan=False, allow_infinity=True, width=64), min_size=1,
                    max_size=20))
    def test_formatting_is_a_fixed_point(self, values):
        for v in values:
            text = ex.fmt(v)
            assert ex.fmt(float(text)) == text

    def test_round_trip(self, tmp_path):
        rows = [{"name": "a", "n": 3, "x": 1 / 3, "v": [0.1, 2e-7], "flag": True},
                {"name": "b", "n": -1, "x": float("inf"), "v": [1.0, 2.0], "flag": False}]
        path = tmp_path / "out" / "r.csv"
        text = ex.write_csv(rows, path)
        back = ex.read_csv(path)
        assert back[0]["x"] == float(ex.fmt(1 / 3)) and back[0]["n"] == 3
        assert back[1]["v"] == [1, 2] and back[1]["x"] == float("inf")
        rewritten = ex.write_csv([{k: r[k] for k in rows[0]} for r in back])
        assert rewritten == text.replace("true", "true")

    def test_nine_significant_digits(self):
        assert ex.fmt(0.98439038107692) == "0.984390381"
        assert ex.fmt(2.6447822115453846e-07) == "2.64478221e-07"


class TestModelRows:
    def test_frame_grid(self):
        loads = np.round(np.arange(0.1, 1.0, 0.1), 10)
        rows = ex.model_rows(FRAME, P, loads, [1000])
        assert len(rows) == 9
        energy = [r["energy"] for r in rows]
        toff = [r["toff"] for r in rows]
        assert np.all(np.diff(energy) > 0) and np.all(np.diff(toff) < 0)

    def test_zero_load_row(self):
        [row] = ex.model_rows(FRAME, P, [0.0], [1000])
        assert row["energy"] == P.sigma_off and row["toff"] == float("inf")

    def test_half_load_value(self):
        [row] = ex.model_rows(FRAME, P, [0.5], [1000])
        assert row["energy"] == pytest.approx(0.9844, abs=5e-5)

    def test_burst_regime_tags(self):
        rows = ex.model_rows(BURST, P, [0.1, 0.152, 0.5], [1000])
        assert [r["regime"] for r in rows] == ["low", "high", "high"]


class TestTableRows:
    def test_layout_and_values(self):
        rows = ex.table_rows()
        capped = {r["bundle_gbps"]: r for r in rows if r["strategy"] == "capped"}
        assert [capped[12.6][f"link{i}"] for i in range(1, 5)] == pytest.approx([9, 3.6, 0, 0])
        text = ex.format_table(rows)
        assert "Link #4" in text and "9.00     3.60" in text


class TestShareSweep:
    def test_minimum_at_waterfill_corner_poisson(self):
        rows = ex.share_sweep([0.25, 0.75, 1.25, 1.75], [1, 2], FRAME, n_shares=4,
                              duration=0.3, warmup=0.03)
        for load in (0.25, 0.75, 1.25, 1.75):
            sub = [r for r in rows if r["load"] == load]
            assert min(sub, key=lambda r: r["energy_mean"]) is sub[0]
            assert all(abs(r["energy_mean"] - r["energy_model"]) < 0.03 for r in sub)

    def test_minimum_at_waterfill_corner_pareto(self):
        src = ex.TrafficSource("pareto", 1000, 2.5)
        rows = ex.share_sweep([0.25, 0.75, 1.25], [1, 2], FRAME, src, n_shares=4,
                              duration=0.3, warmup=0.03)
        for load in (0.25, 0.75, 1.25):
            sub = [r for r in rows if r["load"] == load]
            assert min(sub, key=lambda r: r["energy_mean"]) is sub[0]

    def test_symmetric_shares(self):
        rows = ex.share_sweep([0.75], [1, 2, 3], FRAME, shares=[0.25, 0.5],
                              duration=0.3, warmup=0.03)
        a, b = rows
        assert (a["x1"], a["x2"]) == (0.5, 0.25) and (b["x1"], b["x2"]) == (0.25, 0.5)
        se = np.hypot(a["energy_std"], b["energy_std"]) / np.sqrt(3)
        assert abs(a["energy_mean"] - b["energy_mean"]) <= 3 * se + 1e-4

    def test_rejects_overload(self):
        with pytest.raises(ValueError):
            ex.share_sweep([2.5], [1], FRAME, duration=0.01, warmup=0.0)


class TestBundleSweep:
    def test_eight_links_mid_load_savings(self):
        rows = ex.bundle_sweep([8], [0.5], [1], FRAME, ("equitable", "waterfill"),
                               duration=0.3, warmup=0.03)
        e = {r["strategy"]: r["energy"] for r in rows}
        assert e["waterfill"] <= 0.7 * e["equitable"]

    def test_two_link_bounds(self):
        rows = ex.bundle_sweep([2], [0.1, 0.5, 0.8], [1], FRAME, duration=0.1, warmup=0.01)
        for r in rows:
            assert P.sigma_off - 1e-9 <= r["energy"] <= 1 + 1e-9

    def test_frame_approaches_burst_as_bundle_grows(self):
        loads = [0.1, 0.3, 0.7]
        gaps = []
        for n in (2, 4, 8):
            frame = ex.bundle_sweep([n], loads, [1], FRAME, ("waterfill",), duration=0.2,
                                    warmup=0.02)
            burst = ex.bundle_sweep([n], loads, [1], BURST, ("waterfill",), duration=0.2,
                                    warmup=0.02)
            gaps.append(np.mean([f["energy"] - b["energy"] for f, b in zip(frame, burst)]))
        assert gaps[0] > gaps[1] > gaps[2] >= 0


class TestDelaySweep:
    def test_energy_not_increasing_with_target(self):
        rows = ex.delay_sweep([1 * US, 2 * US, 5 * US, 10 * US, 20 * US, 50 * US], [0.6], [1],
                              FRAME, duration=1.0, warmup=0.1)
        energy = [r["energy"] for r in rows]
        assert all(b <= a + 0.01 for a, b in zip(energy, energy[1:])), energy

    def test_savings_saturate_at_low_targets(self):
        targets = [1 * US, 2 * US, 5 * US, 10 * US, 20 * US, 50 * US]
        rows = ex.delay_sweep(targets, [0.6], [1], FRAME, duration=1.0, warmup=0.1)
        e = {r["target"]: r["energy"] for r in rows}
        best_saving = e[1 * US] - min(e.values())
        assert e[1 * US] - e[10 * US] >= 0.9 * best_saving

    def test_tiny_target_uses_every_link(self):
        [row] = ex.delay_sweep([1e-9], [0.3], [1], FRAME, duration=0.5, warmup=0.05)
        assert all(x > 0.05 for x in row["link_loads"])
        spread = ex.model_rows(FRAME, P, [0.3], [1000])[0]["energy"]
        assert row["energy"] >= spread - 0.02


def test_concavity_rows_cover_grid():
    rows = ex.concavity_rows(P, [64, 9000], [0.1, 0.5])
    assert len(rows) == 5 * 2 * 2 and all(r["positive"] for r in rows)
