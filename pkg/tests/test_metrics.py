"""PSNR, rate-curve comparison and the report figures."""

import math

import numpy as np
import pytest

from rdmc import BdRateError, Frame, RdPoint, bd_rate, psnr
from rdmc.metrics import format_db
from rdmc.plotting import plot_rd_curve, plot_rd_curves


def frame_of(value, shape=(16, 16)):
    return Frame(np.full(shape, value, dtype=np.uint8))


class TestPsnr:
    def test_identical_frames_are_infinite(self):
        rng = np.random.default_rng(0)
        f = Frame(rng.integers(0, 256, (20, 20), dtype=np.uint8))
        assert psnr(f, f) == math.inf

    def test_full_swing_error_is_zero_db(self):
        assert psnr(frame_of(0), frame_of(255)) == 0.0

    def test_unit_error(self):
        assert psnr(frame_of(100), frame_of(101)) == pytest.approx(
            10 * math.log10(255**2), rel=1e-12
        )

    def test_matches_formula_on_random_frames(self):
        rng = np.random.default_rng(1)
        a = Frame(rng.integers(0, 256, (32, 32), dtype=np.uint8))
        b = Frame(rng.integers(0, 256, (32, 32), dtype=np.uint8))
        err = np.mean(
            (a.samples.astype(np.float64) - b.samples.astype(np.float64)) ** 2
        )
        assert psnr(a, b) == pytest.approx(10 * math.log10(255**2 / err), rel=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            psnr(frame_of(0), frame_of(0, shape=(16, 17)))


class TestFormatDb:
    def test_renders_inf(self):
        assert format_db(math.inf) == "inf"

    def test_four_decimals(self):
        assert format_db(42.125) == "42.1250"
        assert format_db(0.0) == "0.0000"


def curve(scale=1.0):
    return [
        RdPoint(0.1 * scale, 30.0),
        RdPoint(0.2 * scale, 33.0),
        RdPoint(0.4 * scale, 36.0),
        RdPoint(0.8 * scale, 39.0),
    ]


class TestBdRate:
    def test_identical_curves_give_exact_zero(self):
        assert bd_rate(curve(), curve()) == 0.0

    def test_uniform_ten_percent_shift(self):
        assert bd_rate(curve(), curve(1.10)) == pytest.approx(10.0, abs=1e-9)

    def test_reverse_direction(self):
        assert bd_rate(curve(1.10), curve()) == pytest.approx(
            (1 / 1.10 - 1) * 100, abs=1e-9
        )

    def test_rate_halving(self):
        assert bd_rate(curve(), curve(0.5)) == pytest.approx(-50.0, abs=1e-9)

    def test_higher_quality_at_same_rate_is_negative(self):
        better = [RdPoint(p.bpp, p.quality + 1.0) for p in curve()]
        assert bd_rate(curve(), better) < 0.0

    def test_requires_four_points(self):
        with pytest.raises(BdRateError, match="curve_b has 3 points"):
            bd_rate(curve(), curve()[:3])
        with pytest.raises(BdRateError, match="curve_a has 0 points"):
            bd_rate([], curve())

    def test_rejects_non_positive_rates(self):
        bad = [RdPoint(0.0, 30.0)] + curve()[1:]
        with pytest.raises(BdRateError, match="rates must be positive"):
            bd_rate(bad, curve())

    def test_rejects_disjoint_quality_ranges(self):
        high = [RdPoint(p.bpp, p.quality + 20.0) for p in curve()]
        with pytest.raises(BdRateError, match="do not overlap"):
            bd_rate(curve(), high)

    def test_uses_unordered_points(self):
        shuffled = [curve()[2], curve()[0], curve()[3], curve()[1]]
        assert bd_rate(shuffled, curve(1.10)) == pytest.approx(10.0, abs=1e-9)


class TestPlotting:
    def test_single_curve_renders_png(self, tmp_path):
        path = tmp_path / "rd.png"
        plot_rd_curve(curve(), path, title="sweep")
        data = path.read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(data) > 1000

    def test_multi_curve_renders_png(self, tmp_path):
        path = tmp_path / "cmp.png"
        plot_rd_curves({"anchor": curve(), "test": curve(1.1)}, path)
        assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
