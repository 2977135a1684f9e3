import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redlight.images import GrayImage
from redlight.stopline import (
    BandBoundsError,
    DEFAULT_L_TH,
    OcclusionResult,
    StopLineGeometry,
    is_violation,
    longest_run,
    occlusion_score,
    rasterize_band,
    round_half_away,
)

from .conftest import flat_gray
from .oracles import float_line_y, longest_run_quadratic


class TestRounding:
    @pytest.mark.parametrize(
        "x,expected",
        [
            (0.0, 0),
            (0.5, 1),
            (1.5, 2),
            (2.4999, 2),
            (2.5, 3),
            (-0.5, -1),
            (-1.5, -2),
            (-2.4999, -2),
            (7.0, 7),
            (-7.0, -7),
        ],
    )
    def test_half_away_from_zero(self, x, expected):
        assert round_half_away(x) == expected

    @given(st.integers(-1000, 1000))
    @settings(deadline=None)
    def test_integers_fixed(self, n):
        assert round_half_away(float(n)) == n


class TestGeometryValidation:
    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            StopLineGeometry(anchor_x=0, anchor_y=0, length=0, skew_deg=0.0)

    def test_rejects_extreme_skew(self):
        with pytest.raises(ValueError):
            StopLineGeometry(anchor_x=0, anchor_y=0, length=10, skew_deg=86.0)

    def test_rejects_zero_lines(self):
        with pytest.raises(ValueError):
            StopLineGeometry(anchor_x=0, anchor_y=0, length=10, skew_deg=0.0, line_count=0)

    def test_rejects_negative_gap(self):
        with pytest.raises(ValueError):
            StopLineGeometry(anchor_x=0, anchor_y=0, length=10, skew_deg=0.0, gap_px=-1)


class TestRasterization:
    def test_axis_aligned_rows_exact(self):
        geom = StopLineGeometry(anchor_x=10, anchor_y=20, length=50, skew_deg=0.0)
        band = rasterize_band(geom, 100, 100)
        assert len(band.lines) == 5
        for k, line in enumerate(band.lines):
            assert [x for x, _ in line] == list(range(10, 60))
            assert all(y == 20 + 3 * k for _, y in line)

    def test_line_gap_offsets(self):
        geom = StopLineGeometry(anchor_x=0, anchor_y=0, length=10, skew_deg=5.0, gap_px=4)
        band = rasterize_band(geom, 50, 50)
        base = band.lines[0]
        for k, line in enumerate(band.lines):
            assert line == tuple((x, y + 4 * k) for x, y in base)

    def test_positive_skew_descends(self):
        geom = StopLineGeometry(anchor_x=0, anchor_y=10, length=100, skew_deg=10.0)
        band = rasterize_band(geom, 200, 200)
        first = band.lines[0][0]
        last = band.lines[0][-1]
        assert first == (0, 10)
        assert last[1] > 10  # y grows downward along +x

    def test_negative_skew_ascends(self):
        geom = StopLineGeometry(anchor_x=0, anchor_y=50, length=100, skew_deg=-10.0)
        band = rasterize_band(geom, 200, 200)
        assert band.lines[0][-1][1] < 50

    def test_endpoint_matches_rounded_tangent(self):
        length = 100
        for skew in (0.0, 5.0, -5.0, 10.0, -10.0, 20.0, -20.0):
            geom = StopLineGeometry(anchor_x=0, anchor_y=100, length=length, skew_deg=skew)
            band = rasterize_band(geom, 300, 300)
            dy = round_half_away((length - 1) * math.tan(math.radians(skew)))
            assert band.lines[0][-1] == (length - 1, 100 + dy)

    def test_single_sample_per_column_at_shallow_skew(self):
        geom = StopLineGeometry(anchor_x=5, anchor_y=50, length=80, skew_deg=15.0)
        band = rasterize_band(geom, 200, 200)
        for line in band.lines:
            xs = [x for x, _ in line]
            assert xs == list(range(5, 85))

    def test_within_one_pixel_of_continuous_line(self):
        for skew in (0.0, 5.0, -5.0, 10.0, -10.0, 20.0, -20.0):
            geom = StopLineGeometry(anchor_x=12, anchor_y=150, length=300, skew_deg=skew)
            band = rasterize_band(geom, 400, 400)
            for k, line in enumerate(band.lines):
                for x, y in line:
                    y_cont = float_line_y(12, 150 + 3 * k, skew, x)
                    assert abs(y - y_cont) <= 1.0, (skew, k, x, y, y_cont)

    def test_out_of_frame_names_line_and_coord(self):
        geom = StopLineGeometry(anchor_x=90, anchor_y=5, length=20, skew_deg=0.0)
        with pytest.raises(BandBoundsError) as exc_info:
            rasterize_band(geom, 100, 100)
        err = exc_info.value
        assert err.line_index == 0
        assert err.coord == (100, 5)

    def test_bottom_line_can_overflow_while_top_fits(self):
        geom = StopLineGeometry(anchor_x=0, anchor_y=97, length=10, skew_deg=0.0)
        with pytest.raises(BandBoundsError) as exc_info:
            rasterize_band(geom, 100, 100)
        assert exc_info.value.line_index == 1  # 97 + 3 = 100 leaves the frame


class TestLongestRun:
    def test_empty(self):
        assert longest_run([]) == 0

    def test_all_false(self):
        assert longest_run([False] * 9) == 0

    def test_all_true(self):
        assert longest_run([True] * 9) == 9

    def test_run_at_end(self):
        assert longest_run([True, False, True, True, True]) == 3

    @given(st.lists(st.booleans(), max_size=400))
    @settings(max_examples=500, deadline=None)
    def test_matches_quadratic_oracle(self, values):
        assert longest_run(values) == longest_run_quadratic(values)


class TestOcclusionScore:
    def _diff_with_rows(self, rows_high: dict[int, tuple[int, int]], w=100, h=50) -> GrayImage:
        """Diff image: value 200 on [x0, x1) of given rows, else 0."""
        px = np.zeros((h, w), dtype=np.uint8)
        for y, (x0, x1) in rows_high.items():
            px[y, x0:x1] = 200
        return GrayImage(px)

    def test_per_line_runs(self):
        geom = StopLineGeometry(anchor_x=10, anchor_y=20, length=60, skew_deg=0.0)
        band = rasterize_band(geom, 100, 50)
        # line 0 (y=20): 30 hot samples; line 2 (y=26): 15; others cold
        diff = self._diff_with_rows({20: (15, 45), 26: (40, 55)})
        score = occlusion_score(diff, band, pixel_th=25)
        assert score.per_line_longest_run == (30, 0, 15, 0, 0)
        assert score.mean_longest_run == 9.0
        assert score.violated is None

    def test_threshold_is_strict_on_samples(self):
        geom = StopLineGeometry(anchor_x=0, anchor_y=0, length=10, skew_deg=0.0, line_count=1)
        band = rasterize_band(geom, 10, 10)
        px = np.full((10, 10), 25, dtype=np.uint8)  # exactly pixel_th: not occluded
        assert occlusion_score(GrayImage(px), band, pixel_th=25).per_line_longest_run == (0,)
        px[0, :] = 26
        assert occlusion_score(GrayImage(px), band, pixel_th=25).per_line_longest_run == (10,)

    def test_band_outside_diff_raises(self):
        geom = StopLineGeometry(anchor_x=0, anchor_y=0, length=10, skew_deg=0.0)
        band = rasterize_band(geom, 100, 100)
        with pytest.raises(BandBoundsError):
            occlusion_score(flat_gray(0, 8, 8), band, pixel_th=25)

    def test_decided_strict_inequality(self):
        result = OcclusionResult(per_line_longest_run=(140, 140, 140, 140, 140), mean_longest_run=140.0)
        assert result.decided(140.0).violated is False
        result = OcclusionResult(per_line_longest_run=(141, 141, 141, 141, 141), mean_longest_run=141.0)
        assert result.decided(140.0).violated is True


class TestViolationRule:
    def test_strict_threshold(self):
        assert not is_violation(DEFAULT_L_TH, DEFAULT_L_TH)
        assert is_violation(DEFAULT_L_TH + 0.2, DEFAULT_L_TH)
        assert not is_violation(DEFAULT_L_TH - 0.2, DEFAULT_L_TH)
