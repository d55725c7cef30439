import time

import numpy as np
import pytest

from ward_sentinel.errors import DimensionMismatch, EmptyMask
from ward_sentinel.flow import (
    FlowField,
    farneback_flow,
    polynomial_expansion,
    roi_motion,
    to_grayscale_downsampled,
)
from ward_sentinel.geometry import RoiMask
from ward_sentinel.model import FlowParams, Frame

from conftest import shifted_pair, texture


def lsq_fit_oracle(gray, cx, cy, n, sigma):
    """Direct weighted least-squares quadratic fit at one pixel.

    Independent of the separable-correlation implementation: builds the
    design matrix over the neighborhood and solves the normal equations.
    """
    r = n // 2
    rows, targets, weights = [], [], []
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            rows.append([1.0, dx, dy, dx * dx, dy * dy, dx * dy])
            targets.append(gray[cy + dy, cx + dx])
            weights.append(np.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)))
    A = np.asarray(rows)
    w = np.asarray(weights)
    sol, *_ = np.linalg.lstsq(A * w[:, None] ** 0.5, np.asarray(targets) * w**0.5, rcond=None)
    return {"c": sol[0], "bx": sol[1], "by": sol[2], "axx": sol[3], "ayy": sol[4], "axy": sol[5]}


class TestPolynomialExpansion:
    def test_constant_image(self):
        pe = polynomial_expansion(np.full((40, 60), 55.0), 5, 1.2)
        inner = np.s_[5:-5, 5:-5]
        assert np.allclose(pe.c[inner], 55.0)
        for plane in (pe.bx, pe.by, pe.axx, pe.ayy, pe.axy):
            assert np.allclose(plane[inner], 0.0, atol=1e-10)

    def test_linear_ramp(self):
        img = np.tile(np.arange(60, dtype=float), (40, 1))
        pe = polynomial_expansion(img, 5, 1.2)
        inner = np.s_[5:-5, 5:-5]
        assert np.allclose(pe.bx[inner], 1.0, atol=1e-10)
        assert np.allclose(pe.by[inner], 0.0, atol=1e-10)
        assert np.allclose(pe.axx[inner], 0.0, atol=1e-10)

    def test_quadratic_bowl_curvature(self):
        x = np.arange(60, dtype=float)
        img = np.tile(x * x, (40, 1))
        pe = polynomial_expansion(img, 5, 1.2)
        assert abs(pe.axx[20, 30] - 1.0) <= 0.05

    def test_matches_direct_lsq_fit(self, rng):
        gray = texture(rng, 40, 60, sigma=1.5)
        pe = polynomial_expansion(gray, 5, 1.2)
        for cx, cy in [(10, 10), (30, 20), (50, 30)]:
            ref = lsq_fit_oracle(gray, cx, cy, 5, 1.2)
            assert pe.c[cy, cx] == pytest.approx(ref["c"], abs=1e-8)
            assert pe.bx[cy, cx] == pytest.approx(ref["bx"], abs=1e-8)
            assert pe.by[cy, cx] == pytest.approx(ref["by"], abs=1e-8)
            assert pe.axx[cy, cx] == pytest.approx(ref["axx"], abs=1e-8)
            assert pe.ayy[cy, cx] == pytest.approx(ref["ayy"], abs=1e-8)
            assert pe.axy[cy, cx] == pytest.approx(ref["axy"], abs=1e-8)


class TestFarnebackFlow:
    def test_identical_frames_zero_flow(self, rng):
        img = texture(rng, 270, 480)
        field = farneback_flow(img, img)
        assert field.magnitude().mean() < 1e-3

    @pytest.mark.parametrize("shift", [(3, 0), (-2, 4), (5, 5), (0, -5)])
    def test_known_integer_shift(self, rng, shift):
        prev, cur = shifted_pair(rng, *shift)
        field = farneback_flow(prev, cur)
        m = 30
        assert field.dx[m:-m, m:-m].mean() == pytest.approx(shift[0], abs=0.5)
        assert field.dy[m:-m, m:-m].mean() == pytest.approx(shift[1], abs=0.5)

    def test_translation_equivariance_small_shifts(self, rng):
        # estimates for shift s and -s mirror each other within tolerance
        prev, cur = shifted_pair(rng, 4, -3)
        fwd = farneback_flow(prev, cur)
        bwd = farneback_flow(cur, prev)
        m = 30
        assert fwd.dx[m:-m, m:-m].mean() == pytest.approx(-bwd.dx[m:-m, m:-m].mean(), abs=0.2)
        assert fwd.dy[m:-m, m:-m].mean() == pytest.approx(-bwd.dy[m:-m, m:-m].mean(), abs=0.2)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            farneback_flow(np.zeros((40, 40)), np.zeros((40, 50)))

    def test_too_small_image(self):
        with pytest.raises(DimensionMismatch):
            farneback_flow(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_small_images_drop_coarse_levels(self, rng):
        # 20px tall: only the finest level survives, still runs
        prev, cur = shifted_pair(rng, 1, 0, width=64, height=20, margin=4)
        field = farneback_flow(prev, cur)
        assert field.dx.shape == (20, 64)

    def test_throughput_under_one_second(self, rng):
        prev, cur = shifted_pair(rng, 2, 1)
        start = time.perf_counter()
        farneback_flow(prev, cur)
        assert time.perf_counter() - start < 1.0


class TestRoiMotion:
    def _field(self, dx, dy):
        return FlowField(width=dx.shape[1], height=dx.shape[0], dx=dx, dy=dy)

    def test_three_four_five(self):
        f = self._field(np.full((20, 30), 3.0), np.full((20, 30), 4.0))
        mask = RoiMask.scene(30, 20)
        assert roi_motion(f, mask) == pytest.approx(5.0)

    def test_zero_flow(self):
        f = self._field(np.zeros((20, 30)), np.zeros((20, 30)))
        assert roi_motion(f, RoiMask.scene(30, 20)) == 0.0

    def test_matches_per_pixel_sum_oracle(self, rng):
        dx = rng.normal(size=(27, 48))
        dy = rng.normal(size=(27, 48))
        bits = rng.uniform(size=(27, 48)) < 0.3
        bits[3, 7] = True  # keep non-empty
        mask = RoiMask("bed", 48, 27, bits)
        # brute force: accumulate pixel by pixel
        total, count = 0.0, 0
        for y in range(27):
            for x in range(48):
                if bits[y, x]:
                    total += (dx[y, x] ** 2 + dy[y, x] ** 2) ** 0.5
                    count += 1
        assert roi_motion(self._field(dx, dy), mask) == pytest.approx(
            total / count, abs=1e-9
        )

    def test_scaling_is_exactly_linear(self, rng):
        dx = rng.normal(size=(27, 48))
        dy = rng.normal(size=(27, 48))
        mask = RoiMask.scene(48, 27)
        base = roi_motion(self._field(dx, dy), mask)
        for k in (0.0, 0.5, 2.0, 7.25):
            scaled = roi_motion(self._field(k * dx, k * dy), mask)
            assert scaled == pytest.approx(k * base, rel=1e-12, abs=1e-12)

    def test_magnitude_of_mean_aggregation(self):
        dx = np.array([[1.0, -1.0]])
        dy = np.zeros((1, 2))
        f = self._field(dx, dy)
        mask = RoiMask.scene(2, 1)
        assert roi_motion(f, mask, "mean_magnitude") == pytest.approx(1.0)
        assert roi_motion(f, mask, "magnitude_of_mean") == pytest.approx(0.0)

    def test_empty_mask_raises(self):
        f = self._field(np.zeros((4, 4)), np.zeros((4, 4)))
        empty = RoiMask("bed", 4, 4, np.zeros((4, 4), dtype=bool))
        with pytest.raises(EmptyMask):
            roi_motion(f, empty)

    def test_dimension_mismatch(self):
        f = self._field(np.zeros((4, 4)), np.zeros((4, 4)))
        with pytest.raises(DimensionMismatch):
            roi_motion(f, RoiMask.scene(5, 5))


class TestGrayscaleDownsample:
    def _frame(self, pixels, mode):
        h, w = pixels.shape[:2]
        return Frame("s", 0, w, h, mode, pixels)

    def test_white_rgb_frame(self):
        f = self._frame(np.full((540, 960, 3), 255, dtype=np.uint8), "RGB")
        gray = to_grayscale_downsampled(f)
        assert gray.shape == (270, 480)
        assert np.allclose(gray, 255.0)

    def test_nir_passthrough_resize(self, rng):
        pixels = rng.integers(0, 256, size=(270, 480, 1), dtype=np.uint8)
        f = self._frame(pixels, "NIR")
        gray = to_grayscale_downsampled(f)
        assert np.array_equal(gray, pixels[:, :, 0].astype(float))

    def test_checkerboard_mean_preserved(self):
        board = np.indices((540, 960)).sum(axis=0) % 2 * 255
        f = self._frame(board[:, :, None].astype(np.uint8), "NIR")
        gray = to_grayscale_downsampled(f)
        assert gray.shape == (270, 480)
        assert abs(gray.mean() - board.mean()) <= 1.0

    def test_bt601_weights(self):
        pixels = np.zeros((270, 480, 3), dtype=np.uint8)
        pixels[:, :, 0] = 100  # red only
        gray = to_grayscale_downsampled(self._frame(pixels, "RGB"))
        assert np.allclose(gray, 29.9)
