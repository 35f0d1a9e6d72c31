"""Testes para mse/psnr."""

import numpy as np
import pytest

from cs_fallwatch.errors import DimensionMismatchError
from cs_fallwatch.frames import Frame
from cs_fallwatch.metrics import PSNR_CAP_DB, mse, psnr


class TestMSE:
    def test_identical_frames_should_have_zero_error(self):
        frame = Frame.from_array([[1, 2], [3, 4]])
        assert mse(frame, frame) == 0.0

    def test_black_vs_white_should_be_peak_squared(self):
        """Preto contra branco → 65025."""
        assert mse(Frame.constant(4, 4, 0), Frame.constant(4, 4, 255)) == pytest.approx(65025.0)

    def test_should_average_squared_differences(self):
        """[[0,0],[0,10]] contra zeros → 100/4 = 25; ±5 uniforme → 12.5 com metade dos pixels."""
        a = Frame.from_array([[0, 0], [0, 10]])
        assert mse(a, Frame.constant(2, 2, 0)) == pytest.approx(25.0)
        b = Frame.from_array([[5, 0], [0, 5]])
        assert mse(b, Frame.constant(2, 2, 0)) == pytest.approx(12.5)

    def test_should_not_clamp_before_comparing(self):
        assert mse(Frame.constant(1, 1, -10), Frame.constant(1, 1, 0)) == pytest.approx(100.0)

    def test_should_reject_different_dimensions(self):
        with pytest.raises(DimensionMismatchError):
            mse(Frame.constant(2, 2, 0), Frame.constant(2, 3, 0))


class TestPSNR:
    def test_identical_frames_should_hit_the_cap(self):
        frame = Frame.constant(3, 3, 17)
        assert psnr(frame, frame) == PSNR_CAP_DB == 99.0

    def test_uniform_peak_difference_should_be_zero_db(self):
        value = psnr(Frame.constant(4, 4, 0), Frame.constant(4, 4, 255))
        assert abs(value - 0.0) < 1e-9

    def test_mse_of_65_025_should_give_30_db(self):
        """Diferença uniforme √65.025 → MSE 65.025 → 30 dB exatos."""
        delta = np.sqrt(65.025)
        value = psnr(Frame.constant(4, 4, 100.0 + delta), Frame.constant(4, 4, 100.0))
        assert abs(value - 30.0) < 1e-9

    def test_tiny_error_should_still_be_capped(self):
        """MSE minúsculo (PSNR teórico > 99) também devolve 99."""
        assert psnr(Frame.constant(2, 2, 1e-6), Frame.constant(2, 2, 0)) == PSNR_CAP_DB

    def test_should_be_symmetric(self):
        a = Frame.from_array([[10, 20], [30, 40]])
        b = Frame.from_array([[12, 18], [33, 40]])
        assert psnr(a, b) == psnr(b, a)
