"""Métricas de qualidade de reconstrução (MSE e PSNR na escala 0–255)."""

import math

import numpy as np

from .errors import DimensionMismatchError
from .frames import Frame

PEAK = 255.0
PSNR_CAP_DB = 99.0


def _check_dims(a: Frame, b: Frame) -> None:
    if a.dims != b.dims:
        raise DimensionMismatchError(f"Frames com dimensões diferentes: {a.dims} vs {b.dims}")


def mse(a: Frame, b: Frame) -> float:
    """Média do erro quadrático por pixel, sem clamp prévio."""
    _check_dims(a, b)
    diff = a.pixels - b.pixels
    return float(np.mean(diff * diff))


def psnr(a: Frame, b: Frame) -> float:
    """PSNR = 10·log10(255²/MSE) em dB, limitado a 99 dB (inclusive MSE = 0)."""
    error = mse(a, b)
    if error == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(PEAK * PEAK / error))
