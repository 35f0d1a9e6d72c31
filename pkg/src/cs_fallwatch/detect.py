"""Detecção de frames com objeto no domínio das medições e máscaras de frente.

A estatística de detecção é a energia relativa ‖y_t − y_bg‖₂ / ‖y_bg‖₂: como Φ
é linear e tem linhas ortonormais, diferenças de medições acompanham
diferenças de cena sem reconstruir nada.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import DetectionError, DimensionMismatchError, PartialMeasurementError
from .frames import Frame
from .sensing import MeasurementSet

logger = logging.getLogger(__name__)

SCORE_EPSILON = 1e-9
DEFAULT_TAU_FLOOR = 0.02
CALIBRATION_SIGMAS = 4.0
MAJORITY = 5


@dataclass(frozen=True)
class BackgroundModel:
    """Fundo em média móvel no domínio das medições."""

    y_bg: MeasurementSet
    alpha: float
    tau: float
    version: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise DetectionError(f"alpha fora de [0, 1]: {self.alpha}")
        if not self.tau > 0:
            raise DetectionError(f"tau deve ser > 0, recebido {self.tau}")
        if not self.y_bg.is_complete:
            raise PartialMeasurementError("O fundo exige um conjunto completo de medições")

    @classmethod
    def initial(cls, y0: MeasurementSet, alpha: float, tau: float = DEFAULT_TAU_FLOOR) -> "BackgroundModel":
        return cls(y_bg=y0, alpha=alpha, tau=tau)


@dataclass(frozen=True)
class ForegroundMask:
    mask: np.ndarray
    bbox: tuple[int, int, int, int] | None
    pixel_count: int

    @property
    def is_empty(self) -> bool:
        return self.pixel_count == 0


def _check_seed(model: BackgroundModel, y_t: MeasurementSet) -> None:
    if y_t.matrix_seed != model.y_bg.matrix_seed:
        raise DetectionError(
            f"Seed das medições ({y_t.matrix_seed}) difere da seed do fundo ({model.y_bg.matrix_seed})"
        )


def update_background(model: BackgroundModel, y_t: MeasurementSet) -> BackgroundModel:
    """y_bg ← (1−alpha)·y_bg + alpha·y_t (apenas conjuntos completos)."""
    _check_seed(model, y_t)
    if not y_t.is_complete or len(y_t) != len(model.y_bg):
        raise PartialMeasurementError(
            f"Frame {y_t.frame_id} com {len(y_t)} de {model.y_bg.total_rows} medições"
        )
    values = (1.0 - model.alpha) * model.y_bg.values + model.alpha * y_t.values
    return replace(
        model,
        y_bg=replace(model.y_bg, values=values, frame_id=y_t.frame_id),
        version=model.version + 1,
    )


def score_frame(model: BackgroundModel, y_t: MeasurementSet) -> float:
    """Energia relativa da diferença, restrita aos índices recebidos em y_t."""
    _check_seed(model, y_t)
    _, bg_pos, t_pos = np.intersect1d(
        model.y_bg.row_indices, y_t.row_indices, assume_unique=True, return_indices=True
    )
    background = model.y_bg.values[bg_pos]
    diff = y_t.values[t_pos] - background
    return float(np.linalg.norm(diff) / (np.linalg.norm(background) + SCORE_EPSILON))


def flag_frames(scores: list[float], tau: float) -> list[bool]:
    """Marca como "com objeto" os frames com score > tau."""
    if not tau > 0:
        raise DetectionError(f"tau deve ser > 0, recebido {tau}")
    return [score > tau for score in scores]


def calibrate_tau(scores: list[float], floor: float = DEFAULT_TAU_FLOOR) -> float:
    """tau = média + 4·desvio dos scores de frames sem objeto (mínimo ``floor``)."""
    if not floor > 0:
        raise DetectionError(f"tau_floor deve ser > 0, recebido {floor}")
    if not scores:
        return floor
    values = np.asarray(scores, dtype=np.float64)
    return max(float(values.mean() + CALIBRATION_SIGMAS * values.std()), floor)


def spatial_foreground(frame: Frame, background: Frame, pixel_tau: float) -> ForegroundMask:
    """Subtração de fundo por pixel seguida de uma passada de voto 3×3."""
    if frame.dims != background.dims:
        raise DimensionMismatchError(
            f"Frame {frame.dims} e fundo {background.dims} com dimensões diferentes"
        )
    if not pixel_tau > 0:
        raise DetectionError(f"pixel_tau deve ser > 0, recebido {pixel_tau}")

    raw = np.abs(frame.pixels - background.pixels) > pixel_tau
    votes = ndimage.convolve(raw.astype(np.int32), np.ones((3, 3), dtype=np.int32), mode="constant")
    mask = votes >= MAJORITY

    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    bbox = None
    if rows.size:
        bbox = (int(rows[0]), int(cols[0]), int(rows[-1]), int(cols[-1]))
    mask.setflags(write=False)
    return ForegroundMask(mask=mask, bbox=bbox, pixel_count=int(mask.sum()))
