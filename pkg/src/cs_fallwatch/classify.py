"""Classificação queda / não-queda sobre frames com objeto.

O contrato é plugável; o modelo base é uma regressão logística sobre quatro
atributos de forma adimensionais extraídos da máscara de frente.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .detect import ForegroundMask, spatial_foreground
from .errors import (
    ClassificationError,
    LengthMismatchError,
    ModelFileError,
    NoObjectError,
    SingleClassDatasetError,
)
from .frames import Frame, load_sequence

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("aspect_ratio", "fill_ratio", "orientation", "normalized_centroid_height")

TRAIN_EPOCHS = 500
LEARNING_RATE = 0.1
DEFAULT_THRESHOLD = 0.5

Decision = Literal["Fall", "NoFall"]


@dataclass(frozen=True)
class FeatureVector:
    aspect_ratio: float
    fill_ratio: float
    orientation: float
    normalized_centroid_height: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)


@dataclass(frozen=True)
class Label:
    decision: Decision
    confidence: float

    @property
    def is_fall(self) -> bool:
        return self.decision == "Fall"


@dataclass(frozen=True)
class BaselineModel:
    """Regressão logística em atributos padronizados (bias por último)."""

    weights: tuple[float, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if len(self.weights) != len(FEATURE_NAMES) + 1:
            raise ModelFileError(f"Esperados {len(FEATURE_NAMES) + 1} pesos, recebidos {len(self.weights)}")
        if not all(math.isfinite(w) for w in self.weights):
            raise ModelFileError("Pesos não finitos no modelo")


# =============================================================================
# Atributos
# =============================================================================


def extract_features(mask: ForegroundMask, frame_dims: tuple[int, int]) -> FeatureVector:
    """Atributos de forma a partir da bbox e dos momentos da máscara.

    Raises:
        NoObjectError: máscara vazia (frames sem objeto não são classificados).
    """
    if mask.is_empty or mask.bbox is None:
        raise NoObjectError("Máscara vazia: frame sem objeto")

    row_min, col_min, row_max, col_max = mask.bbox
    bbox_h = row_max - row_min + 1
    bbox_w = col_max - col_min + 1

    rows, cols = np.nonzero(mask.mask)
    rows = rows.astype(np.float64)
    cols = cols.astype(np.float64)
    centroid_row = rows.mean()
    var_rows = np.mean((rows - centroid_row) ** 2)
    var_cols = np.mean((cols - cols.mean()) ** 2)
    cov = np.mean((rows - centroid_row) * (cols - cols.mean()))

    # Eixo principal em relação à horizontal; convertido para ângulo da vertical
    theta = 0.5 * math.atan2(2.0 * cov, var_cols - var_rows)
    orientation = math.degrees(math.acos(min(1.0, abs(math.sin(theta)))))

    _, height = frame_dims
    return FeatureVector(
        aspect_ratio=bbox_h / bbox_w,
        fill_ratio=mask.pixel_count / (bbox_h * bbox_w),
        orientation=orientation,
        normalized_centroid_height=float(centroid_row / height),
    )


# =============================================================================
# Treino e inferência
# =============================================================================


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def train_baseline(dataset: Sequence[tuple[FeatureVector, Label]]) -> BaselineModel:
    """Gradiente descendente em lote (500 épocas, lr 0.1, pesos iniciais zero)."""
    targets = np.array([1.0 if label.is_fall else 0.0 for _, label in dataset])
    if targets.size == 0 or targets.min() == targets.max():
        raise SingleClassDatasetError("O treino exige exemplos de Fall e NoFall")

    features = np.vstack([fv.as_array() for fv, _ in dataset])
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    design = np.hstack([(features - mean) / std, np.ones((len(dataset), 1))])

    weights = np.zeros(design.shape[1])
    for _ in range(TRAIN_EPOCHS):
        residual = _sigmoid(design @ weights) - targets
        weights -= LEARNING_RATE * (design.T @ residual) / len(dataset)

    logger.info("Modelo treinado com %s exemplos (%s quedas)", len(dataset), int(targets.sum()))
    return BaselineModel(
        weights=tuple(float(w) for w in weights),
        mean=tuple(float(m) for m in mean),
        std=tuple(float(s) for s in std),
    )


def classify(model: BaselineModel, features: FeatureVector) -> Label:
    """Fall se confiança > limiar (empate fica NoFall)."""
    x = (features.as_array() - np.asarray(model.mean)) / np.asarray(model.std)
    weights = np.asarray(model.weights)
    confidence = float(_sigmoid(float(x @ weights[:-1] + weights[-1])))
    decision: Decision = "Fall" if confidence > model.threshold else "NoFall"
    return Label(decision=decision, confidence=confidence)


def label_frame(
    model: BaselineModel,
    frame: Frame,
    background: Frame,
    pixel_tau: float,
) -> Label | None:
    """Subtração de fundo + atributos + classificação; None quando não há objeto."""
    mask = spatial_foreground(frame, background, pixel_tau)
    try:
        features = extract_features(mask, frame.dims)
    except NoObjectError:
        return None
    return classify(model, features)


def label_frames(
    model: BaselineModel,
    frames: Sequence[Frame],
    background: Frame,
    pixel_tau: float,
) -> list[Label | None]:
    """Rotula cada frame contra o mesmo fundo; ``None`` quando não há objeto."""
    return [label_frame(model, frame, background, pixel_tau) for frame in frames]


def agreement(labels_a: Sequence[Label], labels_b: Sequence[Label]) -> float:
    """Fração de posições com a mesma decisão."""
    if len(labels_a) != len(labels_b):
        raise LengthMismatchError(f"Listas com tamanhos diferentes: {len(labels_a)} vs {len(labels_b)}")
    if not labels_a:
        raise ClassificationError("Nenhum rótulo para comparar")
    equal = sum(a.decision == b.decision for a, b in zip(labels_a, labels_b))
    return equal / len(labels_a)


# =============================================================================
# Arquivo do modelo
# =============================================================================


def save_model(model: BaselineModel, path: str | Path) -> None:
    """Texto simples: cabeçalho com ordem dos atributos e padronização, um peso por linha."""
    header = (
        f"# features={','.join(FEATURE_NAMES)}"
        f" mean={','.join(repr(m) for m in model.mean)}"
        f" std={','.join(repr(s) for s in model.std)}"
        f" threshold={model.threshold!r}"
    )
    lines = [header, *(repr(w) for w in model.weights)]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> BaselineModel:
    """Lê o modelo gravado por ``save_model``.

    Raises:
        ModelFileError: arquivo ausente ou fora do formato.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ModelFileError(f"Modelo não encontrado: {path}") from None

    if not lines or not lines[0].startswith("#"):
        raise ModelFileError(f"Cabeçalho ausente em {path}")

    fields = dict(item.split("=", 1) for item in lines[0].lstrip("# ").split() if "=" in item)
    try:
        if tuple(fields["features"].split(",")) != FEATURE_NAMES:
            raise ModelFileError(f"Ordem de atributos inesperada em {path}: {fields['features']}")
        mean = tuple(float(v) for v in fields["mean"].split(","))
        std = tuple(float(v) for v in fields["std"].split(","))
        threshold = float(fields.get("threshold", DEFAULT_THRESHOLD))
        weights = tuple(float(line) for line in lines[1:] if line.strip())
    except (KeyError, ValueError) as e:
        raise ModelFileError(f"Modelo inválido em {path}: {e}") from e

    return BaselineModel(weights=weights, mean=mean, std=std, threshold=threshold)


def build_training_set(
    fall_dir: str | Path,
    nofall_dir: str | Path,
    background: Frame,
    pixel_tau: float,
) -> list[tuple[FeatureVector, Label]]:
    """Atributos de dois diretórios de exemplos (quedas e não-quedas)."""
    dataset = []
    for directory, decision in ((fall_dir, "Fall"), (nofall_dir, "NoFall")):
        for frame_id, frame in load_sequence(directory):
            mask = spatial_foreground(frame, background, pixel_tau)
            try:
                features = extract_features(mask, frame.dims)
            except NoObjectError:
                logger.warning("Frame %s de %s sem objeto; ignorado no treino", frame_id, directory)
                continue
            dataset.append((features, Label(decision=decision, confidence=1.0)))
    return dataset
