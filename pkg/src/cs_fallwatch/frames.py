"""Módulo de frames do cs-fallwatch.

Representação de frames em tons de cinza (escala 0–255, valores reais),
E/S em PGM binário (P5), vetorização e degradação sintética para os
experimentos de denoising.
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    BadMaxvalError,
    DimensionMismatchError,
    FrameError,
    MissingFileError,
    NegativeSigmaError,
    TruncatedPayloadError,
    UnwritablePathError,
)

logger = logging.getLogger(__name__)

PGM_MAGIC = b"P5"
PGM_MAXVAL = 255

_FRAME_ID_RE = re.compile(r"(\d+)$")


@dataclass(frozen=True, eq=False)
class Frame:
    """Frame em tons de cinza, pixels em ordem row-major.

    Os pixels podem sair de [0, 255] dentro do solver; o clamp só acontece em
    ``save_pgm``.
    """

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = np.array(self.pixels, dtype=np.float64)
        if self.width < 1 or self.height < 1 or pixels.size != self.width * self.height:
            raise DimensionMismatchError(
                f"{pixels.size} pixels não formam um frame {self.width}x{self.height}"
            )
        pixels = pixels.reshape(self.height, self.width)
        if not np.all(np.isfinite(pixels)):
            raise FrameError("Frame com pixels não finitos")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "Frame":
        """Cria um frame a partir de um array 2-D (linhas × colunas)."""
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2:
            raise DimensionMismatchError(f"Esperado array 2-D, recebido ndim={array.ndim}")
        height, width = array.shape
        return cls(width=width, height=height, pixels=array)

    @classmethod
    def constant(cls, width: int, height: int, value: float) -> "Frame":
        return cls(width=width, height=height, pixels=np.full((height, width), float(value)))

    @property
    def dims(self) -> tuple[int, int]:
        return (self.width, self.height)

    def to_array(self) -> np.ndarray:
        """Cópia gravável dos pixels."""
        return self.pixels.copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.pixels, other.pixels)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class SignalVec:
    """Forma vetorizada de um frame (x, v, dual, r... dentro do solver)."""

    values: np.ndarray
    origin_dims: tuple[int, int]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        width, height = self.origin_dims
        if values.size != width * height:
            raise DimensionMismatchError(
                f"Vetor de tamanho {values.size} não corresponde a {width}x{height}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin_dims", (int(width), int(height)))

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values: np.ndarray) -> "SignalVec":
        """Novo vetor com as mesmas dimensões de origem."""
        return SignalVec(values=values, origin_dims=self.origin_dims)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalVec):
            return NotImplemented
        return self.origin_dims == other.origin_dims and np.array_equal(
            self.values, other.values
        )

    __hash__ = None  # type: ignore[assignment]


# =============================================================================
# Vetorização
# =============================================================================


def vectorize(frame: Frame) -> SignalVec:
    """Achata o frame em ordem row-major (índice i*width + j)."""
    return SignalVec(values=frame.pixels.reshape(-1), origin_dims=frame.dims)


def devectorize(sig: SignalVec) -> Frame:
    """Inverso exato de ``vectorize``."""
    width, height = sig.origin_dims
    return Frame(width=width, height=height, pixels=sig.values.reshape(height, width))


# =============================================================================
# PGM (P5)
# =============================================================================


def _read_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Lê o próximo token do cabeçalho, ignorando espaços e comentários."""
    while pos < len(data):
        byte = data[pos : pos + 1]
        if byte == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        elif byte.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def load_pgm(path: str | Path) -> Frame:
    """Lê um PGM binário (P5) de 8 bits.

    Raises:
        MissingFileError: arquivo inexistente.
        BadMagicError: cabeçalho diferente de P5.
        BadMaxvalError: maxval diferente de 255.
        TruncatedPayloadError: payload menor que width*height.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise MissingFileError(f"Arquivo não encontrado: {path}") from None

    if data[:2] != PGM_MAGIC:
        raise BadMagicError(f"Magic inválido em {path}: {data[:2]!r}")

    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _read_header_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise TruncatedPayloadError(f"Cabeçalho PGM incompleto em {path} ({name})") from None
    width, height, maxval = fields

    if maxval != PGM_MAXVAL:
        raise BadMaxvalError(f"maxval {maxval} não suportado em {path} (esperado 255)")

    # Exatamente um caractere de espaço separa o cabeçalho do payload
    pos += 1
    expected = width * height
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"Payload truncado em {path}: {len(payload)} de {expected} bytes"
        )

    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return Frame(width=width, height=height, pixels=pixels)


def save_pgm(frame: Frame, path: str | Path) -> None:
    """Grava o frame como P5, com clamp em [0, 255] e arredondamento half-up."""
    quantized = np.floor(np.clip(frame.pixels, 0.0, 255.0) + 0.5).astype(np.uint8)
    header = f"P5\n{frame.width} {frame.height}\n{PGM_MAXVAL}\n".encode("ascii")
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(quantized.tobytes())
    except OSError as e:
        raise UnwritablePathError(f"Não foi possível gravar {path}: {e}") from e


def _frame_id_from_name(path: Path, position: int) -> int:
    match = _FRAME_ID_RE.search(path.stem)
    return int(match.group(1)) if match else position


def load_sequence(directory: str | Path) -> list[tuple[int, Frame]]:
    """Lê todos os ``*.pgm`` de um diretório em ordem lexicográfica.

    O id do frame é o sufixo numérico do nome (``frame_0001.pgm`` → 1) ou a
    posição na sequência quando não houver sufixo.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingFileError(f"Diretório não encontrado: {directory}")

    paths = sorted(directory.glob("*.pgm"))
    if not paths:
        raise FrameError(f"Nenhum frame .pgm em {directory}")

    sequence = []
    for position, path in enumerate(paths):
        frame = load_pgm(path)
        if sequence and frame.dims != sequence[0][1].dims:
            raise DimensionMismatchError(
                f"{path.name} tem dimensões {frame.dims}, esperado {sequence[0][1].dims}"
            )
        sequence.append((_frame_id_from_name(path, position), frame))

    logger.debug("Sequência carregada: %s frames de %s", len(sequence), directory)
    return sequence


def save_sequence(
    frames: list[tuple[int, Frame]],
    directory: str | Path,
    prefix: str = "frame_",
) -> list[Path]:
    """Grava frames como ``<prefix>%04d.pgm`` em ordem de id."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for frame_id, frame in sorted(frames, key=lambda item: item[0]):
        path = directory / f"{prefix}{frame_id:04d}.pgm"
        save_pgm(frame, path)
        paths.append(path)
    return paths


# =============================================================================
# Degradação sintética
# =============================================================================


def add_gaussian_noise(frame: Frame, sigma: float, seed: int) -> Frame:
    """Soma ruído Gaussiano branco de desvio ``sigma`` (determinístico por seed)."""
    if sigma < 0:
        raise NegativeSigmaError(f"sigma deve ser >= 0, recebido {sigma}")
    if sigma == 0:
        return frame
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.standard_normal(frame.pixels.shape) * sigma
    return Frame.from_array(frame.pixels + noise)
