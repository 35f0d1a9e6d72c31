"""Configuração de testes para o cs-fallwatch."""

import logging
import sys
from pathlib import Path

import numpy as np
import pytest

# Adicionar src/ ao path ANTES de qualquer outra coisa para importar o módulo correto
src_path = Path(__file__).parent.parent / "src"
if src_path.exists() and src_path.is_dir():
    sys.path.insert(0, str(src_path))
else:
    raise RuntimeError(f"Diretório src/ não encontrado em {src_path}. Verifique a estrutura do projeto.")

# Remover o diretório raiz do path para evitar conflito
root_path_str = str(Path(__file__).parent.parent)
sys.path = [p for p in sys.path if p != root_path_str]

from cs_fallwatch.frames import Frame, save_sequence  # noqa: E402

BACKGROUND_LEVEL = 60.0
OBJECT_LEVEL = 180.0


# =============================================================================
# Cenas sintéticas
# =============================================================================


def scene(
    size: int,
    block: tuple[int, int, int, int] | None = None,
    background: float = BACKGROUND_LEVEL,
    level: float = OBJECT_LEVEL,
) -> Frame:
    """Fundo plano com um bloco opcional (linha, coluna, altura, largura)."""
    pixels = np.full((size, size), background)
    if block is not None:
        row, col, height, width = block
        pixels[row : row + height, col : col + width] = level
    return Frame.from_array(pixels)


def structured_frame(size: int, shift: int = 0) -> Frame:
    """Frame por partes: gradiente suave, um quadrado claro e uma faixa escura."""
    rows, cols = np.mgrid[0:size, 0:size]
    pixels = 40.0 + 100.0 * cols / (size - 1)
    q = size // 4
    pixels[q + shift : 2 * q + shift, q : 2 * q] = 220.0
    pixels[3 * q :, q // 2 : q // 2 + 2 * q] = 20.0
    return Frame.from_array(pixels)


def upright_block(size: int, offset: int = 0) -> tuple[int, int, int, int]:
    """Pessoa em pé: bloco alto e estreito apoiado no chão."""
    height, width = size // 2, size // 6
    return (size - height - 2, 4 + offset, height, width)


def lying_block(size: int, offset: int = 0) -> tuple[int, int, int, int]:
    """Pessoa deitada: bloco baixo e largo junto ao chão."""
    height, width = size // 6, size // 2
    return (size - height - 2, 4 + offset, height, width)


@pytest.fixture
def make_scene():
    """Factory de cenas com fundo plano e bloco opcional."""
    return scene


@pytest.fixture
def make_structured():
    return structured_frame


@pytest.fixture
def write_frames(tmp_path):
    """Factory: grava uma lista de frames como frame_XXXX.pgm e devolve o diretório."""

    def _write(frames: list[Frame], name: str = "frames") -> Path:
        directory = tmp_path / name
        save_sequence(list(enumerate(frames)), directory)
        return directory

    return _write


@pytest.fixture
def gating_sequence():
    """5 frames 32×32: fundo estático, objeto apenas nos três últimos."""
    size = 32
    return [scene(size)] * 2 + [scene(size, (10 + k, 8, 12, 6)) for k in range(3)]


@pytest.fixture
def pose_dataset():
    """40 frames 32×32 alternando em pé / deitado em posições diferentes."""
    size = 32
    frames = []
    labels = []
    for k in range(20):
        offset = k % 8
        frames.append(scene(size, upright_block(size, offset)))
        labels.append("NoFall")
        frames.append(scene(size, lying_block(size, offset)))
        labels.append("Fall")
    return frames, labels


# =============================================================================
# Logging
# =============================================================================


@pytest.fixture
def package_logger():
    """Logger do pacote com restauração garantida do nível."""
    logger = logging.getLogger("cs_fallwatch")
    original_level = logger.level
    yield logger
    logger.setLevel(original_level)


@pytest.fixture(autouse=True)
def _restore_root_level():
    """configure_logging() altera o logger raiz; restaura ao fim de cada teste."""
    root = logging.getLogger()
    level = root.level
    yield
    root.setLevel(level)
