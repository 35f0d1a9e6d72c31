"""Lado do encoder: matriz de medição, aquisição, pacotes e canal com perdas.

O nó sensor só executa produtos matriz-vetor e cópias; nenhuma fatoração ou
inversão acontece neste módulo fora de ``build_matrix`` (que o nó executa uma
única vez a partir da seed compartilhada).
"""

import functools
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .errors import (
    EmptyMeasurementError,
    InvalidLossModelError,
    InvalidMatrixShapeError,
    InvalidPayloadError,
    MixedFramesError,
    PacketDecodeError,
    RankDeficientError,
    SeedMismatchError,
)
from .frames import SignalVec

logger = logging.getLogger(__name__)

# Nome versionado do gerador: encoder e decoder regeneram Φ apenas com a seed
PRNG_STREAM = "pcg64-ziggurat/v1"

PIVOT_TOLERANCE = 1e-12
_GS_BLOCK = 64

_HEADER = struct.Struct("<QIQI")
_ENTRY_DTYPE = np.dtype([("row", "<u4"), ("value", "<f8")])


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# =============================================================================
# Tipos
# =============================================================================


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """Matriz Φ (M×N) com linhas ortonormais, reproduzível pela seed.

    ``row_indices`` diz quais linhas da matriz completa estão presentes; uma
    submatriz obtida em ``assemble`` continua com linhas ortonormais.
    """

    entries: np.ndarray
    seed: int
    total_rows: int
    row_indices: np.ndarray
    prng_stream: str = PRNG_STREAM

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def sub_rate(self) -> float:
        return self.rows / self.cols

    @property
    def is_complete(self) -> bool:
        return self.rows == self.total_rows

    def select_rows(self, row_indices: np.ndarray) -> "MeasurementMatrix":
        """Submatriz com as linhas (índices da matriz completa) pedidas."""
        row_indices = np.array(row_indices, dtype=np.int64)
        positions = np.searchsorted(self.row_indices, row_indices)
        positions = np.clip(positions, 0, len(self.row_indices) - 1)
        if not np.array_equal(self.row_indices[positions], row_indices):
            raise InvalidMatrixShapeError("Linhas pedidas não existem nesta matriz")
        if positions.size == self.rows:
            return self
        entries = self.entries[positions]
        entries.setflags(write=False)
        row_indices.setflags(write=False)
        return replace(self, entries=entries, row_indices=row_indices)


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Medições y com os índices das linhas de Φ que as produziram."""

    values: np.ndarray
    row_indices: np.ndarray
    frame_id: int
    matrix_seed: int
    total_rows: int

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        rows = np.array(self.row_indices, dtype=np.int64).reshape(-1)
        if values.size != rows.size:
            raise InvalidMatrixShapeError(
                f"{values.size} valores para {rows.size} índices de linha"
            )
        if rows.size and (np.any(np.diff(rows) <= 0) or rows[0] < 0 or rows[-1] >= self.total_rows):
            raise InvalidMatrixShapeError("row_indices deve ser estritamente crescente e < M")
        values.setflags(write=False)
        rows.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_indices", rows)

    def __len__(self) -> int:
        return self.values.size

    @property
    def is_complete(self) -> bool:
        return self.values.size == self.total_rows


@dataclass(frozen=True, eq=False)
class Packet:
    """Bloco contíguo de medições de um frame, pronto para o canal."""

    frame_id: int
    packet_seq: int
    row_indices: np.ndarray
    values: np.ndarray
    matrix_seed: int

    def __post_init__(self) -> None:
        if len(self.row_indices) != len(self.values):
            raise InvalidMatrixShapeError("Pacote com row_indices e values de tamanhos diferentes")

    @property
    def count(self) -> int:
        return len(self.values)

    @property
    def wire_size(self) -> int:
        return _HEADER.size + self.count * _ENTRY_DTYPE.itemsize


@dataclass(frozen=True)
class LossModel:
    """Modelo de apagamento de pacotes (iid ou conjunto explícito)."""

    kind: Literal["iid_erasure", "explicit"] = "iid_erasure"
    p: float = 0.0
    drop_set: frozenset[int] = field(default_factory=frozenset)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("iid_erasure", "explicit"):
            raise InvalidLossModelError(f"Modelo de perda desconhecido: {self.kind}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidLossModelError(f"Probabilidade de perda fora de [0, 1]: {self.p}")

    @classmethod
    def iid(cls, p: float, seed: int = 0) -> "LossModel":
        return cls(kind="iid_erasure", p=p, seed=seed)

    @classmethod
    def explicit(cls, drop_set: Iterable[int]) -> "LossModel":
        return cls(kind="explicit", drop_set=frozenset(int(s) for s in drop_set))

    def for_frame(self, frame_id: int) -> "LossModel":
        """Deriva uma seed independente por frame (mesmo padrão nunca se repete)."""
        if self.kind != "iid_erasure":
            return self
        state = np.random.SeedSequence([self.seed, frame_id]).generate_state(1)[0]
        return replace(self, seed=int(state))


# =============================================================================
# Matriz de medição
# =============================================================================


@functools.lru_cache(maxsize=4)
def _orthonormal_rows(seed: int, m: int, n: int) -> np.ndarray:
    """Gaussiana i.i.d. seguida de Gram-Schmidt modificado em ordem de linha.

    Executado em blocos: dentro do bloco cada linha é normalizada e removida
    das seguintes; cada bloco pronto é projetado para fora das linhas
    posteriores duas vezes.
    """
    a = _generator(seed).standard_normal((m, n))

    for start in range(0, m, _GS_BLOCK):
        stop = min(start + _GS_BLOCK, m)
        for i in range(start, stop):
            norm = np.linalg.norm(a[i])
            if norm < PIVOT_TOLERANCE:
                raise RankDeficientError(
                    f"Pivô {i} com norma {norm:.3e} (seed={seed}, m={m}, n={n})"
                )
            a[i] /= norm
            if i + 1 < stop:
                a[i + 1 : stop] -= np.outer(a[i + 1 : stop] @ a[i], a[i])
        if stop < m:
            block = a[start:stop]
            for _ in range(2):
                a[stop:] -= (a[stop:] @ block.T) @ block

    a.setflags(write=False)
    return a


def build_matrix(seed: int, m: int, n: int) -> MeasurementMatrix:
    """Constrói Φ (m×n) com ΦΦᵀ = I a partir da seed.

    Raises:
        InvalidMatrixShapeError: m == 0 ou m > n.
        RankDeficientError: pivô com norma abaixo de 1e-12.
    """
    if m < 1 or n < 1:
        raise InvalidMatrixShapeError(f"Dimensões inválidas: m={m}, n={n}")
    if m > n:
        raise InvalidMatrixShapeError(
            f"m={m} > n={n}: as linhas não podem ser ortonormalizadas"
        )

    entries = _orthonormal_rows(seed, m, n)
    rows = np.arange(m, dtype=np.int64)
    rows.setflags(write=False)
    logger.debug("Matriz construída: seed=%s, %sx%s (sub-rate %.3f)", seed, m, n, m / n)
    return MeasurementMatrix(entries=entries, seed=seed, total_rows=m, row_indices=rows)


def measurement_count(frame_size: int, sub_rate: float) -> int:
    """M = round(sub_rate·N), no mínimo 1."""
    n = frame_size * frame_size
    return max(1, min(n, int(np.floor(sub_rate * n + 0.5))))


def matrix_for(frame_size: int, sub_rate: float, seed: int) -> MeasurementMatrix:
    """Matriz para frames ``frame_size``×``frame_size`` na sub-rate pedida."""
    n = frame_size * frame_size
    return build_matrix(seed, measurement_count(frame_size, sub_rate), n)


# =============================================================================
# Aquisição e pacotes
# =============================================================================


def acquire(phi: MeasurementMatrix, x: SignalVec, frame_id: int = 0) -> MeasurementSet:
    """y = Φx (um único produto matriz-vetor)."""
    if len(x) != phi.cols:
        raise InvalidMatrixShapeError(
            f"Sinal de tamanho {len(x)} incompatível com Φ de {phi.cols} colunas"
        )
    return MeasurementSet(
        values=phi.entries @ x.values,
        row_indices=phi.row_indices,
        frame_id=frame_id,
        matrix_seed=phi.seed,
        total_rows=phi.total_rows,
    )


def packetize(y: MeasurementSet, payload: int) -> list[Packet]:
    """Divide as medições em pacotes de blocos contíguos de ``payload``."""
    if payload < 1:
        raise InvalidPayloadError(f"payload deve ser >= 1, recebido {payload}")
    if len(y) == 0:
        raise EmptyMeasurementError(f"Frame {y.frame_id} sem medições para empacotar")

    packets = []
    for seq, start in enumerate(range(0, len(y), payload)):
        stop = start + payload
        packets.append(
            Packet(
                frame_id=y.frame_id,
                packet_seq=seq,
                row_indices=y.row_indices[start:stop],
                values=y.values[start:stop],
                matrix_seed=y.matrix_seed,
            )
        )
    return packets


def transmit(packets: list[Packet], loss: LossModel) -> list[Packet]:
    """Simula o canal de apagamento; sobreviventes mantêm ordem e conteúdo."""
    if loss.kind == "explicit":
        survivors = [p for p in packets if p.packet_seq not in loss.drop_set]
    else:
        draws = _generator(loss.seed).random(len(packets))
        survivors = [p for p, u in zip(packets, draws) if u >= loss.p]

    if len(survivors) < len(packets):
        logger.debug("Canal descartou %s de %s pacotes", len(packets) - len(survivors), len(packets))
    return survivors


def random_drop_set(n_packets: int, n_drop: int, seed: int) -> list[int]:
    """Sorteia exatamente ``n_drop`` pacotes distintos para descartar."""
    if not 0 <= n_drop <= n_packets:
        raise InvalidLossModelError(f"Não é possível descartar {n_drop} de {n_packets} pacotes")
    chosen = _generator(seed).choice(n_packets, size=n_drop, replace=False)
    return sorted(int(s) for s in chosen)


def assemble(
    received: list[Packet],
    phi: MeasurementMatrix,
) -> tuple[MeasurementSet, MeasurementMatrix]:
    """Reúne os pacotes recebidos em (y_parcial, Φ_parcial).

    Raises:
        EmptyMeasurementError: nenhum pacote/medição sobreviveu.
        MixedFramesError: pacotes de frames diferentes.
        SeedMismatchError: seed do pacote diferente da seed de Φ.
    """
    if not received:
        raise EmptyMeasurementError("Nenhum pacote recebido")

    frame_ids = {p.frame_id for p in received}
    if len(frame_ids) > 1:
        raise MixedFramesError(f"Pacotes de frames diferentes: {sorted(frame_ids)}")
    seeds = {p.matrix_seed for p in received}
    if seeds != {phi.seed}:
        raise SeedMismatchError(f"Seeds dos pacotes {sorted(seeds)} != seed de Φ {phi.seed}")

    rows = np.concatenate([np.asarray(p.row_indices, dtype=np.int64) for p in received])
    values = np.concatenate([np.asarray(p.values, dtype=np.float64) for p in received])
    if rows.size == 0:
        raise EmptyMeasurementError("Pacotes recebidos não contêm medições")

    # Ordena por índice e descarta duplicatas (pacote repetido pelo canal)
    rows, first = np.unique(rows, return_index=True)
    values = values[first]

    phi_partial = phi.select_rows(rows)
    y_partial = MeasurementSet(
        values=values,
        row_indices=rows,
        frame_id=frame_ids.pop(),
        matrix_seed=phi.seed,
        total_rows=phi.total_rows,
    )
    return y_partial, phi_partial


# =============================================================================
# Formato de fio (little-endian)
# =============================================================================


def encode_packets(packets: Iterable[Packet]) -> bytes:
    """Serializa pacotes: frame_id u64, seq u32, seed u64, count u32, count×(u32, f64)."""
    chunks = []
    for packet in packets:
        chunks.append(
            _HEADER.pack(packet.frame_id, packet.packet_seq, packet.matrix_seed, packet.count)
        )
        body = np.empty(packet.count, dtype=_ENTRY_DTYPE)
        body["row"] = packet.row_indices
        body["value"] = packet.values
        chunks.append(body.tobytes())
    return b"".join(chunks)


def decode_packets(data: bytes) -> list[Packet]:
    """Inverso de ``encode_packets``; stream truncado gera PacketDecodeError."""
    packets = []
    pos = 0
    while pos < len(data):
        if pos + _HEADER.size > len(data):
            raise PacketDecodeError(f"Cabeçalho truncado no byte {pos}")
        frame_id, seq, seed, count = _HEADER.unpack_from(data, pos)
        pos += _HEADER.size
        end = pos + count * _ENTRY_DTYPE.itemsize
        if end > len(data):
            raise PacketDecodeError(f"Pacote {frame_id}/{seq} truncado")
        body = np.frombuffer(data[pos:end], dtype=_ENTRY_DTYPE)
        packets.append(
            Packet(
                frame_id=frame_id,
                packet_seq=seq,
                row_indices=body["row"].astype(np.int64),
                values=body["value"].astype(np.float64),
                matrix_seed=seed,
            )
        )
        pos = end
    return packets


def write_packets(path: str | Path, packets: Iterable[Packet]) -> int:
    """Grava o stream de pacotes; retorna o número de bytes."""
    data = encode_packets(packets)
    Path(path).write_bytes(data)
    return len(data)


def read_packets(path: str | Path) -> list[Packet]:
    """Lê um stream gravado por ``write_packets``.

    Args:
        path: Arquivo do stream.

    Returns:
        Pacotes na ordem do arquivo.

    Raises:
        PacketDecodeError: stream truncado ou corrompido.
    """
    return decode_packets(Path(path).read_bytes())


def split_by_frame(packets: Iterable[Packet]) -> dict[int, list[Packet]]:
    """Agrupa um stream de pacotes por frame_id, na ordem de chegada."""
    frames: dict[int, list[Packet]] = {}
    for packet in packets:
        frames.setdefault(packet.frame_id, []).append(packet)
    return frames
