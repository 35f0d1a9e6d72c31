"""Escrita dos artefatos de saída (CSV e JSON).

Nenhum artefato carrega timestamp: a mesma configuração sobre os mesmos
frames gera arquivos idênticos byte a byte.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

# Tentar importar orjson para performance, com fallback para json stdlib
try:
    import orjson

    HAS_ORJSON = True
except ImportError:
    HAS_ORJSON = False

from .classify import Label
from .solver import TraceRow

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "frame_id",
    "received_measurements",
    "packets_sent",
    "packets_received",
    "bytes_received",
    "iterations",
    "psnr_db",
    "flag",
    "label_original",
    "label_reconstructed",
]
DETECTION_COLUMNS = ["frame_id", "score", "flag"]
LABEL_COLUMNS = ["frame_id", "decision", "confidence"]
TRACE_COLUMNS = ["iter", "primal_residual", "rel_change", "psnr"]
SWEEP_COLUMNS = [
    "sub_rate",
    "loss_p",
    "denoiser",
    "omega",
    "mean_psnr_db",
    "mean_iterations",
    "agreement",
]
DENOISE_DEMO_COLUMNS = ["sigma", "denoiser", "psnr_noisy", "psnr_denoised"]

NO_OBJECT = "NoObject"


def _fmt(value: Any) -> Any:
    """Formata células: None vira vazio, floats com 6 casas, bool vira 0/1."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6f}"
    return value


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, Mapping):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _json_dumps(obj: Any) -> bytes:
    """Wrapper que usa orjson se disponível, senão json stdlib.

    Chaves ordenadas e indentação fixa nos dois caminhos.
    """
    obj = _json_safe(obj)
    if HAS_ORJSON:
        return orjson.dumps(
            obj, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_APPEND_NEWLINE
        )
    return (json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")


def write_csv(
    rows: Iterable[Mapping[str, Any]],
    output_file: str | Path,
    fieldnames: Sequence[str],
) -> Path:
    """CSV com cabeçalho; arquivo só com cabeçalho quando não há linhas."""
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    with open(output_file, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _fmt(row.get(key)) for key in fieldnames})
    return output_file


def write_json(data: Mapping[str, Any], output_file: str | Path) -> Path:
    """Grava um objeto como JSON com chaves ordenadas.

    Usa orjson quando disponível, senão o módulo json da stdlib; a saída é a
    mesma nos dois caminhos.

    Args:
        data: Dicionário serializável (Paths e floats não finitos são convertidos).
        output_file: Caminho do arquivo; diretórios pai são criados.

    Returns:
        Path do arquivo gravado.
    """
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    with open(output_file, "wb") as f:
        f.write(_json_dumps(data))
    return output_file


# =============================================================================
# Artefatos específicos
# =============================================================================


def write_report_csv(rows: Iterable[Mapping[str, Any]], output_file: str | Path) -> Path:
    """report.csv: uma linha por frame."""
    return write_csv(rows, output_file, REPORT_COLUMNS)


def write_detection_csv(
    frame_ids: Sequence[int],
    scores: Sequence[float],
    flags: Sequence[bool],
    output_file: str | Path,
) -> Path:
    """detection.csv: score e flag de cada frame, na ordem recebida."""
    rows = [
        {"frame_id": fid, "score": score, "flag": flag}
        for fid, score, flag in zip(frame_ids, scores, flags)
    ]
    return write_csv(rows, output_file, DETECTION_COLUMNS)


def label_cell(label: Label | None) -> str:
    return NO_OBJECT if label is None else label.decision


def write_labels_csv(labels: Iterable[tuple[int, Label | None]], output_file: str | Path) -> Path:
    """Rótulos por frame; frames sem objeto saem como ``NoObject`` sem confiança."""
    rows = [
        {
            "frame_id": fid,
            "decision": label_cell(label),
            "confidence": None if label is None else label.confidence,
        }
        for fid, label in labels
    ]
    return write_csv(rows, output_file, LABEL_COLUMNS)


def write_trace_csv(trace: Iterable[TraceRow], output_file: str | Path) -> Path:
    """Trace do solver, uma linha por iteração (psnr vazio sem ground truth)."""
    return write_csv((row._asdict() for row in trace), output_file, TRACE_COLUMNS)


def write_sweep_csv(rows: Iterable[Mapping[str, Any]], output_file: str | Path) -> Path:
    """sweep.csv: uma linha por ponto da grade."""
    path = write_csv(rows, output_file, SWEEP_COLUMNS)
    logger.info("Resumo do sweep gravado em %s", path)
    return path


def write_denoise_demo_csv(rows: Iterable[Mapping[str, Any]], output_file: str | Path) -> Path:
    """denoise_demo.csv: uma linha por (σ, denoiser)."""
    return write_csv(rows, output_file, DENOISE_DEMO_COLUMNS)

