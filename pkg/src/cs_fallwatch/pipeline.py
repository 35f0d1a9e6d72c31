"""Orquestração ponta a ponta: nó sensor → canal → decoder → classificador.

Fluxo por frame:

1. encoder: vetoriza, adquire y = Φx, pontua contra o fundo e empacota;
2. canal: apagamento de pacotes;
3. decoder: reconstrói apenas os frames marcados (ou todos, com
   ``reconstruct_all``), extrai a máscara de frente e classifica.

As reconstruções rodam em threads, limitadas por um semáforo, e o relatório é
montado sempre em ordem de frame_id.
"""

import asyncio
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import solver
from .classify import BaselineModel, Label, agreement, label_frame, load_model
from .config import DetectionConfig, PipelineConfig
from .denoise import DENOISER_KINDS, DenoiseParams, DenoiseRequest, denoise
from .detect import (
    BackgroundModel,
    calibrate_tau,
    flag_frames,
    score_frame,
    update_background,
)
from .errors import ConfigError, EmptyMeasurementError
from .frames import Frame, add_gaussian_noise, load_sequence, save_pgm, vectorize
from .metrics import psnr
from .reports import (
    label_cell,
    write_denoise_demo_csv,
    write_detection_csv,
    write_json,
    write_labels_csv,
    write_report_csv,
    write_sweep_csv,
    write_trace_csv,
)
from .sensing import (
    LossModel,
    MeasurementMatrix,
    MeasurementSet,
    Packet,
    acquire,
    assemble,
    matrix_for,
    packetize,
    transmit,
)
from .solver import SolverState

logger = logging.getLogger(__name__)

DEFAULT_NOISE_SIGMAS = (5.0, 10.0, 20.0, 30.0)
DEMO_STRENGTH_PER_SIGMA = 0.25


# =============================================================================
# Tipos do relatório
# =============================================================================


@dataclass(frozen=True)
class FrameRow:
    """Linha do relatório; campos opcionais ficam vazios quando não se aplicam."""

    frame_id: int
    received_measurements: int
    packets_sent: int
    packets_received: int
    bytes_received: int
    flag: bool
    iterations: int | None = None
    psnr_db: float | None = None
    label_original: str | None = None
    label_reconstructed: str | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "frame_id": self.frame_id,
            "received_measurements": self.received_measurements,
            "packets_sent": self.packets_sent,
            "packets_received": self.packets_received,
            "bytes_received": self.bytes_received,
            "iterations": self.iterations,
            "psnr_db": self.psnr_db,
            "flag": self.flag,
            "label_original": self.label_original,
            "label_reconstructed": self.label_reconstructed,
        }


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[FrameRow, ...]
    mean_psnr_db: float | None
    agreement: float | None
    tau: float

    @property
    def reconstructed(self) -> int:
        return sum(row.iterations is not None for row in self.rows)

    @property
    def flags(self) -> list[bool]:
        return [row.flag for row in self.rows]

    @property
    def mean_iterations(self) -> float | None:
        iterations = [row.iterations for row in self.rows if row.iterations is not None]
        return float(np.mean(iterations)) if iterations else None


@dataclass(frozen=True)
class DetectionResult:
    """Scores, flags e o fundo usado para pontuar cada frame."""

    scores: tuple[float, ...]
    flags: tuple[bool, ...]
    tau: float
    backgrounds: tuple[BackgroundModel, ...] = field(repr=False)


@dataclass(frozen=True)
class Transmission:
    """Resultado do canal para um frame."""

    packets_sent: int
    received: list[Packet]

    @property
    def packets_received(self) -> int:
        return len(self.received)

    @property
    def bytes_received(self) -> int:
        return sum(p.wire_size for p in self.received)


# =============================================================================
# Detecção na sequência de medições
# =============================================================================


def detect_sequence(ys: Sequence[MeasurementSet], det: DetectionConfig) -> DetectionResult:
    """Pontua uma sequência de medições contra o fundo em média móvel.

    O frame 0 semeia o fundo. Com ``tau_policy=calibrate`` os frames
    1..K−1 (sem objeto, por contrato) calibram tau e nunca são marcados. Frames
    marcados ou parciais não atualizam o fundo.
    """
    if not ys:
        raise EmptyMeasurementError("Sequência sem medições")

    calibrating = det.tau_policy == "calibrate"
    window = min(det.calibration_frames, len(ys)) if calibrating else 1
    tau = det.tau if not calibrating else calibrate_tau([], det.tau_floor)

    model = BackgroundModel.initial(ys[0], alpha=det.alpha, tau=tau)
    scores = [0.0]
    flags = [False]
    used = [model]

    for i, y in enumerate(ys[1:], start=1):
        used.append(model)
        score = score_frame(model, y)
        scores.append(score)

        if i < window:
            flag = False
            if i == window - 1:
                model = replace(model, tau=calibrate_tau(scores[1:window], det.tau_floor))
                logger.info("tau calibrado em %.4f com %s frames", model.tau, window - 1)
        else:
            flag = flag_frames([score], model.tau)[0]
        flags.append(flag)

        if not flag and y.is_complete:
            model = update_background(model, y)

    return DetectionResult(
        scores=tuple(scores), flags=tuple(flags), tau=model.tau, backgrounds=tuple(used)
    )


def pixel_backgrounds(frames: Sequence[Frame], flags: Sequence[bool], alpha: float) -> list[Frame]:
    """Fundo no domínio dos pixels com a mesma média móvel e regra de congelamento."""
    background = frames[0].pixels.copy()
    snapshots = [frames[0]]
    for frame, flag in zip(frames[1:], flags[1:]):
        snapshots.append(Frame.from_array(background))
        if not flag:
            background = (1.0 - alpha) * background + alpha * frame.pixels
    return snapshots


def transmit_frame(y: MeasurementSet, payload: int, loss: LossModel) -> Transmission:
    """Empacota as medições de um frame e passa os pacotes pelo canal.

    Args:
        y: Medições completas do frame.
        payload: Medições por pacote.
        loss: Modelo de perda; a seed é derivada do frame_id.

    Returns:
        Transmission com o total enviado e os pacotes sobreviventes.
    """
    packets = packetize(y, payload)
    return Transmission(packets_sent=len(packets), received=transmit(packets, loss.for_frame(y.frame_id)))


# =============================================================================
# Decoder
# =============================================================================


async def reconstruct_many(
    jobs: dict[Any, tuple[MeasurementMatrix, MeasurementSet, Frame | None]],
    cfg: PipelineConfig,
) -> dict[Any, tuple[Frame, SolverState]]:
    """Reconstrói em paralelo (threads) com no máximo ``max_concurrent_frames`` simultâneos."""
    semaphore = asyncio.Semaphore(cfg.max_concurrent_frames)

    async def _run(phi: MeasurementMatrix, y: MeasurementSet, truth: Frame | None):
        async with semaphore:
            return await asyncio.to_thread(
                solver.reconstruct, phi, y, cfg.solver, cfg.denoiser, truth, cfg.frame_dims
            )

    keys = list(jobs)
    results = await asyncio.gather(*(_run(*jobs[key]) for key in keys))
    return dict(zip(keys, results))


def _check_sequence(cfg: PipelineConfig, sequence: Sequence[tuple[int, Frame]]) -> None:
    dims = sequence[0][1].dims
    if dims != cfg.frame_dims:
        raise ConfigError(
            f"Frames com dimensões {dims[0]}x{dims[1]}, configuração espera "
            f"{cfg.frame_size}x{cfg.frame_size}"
        )
    ids = [fid for fid, _ in sequence]
    if len(set(ids)) != len(ids):
        raise ConfigError("Ids de frame repetidos na sequência")


async def process_sequence(
    cfg: PipelineConfig,
    sequence: Sequence[tuple[int, Frame]],
    model: BaselineModel | None = None,
    write_outputs: bool = True,
) -> EvalReport:
    """Executa o pipeline completo sobre frames já carregados."""
    _check_sequence(cfg, sequence)
    frame_ids = [fid for fid, _ in sequence]
    originals = [frame for _, frame in sequence]

    phi = await asyncio.to_thread(matrix_for, cfg.frame_size, cfg.sub_rate, cfg.matrix_seed)
    logger.info(
        "Φ %sx%s (sub-rate %.3f, seed %s, stream %s)",
        phi.rows,
        phi.cols,
        phi.sub_rate,
        phi.seed,
        phi.prng_stream,
    )

    # Encoder: medições completas, detecção e canal
    ys = [acquire(phi, vectorize(frame), fid) for fid, frame in sequence]
    detection = detect_sequence(ys, cfg.detection)
    channel = [transmit_frame(y, cfg.payload, cfg.loss) for y in ys]
    for fid, score, flag in zip(frame_ids, detection.scores, detection.flags):
        logger.info("[frame %s] score=%.4f flag=%s", fid, score, flag)

    # Decoder
    targets = [
        i for i, flag in enumerate(detection.flags) if (flag or cfg.reconstruct_all)
    ]
    jobs: dict[Any, tuple[MeasurementMatrix, MeasurementSet, Frame | None]] = {}
    received_counts: dict[int, int] = {}
    for i in targets:
        try:
            y_partial, phi_partial = assemble(channel[i].received, phi)
        except EmptyMeasurementError:
            logger.warning("[frame %s] nenhum pacote recebido; reconstrução ignorada", frame_ids[i])
            continue
        received_counts[i] = len(y_partial)
        jobs[("frame", i)] = (phi_partial, y_partial, originals[i])

    classified = [i for i in targets if detection.flags[i] and ("frame", i) in jobs]
    if model is not None:
        # Fundo espacial: reconstrução de cada versão de y_bg necessária, uma vez
        for i in classified:
            background = detection.backgrounds[i]
            jobs.setdefault(("background", background.version), (phi, background.y_bg, None))

    results = await reconstruct_many(jobs, cfg)

    pixel_bg = pixel_backgrounds(originals, detection.flags, cfg.detection.alpha)
    labels_original: dict[int, Label | None] = {}
    labels_reconstructed: dict[int, Label | None] = {}
    if model is not None:
        pixel_tau = cfg.detection.pixel_tau
        for i in classified:
            recon_bg, _ = results[("background", detection.backgrounds[i].version)]
            recon, _ = results[("frame", i)]
            labels_original[i] = label_frame(model, originals[i], pixel_bg[i], pixel_tau)
            labels_reconstructed[i] = label_frame(model, recon, recon_bg, pixel_tau)

    rows = []
    psnrs = []
    for i, fid in enumerate(frame_ids):
        tx = channel[i]
        row = FrameRow(
            frame_id=fid,
            received_measurements=received_counts.get(i, sum(p.count for p in tx.received)),
            packets_sent=tx.packets_sent,
            packets_received=tx.packets_received,
            bytes_received=tx.bytes_received,
            flag=detection.flags[i],
        )
        if ("frame", i) in results:
            recon, state = results[("frame", i)]
            quality = psnr(recon, originals[i])
            psnrs.append(quality)
            row = replace(row, iterations=state.k, psnr_db=quality)
        if i in labels_original:
            row = replace(
                row,
                label_original=label_cell(labels_original[i]),
                label_reconstructed=label_cell(labels_reconstructed[i]),
            )
        rows.append(row)

    pairs = [
        (labels_original[i], labels_reconstructed[i])
        for i in labels_original
        if labels_original[i] is not None and labels_reconstructed[i] is not None
    ]
    report = EvalReport(
        rows=tuple(rows),
        mean_psnr_db=float(np.mean(psnrs)) if psnrs else None,
        agreement=agreement([a for a, _ in pairs], [b for _, b in pairs]) if pairs else None,
        tau=detection.tau,
    )
    logger.info(
        "Pipeline concluído: %s frames, %s reconstruídos, PSNR médio %s",
        len(rows),
        report.reconstructed,
        "-" if report.mean_psnr_db is None else f"{report.mean_psnr_db:.2f} dB",
    )

    if write_outputs:
        _write_outputs(
            cfg, report, frame_ids, detection, results, labels_original, labels_reconstructed
        )
    return report


def _write_outputs(
    cfg: PipelineConfig,
    report: EvalReport,
    frame_ids: list[int],
    detection: DetectionResult,
    results: dict[Any, tuple[Frame, SolverState]],
    labels_original: dict[int, Label | None],
    labels_reconstructed: dict[int, Label | None],
) -> None:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_report_csv((row.as_dict() for row in report.rows), out / "report.csv")
    write_detection_csv(frame_ids, detection.scores, detection.flags, out / "detection.csv")
    write_labels_csv(
        [(frame_ids[i], label) for i, label in sorted(labels_original.items())],
        out / "labels_original.csv",
    )
    write_labels_csv(
        [(frame_ids[i], label) for i, label in sorted(labels_reconstructed.items())],
        out / "labels_reconstructed.csv",
    )

    recon_dir = out / "recon"
    trace_dir = out / "traces"
    frame_keys = sorted(key for key in results if key[0] == "frame")
    if frame_keys:
        recon_dir.mkdir(parents=True, exist_ok=True)
        trace_dir.mkdir(parents=True, exist_ok=True)
    for _, i in frame_keys:
        recon, state = results[("frame", i)]
        save_pgm(recon, recon_dir / f"frame_{frame_ids[i]:04d}.pgm")
        write_trace_csv(solver.residual_trace(state), trace_dir / f"frame_{frame_ids[i]:04d}.csv")

    config_echo = cfg.to_flat()
    config_echo.pop("output_dir")
    write_json(
        {
            "frames": len(report.rows),
            "reconstructed": report.reconstructed,
            "mean_psnr_db": report.mean_psnr_db,
            "mean_iterations": report.mean_iterations,
            "agreement": report.agreement,
            "tau": report.tau,
            "config": config_echo,
        },
        out / "summary.json",
    )
    logger.info("Saídas gravadas em %s", out)


async def run_pipeline(cfg: PipelineConfig, input_dir: str | Path) -> EvalReport:
    """Carrega a sequência de ``input_dir`` e executa o pipeline completo.

    Dimensões e modelo são validados antes de qualquer frame ser processado.
    """
    sequence = load_sequence(input_dir)
    _check_sequence(cfg, sequence)
    model = load_model(cfg.model_path) if cfg.model_path else None
    return await process_sequence(cfg, sequence, model=model)


# =============================================================================
# Experimentos
# =============================================================================


async def experiment_sweep(
    cfg: PipelineConfig,
    input_dir: str | Path,
    sub_rates: Sequence[float],
    loss_ps: Sequence[float],
    denoisers: Sequence[str],
    omegas: Sequence[float | None] = (None,),
) -> list[dict[str, Any]]:
    """Grade sub_rate × p × denoiser (× ω opcional); uma linha por ponto.

    Todos os frames são reconstruídos em cada ponto para que o PSNR médio
    cubra a sequência inteira.
    """
    if not (sub_rates and loss_ps and denoisers and omegas):
        raise ConfigError("A grade do sweep não pode ser vazia")
    unknown = [kind for kind in denoisers if kind not in DENOISER_KINDS]
    if unknown:
        raise ConfigError(f"Denoisers desconhecidos no sweep: {', '.join(unknown)}")

    sequence = load_sequence(input_dir)
    _check_sequence(cfg, sequence)
    model = load_model(cfg.model_path) if cfg.model_path else None

    rows = []
    for sub_rate in sub_rates:
        for p in loss_ps:
            for kind in denoisers:
                for omega in omegas:
                    point = replace(
                        cfg,
                        sub_rate=sub_rate,
                        loss=LossModel.iid(p, seed=cfg.loss.seed),
                        denoiser=replace(cfg.denoiser, kind=kind),
                        solver=replace(cfg.solver, omega_override=omega)
                        if omega is not None
                        else cfg.solver,
                        reconstruct_all=True,
                    ).validate()
                    report = await process_sequence(point, sequence, model=model, write_outputs=False)
                    rows.append(
                        {
                            "sub_rate": sub_rate,
                            "loss_p": p,
                            "denoiser": kind,
                            "omega": point.solver.omega,
                            "mean_psnr_db": report.mean_psnr_db,
                            "mean_iterations": report.mean_iterations,
                            "agreement": report.agreement,
                        }
                    )
                    logger.info(
                        "sweep sub_rate=%s p=%s denoiser=%s omega=%s → %s dB",
                        sub_rate,
                        p,
                        kind,
                        point.solver.omega,
                        report.mean_psnr_db,
                    )

    write_sweep_csv(rows, Path(cfg.output_dir) / "sweep.csv")
    return rows


def denoise_demo(
    sequence: Sequence[tuple[int, Frame]],
    sigmas: Sequence[float] = DEFAULT_NOISE_SIGMAS,
    denoisers: Sequence[str] = DENOISER_KINDS,
    params: DenoiseParams | None = None,
    seed: int = 0,
    output_dir: str | Path | None = None,
) -> list[dict[str, Any]]:
    """Ruído Gaussiano de desvio σ em cada frame, depois cada denoiser com ω = 0.25·σ.

    Uma linha por (σ, denoiser) com PSNR médio do ruidoso e do filtrado.
    """
    if not sequence or not sigmas or not denoisers:
        raise ConfigError("denoise-demo precisa de frames, sigmas e denoisers")
    params = params or DenoiseParams()

    rows = []
    for sigma in sigmas:
        noisy = [
            (frame, add_gaussian_noise(frame, sigma, seed + fid)) for fid, frame in sequence
        ]
        psnr_noisy = float(np.mean([psnr(n, f) for f, n in noisy]))
        for kind in denoisers:
            strength = DEMO_STRENGTH_PER_SIGMA * sigma
            filtered = [
                psnr(denoise(kind, DenoiseRequest(image=n, strength=strength, params=params)), f)
                for f, n in noisy
            ]
            rows.append(
                {
                    "sigma": float(sigma),
                    "denoiser": kind,
                    "psnr_noisy": psnr_noisy,
                    "psnr_denoised": float(np.mean(filtered)),
                }
            )
            logger.debug("sigma=%s %s: %.2f → %.2f dB", sigma, kind, psnr_noisy, rows[-1]["psnr_denoised"])

    if output_dir is not None:
        write_denoise_demo_csv(rows, Path(output_dir) / "denoise_demo.csv")
    return rows
