"""CLI do cs-fallwatch."""

import argparse
import asyncio
import csv
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from dotenv import load_dotenv

from .classify import build_training_set, label_frames, load_model, save_model, train_baseline
from .config import KEY_PARSERS, PipelineConfig, load_config
from .denoise import DENOISER_KINDS
from .errors import ConfigError, FallwatchError
from .frames import load_pgm, load_sequence, save_pgm, vectorize
from .interactive import interactive_main
from .metrics import psnr
from .pipeline import (
    DEFAULT_NOISE_SIGMAS,
    denoise_demo,
    detect_sequence,
    experiment_sweep,
    reconstruct_many,
    run_pipeline,
)
from .reports import (
    SWEEP_COLUMNS,
    write_detection_csv,
    write_labels_csv,
    write_report_csv,
    write_trace_csv,
)
from .sensing import (
    acquire,
    assemble,
    matrix_for,
    packetize,
    read_packets,
    split_by_frame,
    transmit,
    write_packets,
)
from .solver import residual_trace
from .ui import (
    print_header,
    print_rows_table,
    print_stats_table,
    print_success,
    spinner,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# =============================================================================
# Argumentos
# =============================================================================


def _float_list(raw: str) -> list[float]:
    try:
        return [float(item) for item in raw.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de números inválida: {raw!r}") from None


def _str_list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def _config_parent() -> argparse.ArgumentParser:
    """Flags comuns: uma por chave de configuração, mais --config."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--config",
        type=str,
        default=None,
        help="Arquivo key=value com a configuração (comentários com #).",
    )
    group = parent.add_argument_group("configuração")
    for key in KEY_PARSERS:
        flag = "--" + key.replace("_", "-")
        if key == "reconstruct_all":
            group.add_argument(
                flag, dest=key, action="store_const", const="true", default=None,
                help="Reconstrói todos os frames, marcados ou não.",
            )
        else:
            group.add_argument(flag, dest=key, type=str, default=None, metavar=key.upper())
    return parent


def build_parser() -> argparse.ArgumentParser:
    """Parser com todos os subcomandos."""
    parser = argparse.ArgumentParser(
        prog="csfallwatch",
        description="Vigilância com compressed sensing: aquisição, canal com perdas, "
        "reconstrução PnP-ADMM e detecção de quedas.",
    )
    parser.add_argument(
        "-i",
        "--interactive",
        action="store_true",
        help="Modo interativo com menus visuais.",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Logs em nível DEBUG.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Apenas avisos e erros.")

    parent = _config_parent()
    sub = parser.add_subparsers(dest="command", metavar="COMANDO")

    p = sub.add_parser("encode", parents=[parent], help="Adquire medições e grava o stream de pacotes.")
    p.add_argument("--input", required=True, help="Diretório com frames .pgm.")
    p.add_argument("--packets", default=None, help="Arquivo de saída (padrão: <output_dir>/packets.bin).")

    p = sub.add_parser("channel", parents=[parent], help="Aplica o canal de apagamento a um stream.")
    p.add_argument("--packets", required=True, help="Stream de entrada.")
    p.add_argument("--out", required=True, help="Stream de saída com os sobreviventes.")

    p = sub.add_parser("decode", parents=[parent], help="Reconstrói frames a partir de um stream.")
    p.add_argument("--packets", required=True, help="Stream recebido.")
    p.add_argument("--ground-truth", default=None, help="Diretório com os frames originais (PSNR).")
    p.add_argument("--detection", default=None, help="detection.csv: reconstrói só os frames marcados.")

    p = sub.add_parser("detect", parents=[parent], help="Detecção no domínio das medições.")
    p.add_argument("--packets", required=True, help="Stream recebido (o primeiro frame deve estar completo).")

    p = sub.add_parser("classify", parents=[parent], help="Classifica frames com o modelo treinado.")
    p.add_argument("--input", required=True, help="Diretório com frames .pgm.")
    p.add_argument("--background", required=True, help="Frame de fundo (.pgm).")

    p = sub.add_parser("pipeline", parents=[parent], help="Executa o pipeline completo.")
    p.add_argument("--input", required=True, help="Diretório com frames .pgm.")

    p = sub.add_parser("sweep", parents=[parent], help="Grade sub_rate × perda × denoiser.")
    p.add_argument("--input", required=True, help="Diretório com frames .pgm.")
    p.add_argument("--sub-rates", type=_float_list, default=[0.25, 0.5, 0.75])
    p.add_argument("--loss-ps", type=_float_list, default=[0.0])
    p.add_argument("--denoisers", type=_str_list, default=["tv"])
    p.add_argument("--omega-grid", type=_float_list, default=None, help="Valores de ω (padrão: √(1/ρ)).")

    p = sub.add_parser("denoise-demo", parents=[parent], help="Ruído Gaussiano + cada denoiser.")
    p.add_argument("--input", required=True, help="Diretório com frames .pgm.")
    p.add_argument("--sigmas", type=_float_list, default=list(DEFAULT_NOISE_SIGMAS))
    p.add_argument("--denoisers", type=_str_list, default=list(DENOISER_KINDS))
    p.add_argument("--noise-seed", type=int, default=0)

    p = sub.add_parser("train-classifier", parents=[parent], help="Treina o classificador base.")
    p.add_argument("--fall", required=True, help="Diretório com frames de queda.")
    p.add_argument("--nofall", required=True, help="Diretório com frames sem queda.")
    p.add_argument("--background", required=True, help="Frame de fundo (.pgm).")

    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse argumentos da linha de comando."""
    return build_parser().parse_args(argv)


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """Resolve a configuração: padrões, ambiente, --config e flags, nessa ordem.

    Raises:
        ConfigError: chave desconhecida ou valor inválido.
    """
    overrides = {key: getattr(args, key, None) for key in KEY_PARSERS}
    return load_config(getattr(args, "config", None), overrides)


def configure_logging(args: argparse.Namespace) -> None:
    """DEBUG com -v, WARNING com -q, INFO caso contrário."""
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


# =============================================================================
# Subcomandos
# =============================================================================


async def run_encode(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    """Encoder do nó sensor: Φx, detecção sobre y completo e empacotamento."""
    sequence = load_sequence(args.input)
    if sequence[0][1].dims != cfg.frame_dims:
        raise ConfigError(f"Frames {sequence[0][1].dims} incompatíveis com frame_size={cfg.frame_size}")

    with spinner("Gerando matriz de medição..."):
        phi = await asyncio.to_thread(matrix_for, cfg.frame_size, cfg.sub_rate, cfg.matrix_seed)

    ys = [acquire(phi, vectorize(frame), fid) for fid, frame in sequence]
    detection = detect_sequence(ys, cfg.detection)
    packets = [packet for y in ys for packet in packetize(y, cfg.payload)]

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    packets_path = Path(args.packets) if args.packets else out / "packets.bin"
    size = write_packets(packets_path, packets)
    write_detection_csv([fid for fid, _ in sequence], detection.scores, detection.flags, out / "detection.csv")
    return {
        "Frames": len(sequence),
        "Medições por frame": phi.rows,
        "Pacotes": len(packets),
        "Bytes": size,
        "Frames marcados": sum(detection.flags),
        "Arquivo": str(packets_path),
    }


async def run_channel(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    packets = read_packets(args.packets)
    survivors = []
    for frame_id, frame_packets in split_by_frame(packets).items():
        survivors.extend(transmit(frame_packets, cfg.loss.for_frame(frame_id)))
    size = write_packets(args.out, survivors)
    return {
        "Pacotes enviados": len(packets),
        "Pacotes recebidos": len(survivors),
        "Bytes recebidos": size,
        "Arquivo": args.out,
    }


def _flagged_ids(path: str) -> set[int]:
    with open(path, newline="", encoding="utf-8") as f:
        return {int(row["frame_id"]) for row in csv.DictReader(f) if row["flag"] == "1"}


async def run_decode(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    """Decoder: reconstrói cada frame presente no stream."""
    by_frame = split_by_frame(read_packets(args.packets))
    if args.detection:
        flagged = _flagged_ids(args.detection)
        by_frame = {fid: pkts for fid, pkts in by_frame.items() if fid in flagged}

    truth = dict(load_sequence(args.ground_truth)) if args.ground_truth else {}
    phi = await asyncio.to_thread(matrix_for, cfg.frame_size, cfg.sub_rate, cfg.matrix_seed)

    jobs = {}
    for fid, pkts in sorted(by_frame.items()):
        y_partial, phi_partial = assemble(pkts, phi)
        jobs[fid] = (phi_partial, y_partial, truth.get(fid))

    with spinner(f"Reconstruindo {len(jobs)} frame(s)..."):
        results = await reconstruct_many(jobs, cfg)

    out = Path(cfg.output_dir)
    (out / "recon").mkdir(parents=True, exist_ok=True)
    rows = []
    for fid, (recon, state) in sorted(results.items()):
        save_pgm(recon, out / "recon" / f"frame_{fid:04d}.pgm")
        write_trace_csv(residual_trace(state), out / "traces" / f"frame_{fid:04d}.csv")
        rows.append(
            {
                "frame_id": fid,
                "received_measurements": len(jobs[fid][1]),
                "packets_received": len(by_frame[fid]),
                "bytes_received": sum(p.wire_size for p in by_frame[fid]),
                "iterations": state.k,
                "psnr_db": psnr(recon, truth[fid]) if fid in truth else None,
            }
        )
    write_report_csv(rows, out / "decode.csv")
    print_rows_table("Decodificação", rows, ["frame_id", "received_measurements", "iterations", "psnr_db"])
    return {"Frames reconstruídos": len(rows), "Saída": str(out)}


async def run_detect(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    """Detecção sobre o stream recebido; frames parciais não atualizam o fundo."""
    phi = await asyncio.to_thread(matrix_for, cfg.frame_size, cfg.sub_rate, cfg.matrix_seed)
    by_frame = split_by_frame(read_packets(args.packets))
    frame_ids = sorted(by_frame)
    ys = [assemble(by_frame[fid], phi)[0] for fid in frame_ids]
    detection = detect_sequence(ys, cfg.detection)
    path = write_detection_csv(frame_ids, detection.scores, detection.flags, Path(cfg.output_dir) / "detection.csv")
    return {
        "Frames": len(frame_ids),
        "tau": detection.tau,
        "Frames marcados": sum(detection.flags),
        "Arquivo": str(path),
    }


def _require_model_path(cfg: PipelineConfig) -> Path:
    if cfg.model_path is None:
        raise ConfigError("model_path não definido (use --model-path)")
    return cfg.model_path


async def run_classify(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    model = load_model(_require_model_path(cfg))
    background = load_pgm(args.background)
    sequence = load_sequence(args.input)
    labels = label_frames(model, [frame for _, frame in sequence], background, cfg.detection.pixel_tau)
    path = write_labels_csv(
        [(fid, label) for (fid, _), label in zip(sequence, labels)],
        Path(cfg.output_dir) / "labels.csv",
    )
    decided = [label for label in labels if label is not None]
    return {
        "Frames": len(labels),
        "Fall": sum(label.is_fall for label in decided),
        "NoFall": sum(not label.is_fall for label in decided),
        "NoObject": len(labels) - len(decided),
        "Arquivo": str(path),
    }


async def run_train(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    model_path = _require_model_path(cfg)
    background = load_pgm(args.background)
    dataset = build_training_set(args.fall, args.nofall, background, cfg.detection.pixel_tau)
    model = train_baseline(dataset)
    save_model(model, model_path)
    return {"Exemplos": len(dataset), "Modelo": str(model_path)}


async def run_pipeline_command(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    report = await run_pipeline(cfg, args.input)
    print_rows_table(
        "Relatório por frame",
        (row.as_dict() for row in report.rows),
        ["frame_id", "received_measurements", "iterations", "psnr_db", "flag", "label_reconstructed"],
    )
    return {
        "Frames": len(report.rows),
        "Reconstruídos": report.reconstructed,
        "PSNR médio (dB)": report.mean_psnr_db,
        "Concordância": report.agreement,
        "Saída": str(cfg.output_dir),
    }


async def run_sweep(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    rows = await experiment_sweep(
        cfg,
        args.input,
        sub_rates=args.sub_rates,
        loss_ps=args.loss_ps,
        denoisers=args.denoisers,
        omegas=args.omega_grid or (None,),
    )
    print_rows_table("Sweep", rows, SWEEP_COLUMNS)
    return {"Pontos": len(rows), "Arquivo": str(Path(cfg.output_dir) / "sweep.csv")}


async def run_denoise_demo(args: argparse.Namespace, cfg: PipelineConfig) -> dict[str, Any]:
    sequence = load_sequence(args.input)
    rows = await asyncio.to_thread(
        denoise_demo,
        sequence,
        args.sigmas,
        args.denoisers,
        cfg.denoiser.params,
        args.noise_seed,
        cfg.output_dir,
    )
    print_rows_table("Denoising", rows, ["sigma", "denoiser", "psnr_noisy", "psnr_denoised"])
    return {"Linhas": len(rows), "Arquivo": str(Path(cfg.output_dir) / "denoise_demo.csv")}


COMMANDS = {
    "encode": run_encode,
    "channel": run_channel,
    "decode": run_decode,
    "detect": run_detect,
    "classify": run_classify,
    "pipeline": run_pipeline_command,
    "sweep": run_sweep,
    "denoise-demo": run_denoise_demo,
    "train-classifier": run_train,
}


# =============================================================================
# Entry-points
# =============================================================================


def format_error(error: FallwatchError) -> str:
    """Linha única legível por máquina."""
    message = " ".join(str(error).split())
    return f"error code={error.code} message={message}"


async def main(argv: Sequence[str] | None = None) -> int:
    """Entry-point assíncrono; retorna o código de saída."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)

    try:
        if args.interactive:
            await interactive_main(config_from_args(args))
            return 0
        if args.command is None:
            parser.print_help()
            return 2

        cfg = config_from_args(args)
        print_header(f"cs-fallwatch {args.command}", f"sub-rate {cfg.sub_rate} · denoiser {cfg.denoiser.kind}")
        stats = await COMMANDS[args.command](args, cfg)
        print_stats_table("Resumo", stats)
        print_success(f"{args.command} concluído")
        return 0
    except ConfigError as error:
        logger.error("Configuração inválida: %s", error)
        sys.stderr.write(format_error(error) + "\n")
        return 2
    except FallwatchError as error:
        logger.error("Falha em %s: %s", args.command, error)
        sys.stderr.write(format_error(error) + "\n")
        return 1
    except Exception:
        logger.exception("Erro inesperado")
        return 1


def main_sync() -> None:
    """Entry-point síncrono para console scripts."""
    sys.exit(asyncio.run(main()))


if __name__ == "__main__":
    main_sync()
