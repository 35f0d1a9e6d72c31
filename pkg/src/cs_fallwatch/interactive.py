"""Modo interativo da CLI usando Questionary.

Menus para escolher e parametrizar o pipeline, o sweep e a demonstração de
denoising sem decorar flags.
"""

import logging

import questionary

from .config import PipelineConfig, from_flat
from .denoise import DENOISER_KINDS
from .errors import FallwatchError
from .frames import load_sequence
from .pipeline import DEFAULT_NOISE_SIGMAS, denoise_demo, experiment_sweep, run_pipeline
from .reports import SWEEP_COLUMNS
from .ui import (
    console,
    print_error,
    print_rows_table,
    print_stats_table,
    print_tip,
    spinner,
    suppress_library_logs,
)

logger = logging.getLogger(__name__)


# Estilo customizado para Questionary
CUSTOM_STYLE = questionary.Style(
    [
        ("qmark", "fg:#67b7a1 bold"),
        ("question", "bold"),
        ("selected", "fg:#cc5454"),
        ("pointer", "fg:#67b7a1 bold"),
        ("highlighted", "fg:#67b7a1 bold"),
        ("answer", "fg:#f6b93b bold"),
        ("separator", "fg:#6e6e6e"),
    ]
)

SUB_RATE_CHOICES = ("0.1", "0.25", "0.5", "0.75", "1.0")
LOSS_CHOICES = ("0.0", "0.1", "0.2", "0.3")


async def interactive_main(cfg: PipelineConfig) -> None:
    """Menu interativo principal."""
    while True:
        with suppress_library_logs():
            action = await questionary.select(
                f"📡 cs-fallwatch (frames {cfg.frame_size}x{cfg.frame_size}, saída {cfg.output_dir})\n"
                "O que você deseja fazer?",
                choices=[
                    questionary.Choice(
                        "🎥 Executar pipeline",
                        value="pipeline",
                        description="Aquisição, canal, reconstrução e classificação",
                    ),
                    questionary.Choice(
                        "📈 Sweep de parâmetros",
                        value="sweep",
                        description="PSNR médio por sub-rate, perda e denoiser",
                    ),
                    questionary.Choice(
                        "🧽 Demonstração de denoising",
                        value="denoise",
                        description="Ruído Gaussiano + cada denoiser",
                    ),
                    questionary.Choice("🚪 Sair", value="exit"),
                ],
                style=CUSTOM_STYLE,
            ).ask_async()

        if action is None or action == "exit":
            console.print("\n👋 Até logo!")
            break

        try:
            if action == "pipeline":
                await interactive_pipeline(cfg)
            elif action == "sweep":
                await interactive_sweep(cfg)
            elif action == "denoise":
                await interactive_denoise(cfg)
        except FallwatchError as e:
            print_error(f"{e.code}: {e}")
            logger.debug("Falha no modo interativo", exc_info=True)

        await questionary.press_any_key_to_continue(
            "\nPressione qualquer tecla para continuar..."
        ).ask_async()


async def _ask_input_dir() -> str | None:
    return await questionary.path(
        "Diretório com os frames .pgm:",
        only_directories=True,
        style=CUSTOM_STYLE,
    ).ask_async()


async def interactive_pipeline(cfg: PipelineConfig) -> None:
    """Fluxo interativo do pipeline completo."""
    input_dir = await _ask_input_dir()
    if not input_dir:
        return

    sub_rate = await questionary.select(
        "Sub-rate (M/N):",
        choices=list(SUB_RATE_CHOICES),
        default=str(cfg.sub_rate) if str(cfg.sub_rate) in SUB_RATE_CHOICES else None,
        style=CUSTOM_STYLE,
    ).ask_async()
    denoiser = await questionary.select(
        "Denoiser do ADMM:",
        choices=list(DENOISER_KINDS),
        default=cfg.denoiser.kind,
        style=CUSTOM_STYLE,
    ).ask_async()
    loss_p = await questionary.select(
        "Probabilidade de perda de pacote:",
        choices=list(LOSS_CHOICES),
        style=CUSTOM_STYLE,
    ).ask_async()
    if sub_rate is None or denoiser is None or loss_p is None:
        return

    run_cfg = from_flat(
        {"sub_rate": float(sub_rate), "denoiser": denoiser, "loss_p": float(loss_p), "drop_packets": ""},
        base=cfg,
    )
    with spinner("Executando pipeline..."):
        report = await run_pipeline(run_cfg, input_dir)

    print_stats_table(
        "Resultado",
        {
            "Frames": len(report.rows),
            "Reconstruídos": report.reconstructed,
            "PSNR médio (dB)": report.mean_psnr_db,
            "Concordância": report.agreement,
        },
    )
    print_tip(f"Relatórios em {run_cfg.output_dir}")


async def interactive_sweep(cfg: PipelineConfig) -> None:
    """Fluxo interativo do sweep."""
    input_dir = await _ask_input_dir()
    if not input_dir:
        return

    sub_rates = await questionary.checkbox(
        "Sub-rates:", choices=list(SUB_RATE_CHOICES), style=CUSTOM_STYLE
    ).ask_async()
    loss_ps = await questionary.checkbox(
        "Probabilidades de perda:", choices=list(LOSS_CHOICES), style=CUSTOM_STYLE
    ).ask_async()
    denoisers = await questionary.checkbox(
        "Denoisers:", choices=list(DENOISER_KINDS), style=CUSTOM_STYLE
    ).ask_async()
    if not sub_rates or not loss_ps or not denoisers:
        print_error("Selecione ao menos um valor em cada eixo da grade.")
        return

    with spinner("Executando sweep..."):
        rows = await experiment_sweep(
            cfg,
            input_dir,
            sub_rates=[float(s) for s in sub_rates],
            loss_ps=[float(p) for p in loss_ps],
            denoisers=denoisers,
        )
    print_rows_table("Sweep", rows, SWEEP_COLUMNS)


async def interactive_denoise(cfg: PipelineConfig) -> None:
    """Fluxo interativo da demonstração de denoising."""
    input_dir = await _ask_input_dir()
    if not input_dir:
        return

    sigmas = await questionary.checkbox(
        "Desvios do ruído:",
        choices=[questionary.Choice(f"{s:g}", value=s, checked=True) for s in DEFAULT_NOISE_SIGMAS],
        style=CUSTOM_STYLE,
    ).ask_async()
    if not sigmas:
        return

    with spinner("Aplicando denoisers..."):
        rows = denoise_demo(
            load_sequence(input_dir),
            sigmas=sigmas,
            params=cfg.denoiser.params,
            output_dir=cfg.output_dir,
        )
    print_rows_table("Denoising", rows, ["sigma", "denoiser", "psnr_noisy", "psnr_denoised"])
