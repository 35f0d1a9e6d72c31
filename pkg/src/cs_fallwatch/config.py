"""Configuração do pipeline.

Fontes, da menor para a maior precedência:

1. valores padrão;
2. variáveis ``CSFW_*`` (o ``.env`` do diretório atual é carregado pela CLI);
3. arquivo ``key=value`` com comentários ``#`` passado em ``--config``;
4. flags da linha de comando.

Cada chave espelha uma flag (``sub_rate`` ↔ ``--sub-rate``).
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Literal, Mapping

from dotenv import dotenv_values

from .denoise import DenoiseParams
from .errors import ConfigError, FallwatchError
from .sensing import LossModel, measurement_count
from .solver import DenoiserSpec, SolverConfig

logger = logging.getLogger(__name__)

ENV_PREFIX = "CSFW_"


@dataclass(frozen=True)
class DetectionConfig:
    """Parâmetros da detecção por medições e da máscara espacial."""

    alpha: float = 0.05
    tau_policy: Literal["calibrate", "fixed"] = "calibrate"
    tau: float = 0.1
    tau_floor: float = 0.02
    calibration_frames: int = 10
    pixel_tau: float = 40.0


@dataclass(frozen=True)
class PipelineConfig:
    """Configuração completa de uma execução do pipeline."""

    frame_size: int = 64
    sub_rate: float = 0.5
    matrix_seed: int = 42
    payload: int = 64
    loss: LossModel = field(default_factory=LossModel)
    solver: SolverConfig = field(default_factory=SolverConfig)
    denoiser: DenoiserSpec = field(default_factory=DenoiserSpec)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    reconstruct_all: bool = False
    model_path: Path | None = None
    output_dir: Path = Path("output")
    max_concurrent_frames: int = 4

    @property
    def frame_dims(self) -> tuple[int, int]:
        return (self.frame_size, self.frame_size)

    @property
    def n(self) -> int:
        return self.frame_size * self.frame_size

    @property
    def m(self) -> int:
        return measurement_count(self.frame_size, self.sub_rate)

    def validate(self) -> "PipelineConfig":
        """Valida invariantes entre campos; retorna a própria configuração."""
        if self.frame_size < 1:
            raise ConfigError(f"frame_size deve ser positivo, recebido {self.frame_size}")
        if not 0.0 < self.sub_rate <= 1.0:
            raise ConfigError(f"sub_rate deve estar em (0, 1], recebido {self.sub_rate}")
        if self.payload < 1:
            raise ConfigError(f"payload deve ser >= 1, recebido {self.payload}")
        if self.max_concurrent_frames < 1:
            raise ConfigError("max_concurrent_frames deve ser >= 1")
        det = self.detection
        if not 0.0 <= det.alpha <= 1.0:
            raise ConfigError(f"alpha fora de [0, 1]: {det.alpha}")
        if det.tau_policy not in ("calibrate", "fixed"):
            raise ConfigError(f"tau_policy desconhecida: {det.tau_policy}")
        if not (det.tau > 0 and det.tau_floor > 0 and det.pixel_tau > 0):
            raise ConfigError("tau, tau_floor e pixel_tau devem ser > 0")
        if det.calibration_frames < 1:
            raise ConfigError("calibration_frames deve ser >= 1")
        return self

    def to_flat(self) -> dict[str, Any]:
        """Visão plana (chaves do arquivo de configuração), ordem estável."""
        return {
            "frame_size": self.frame_size,
            "sub_rate": self.sub_rate,
            "matrix_seed": self.matrix_seed,
            "payload": self.payload,
            "loss_p": self.loss.p,
            "loss_seed": self.loss.seed,
            "drop_packets": ",".join(str(s) for s in sorted(self.loss.drop_set)),
            "rho": self.solver.rho,
            "max_iter": self.solver.max_iter,
            "rel_tol": self.solver.rel_tol,
            "omega": self.solver.omega_override,
            "x0_policy": self.solver.x0_policy,
            "denoiser": self.denoiser.kind,
            "kernel_radius": self.denoiser.params.kernel_radius,
            "patch_size": self.denoiser.params.patch_size,
            "search_window": self.denoiser.params.search_window,
            "tv_iterations": self.denoiser.params.tv_iterations,
            "alpha": self.detection.alpha,
            "tau": self.detection.tau,
            "tau_policy": self.detection.tau_policy,
            "tau_floor": self.detection.tau_floor,
            "calibration_frames": self.detection.calibration_frames,
            "pixel_tau": self.detection.pixel_tau,
            "reconstruct_all": self.reconstruct_all,
            "model_path": str(self.model_path) if self.model_path else None,
            "output_dir": str(self.output_dir),
            "max_concurrent_frames": self.max_concurrent_frames,
        }


# =============================================================================
# Parsing
# =============================================================================


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on", "sim"):
        return True
    if value in ("0", "false", "no", "off", "nao", "não"):
        return False
    raise ValueError(f"booleano inválido: {raw!r}")


def _parse_optional_float(raw: str) -> float | None:
    value = raw.strip().lower()
    if value in ("", "none", "auto"):
        return None
    return float(value)


def _parse_optional_path(raw: str) -> Path | None:
    return Path(raw) if raw.strip() else None


def _parse_int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(item) for item in raw.split(",") if item.strip())


KEY_PARSERS: dict[str, Callable[[str], Any]] = {
    "frame_size": int,
    "sub_rate": float,
    "matrix_seed": int,
    "payload": int,
    "loss_p": float,
    "loss_seed": int,
    "drop_packets": _parse_int_list,
    "rho": float,
    "max_iter": int,
    "rel_tol": float,
    "omega": _parse_optional_float,
    "x0_policy": str.strip,
    "denoiser": str.strip,
    "kernel_radius": int,
    "patch_size": int,
    "search_window": int,
    "tv_iterations": int,
    "alpha": float,
    "tau": float,
    "tau_policy": str.strip,
    "tau_floor": float,
    "calibration_frames": int,
    "pixel_tau": float,
    "reconstruct_all": _parse_bool,
    "model_path": _parse_optional_path,
    "output_dir": Path,
    "max_concurrent_frames": int,
}


def parse_values(raw: Mapping[str, Any]) -> dict[str, Any]:
    """Converte valores brutos (strings) para os tipos de cada chave."""
    parsed = {}
    for key, value in raw.items():
        if key not in KEY_PARSERS:
            raise ConfigError(f"Chave de configuração desconhecida: {key}")
        if value is None or not isinstance(value, str):
            parsed[key] = value
            continue
        try:
            parsed[key] = KEY_PARSERS[key](value)
        except ValueError as e:
            raise ConfigError(f"Valor inválido para {key}: {value!r} ({e})") from None
    return parsed


def from_flat(values: Mapping[str, Any], base: PipelineConfig | None = None) -> PipelineConfig:
    """Monta um PipelineConfig a partir de chaves planas já tipadas."""
    flat = (base or PipelineConfig()).to_flat()
    flat.update({k: v for k, v in values.items() if v is not None or k == "omega"})

    try:
        drop = flat["drop_packets"]
        if isinstance(drop, str):
            drop = _parse_int_list(drop)
        loss = (
            LossModel.explicit(drop)
            if drop
            else LossModel.iid(float(flat["loss_p"]), seed=int(flat["loss_seed"]))
        )
        solver = SolverConfig(
            rho=float(flat["rho"]),
            max_iter=int(flat["max_iter"]),
            rel_tol=float(flat["rel_tol"]),
            omega_override=flat["omega"],
            x0_policy=flat["x0_policy"],
        )
        denoiser = DenoiserSpec(
            kind=flat["denoiser"],
            params=DenoiseParams(
                kernel_radius=int(flat["kernel_radius"]),
                patch_size=int(flat["patch_size"]),
                search_window=int(flat["search_window"]),
                tv_iterations=int(flat["tv_iterations"]),
            ),
        )
        detection = DetectionConfig(
            alpha=float(flat["alpha"]),
            tau_policy=flat["tau_policy"],
            tau=float(flat["tau"]),
            tau_floor=float(flat["tau_floor"]),
            calibration_frames=int(flat["calibration_frames"]),
            pixel_tau=float(flat["pixel_tau"]),
        )
        model_path = flat["model_path"]
        config = PipelineConfig(
            frame_size=int(flat["frame_size"]),
            sub_rate=float(flat["sub_rate"]),
            matrix_seed=int(flat["matrix_seed"]),
            payload=int(flat["payload"]),
            loss=loss,
            solver=solver,
            denoiser=denoiser,
            detection=detection,
            reconstruct_all=bool(flat["reconstruct_all"]),
            model_path=Path(model_path) if model_path else None,
            output_dir=Path(flat["output_dir"]),
            max_concurrent_frames=int(flat["max_concurrent_frames"]),
        )
    except ConfigError:
        raise
    except FallwatchError as e:
        raise ConfigError(str(e)) from e

    return config.validate()


def env_values(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    """Chaves ``CSFW_*`` do ambiente (``CSFW_SUB_RATE`` → ``sub_rate``)."""
    environ = os.environ if environ is None else environ
    values = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX) :].lower()
            if key in KEY_PARSERS:
                values[key] = value
            else:
                logger.warning("Variável de ambiente ignorada: %s", name)
    return values


def file_values(path: str | Path) -> dict[str, str]:
    """Lê um arquivo ``key=value`` (comentários com ``#``)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Arquivo de configuração não encontrado: {path}")
    raw = dotenv_values(path)
    return {key.strip().lower().replace("-", "_"): (value or "") for key, value in raw.items()}


def load_config(
    config_file: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> PipelineConfig:
    """Resolve a configuração final: padrões → ambiente → arquivo → flags."""
    merged: dict[str, Any] = parse_values(env_values(environ))
    if config_file is not None:
        merged.update(parse_values(file_values(config_file)))
    if overrides:
        merged.update(parse_values({k: v for k, v in overrides.items() if v is not None}))

    config = from_flat(merged)
    logger.debug("Configuração resolvida: %s", config.to_flat())
    return config
