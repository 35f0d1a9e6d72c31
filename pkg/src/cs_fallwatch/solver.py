"""Lado do decoder: reconstrução plug-and-play por ADMM.

Cada iteração alterna:

1. passo de inversão  x ← argmin ½‖Φx − y‖² + (ρ/2)‖x − x̃‖², com x̃ = v − ϑ̄;
2. passo de denoising v ← 𝒟_ω(x + ϑ̄);
3. atualização do dual escalado ϑ̄ ← ϑ̄ + (x − v).

Como ΦΦᵀ = I, o passo de inversão tem forma fechada O(MN):
x = x̃ + Φᵀ(y − Φx̃)/(1 + ρ).

Com x⁰ = Φᵀy o primeiro passo de inversão não muda x, por isso o critério
de parada por variação relativa só vale a partir da segunda iteração.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, NamedTuple

import numpy as np

from .denoise import DENOISER_KINDS, DenoiseParams, DenoiseRequest, denoise
from .errors import (
    DimensionMismatchError,
    EmptyMeasurementError,
    EmptyTraceError,
    InvalidMatrixShapeError,
    InvalidPenaltyError,
    SolverError,
    UnknownDenoiserError,
)
from .frames import Frame, SignalVec, devectorize, vectorize
from .metrics import psnr
from .sensing import MeasurementMatrix, MeasurementSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Configuração do ADMM (ρ fixo; ω = √(1/ρ) salvo override)."""

    rho: float = 1.0
    max_iter: int = 25
    rel_tol: float = 1e-4
    omega_override: float | None = None
    x0_policy: Literal["backprojection", "zeros", "supplied"] = "backprojection"
    x0: SignalVec | None = None

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise InvalidPenaltyError(f"rho deve ser > 0, recebido {self.rho}")
        if self.max_iter < 1:
            raise SolverError(f"max_iter deve ser >= 1, recebido {self.max_iter}")
        if self.rel_tol < 0:
            raise SolverError(f"rel_tol deve ser >= 0, recebido {self.rel_tol}")
        if self.omega_override is not None and self.omega_override < 0:
            raise SolverError(f"omega deve ser >= 0, recebido {self.omega_override}")
        if self.x0_policy not in ("backprojection", "zeros", "supplied"):
            raise SolverError(f"x0_policy desconhecida: {self.x0_policy}")
        if self.x0_policy == "supplied" and self.x0 is None:
            raise SolverError("x0_policy=supplied exige x0")

    @property
    def omega(self) -> float:
        if self.omega_override is not None:
            return self.omega_override
        return math.sqrt(1.0 / self.rho)


@dataclass(frozen=True)
class DenoiserSpec:
    """Denoiser 𝒟_ω escolhido para o passo de denoising.

    ``strength`` só é usada quando o denoiser roda fora do ADMM; dentro dele a
    força vem de ``SolverConfig.omega``.
    """

    kind: str = "tv"
    strength: float = 0.0
    params: DenoiseParams = field(default_factory=DenoiseParams)

    def __post_init__(self) -> None:
        if self.kind not in DENOISER_KINDS:
            raise UnknownDenoiserError(
                f"Denoiser desconhecido: {self.kind}. Use um de: {', '.join(DENOISER_KINDS)}"
            )
        if self.strength < 0:
            raise SolverError(f"strength deve ser >= 0, recebido {self.strength}")


class TraceRow(NamedTuple):
    iter: int
    primal_residual: float
    rel_change: float
    psnr: float | None


@dataclass(frozen=True)
class SolverState:
    x: SignalVec
    v: SignalVec
    dual: SignalVec
    k: int = 0
    trace: tuple[TraceRow, ...] = ()


# =============================================================================
# Passos do ADMM
# =============================================================================


def _check_measurements(phi: MeasurementMatrix, y: MeasurementSet) -> None:
    if len(y) == 0:
        raise EmptyMeasurementError(f"Frame {y.frame_id} sem medições")
    if y.matrix_seed != phi.seed:
        raise InvalidMatrixShapeError(
            f"Medições geradas com seed {y.matrix_seed}, Φ tem seed {phi.seed}"
        )
    if len(y) != phi.rows or not np.array_equal(y.row_indices, phi.row_indices):
        raise InvalidMatrixShapeError("Índices de linha de y não correspondem às linhas de Φ")


def inversion_step(
    phi: MeasurementMatrix,
    y: MeasurementSet,
    x_tilde: SignalVec,
    rho: float,
) -> SignalVec:
    """Minimizador exato de ½‖Φx − y‖² + (ρ/2)‖x − x̃‖² (identidade de Woodbury)."""
    if not rho > 0:
        raise InvalidPenaltyError(f"rho deve ser > 0, recebido {rho}")
    if len(x_tilde) != phi.cols:
        raise InvalidMatrixShapeError(
            f"x̃ de tamanho {len(x_tilde)} incompatível com Φ de {phi.cols} colunas"
        )
    if len(y) != phi.rows:
        raise InvalidMatrixShapeError(f"{len(y)} medições para Φ com {phi.rows} linhas")

    a = phi.entries
    residual = y.values - a @ x_tilde.values
    return x_tilde.with_values(x_tilde.values + (a.T @ residual) / (1.0 + rho))


def make_denoiser(spec: DenoiserSpec) -> Callable[[Frame, float], Frame]:
    """Fecha ``spec`` num callable ``(frame, omega) -> frame``."""
    if spec.kind not in DENOISER_KINDS:
        raise UnknownDenoiserError(f"Denoiser desconhecido: {spec.kind}")

    def _apply(frame: Frame, omega: float) -> Frame:
        return denoise(spec.kind, DenoiseRequest(image=frame, strength=omega, params=spec.params))

    return _apply


def denoising_step(
    spec: DenoiserSpec,
    r: SignalVec,
    omega: float | None = None,
) -> SignalVec:
    """Aplica 𝒟_ω à imagem "ruidosa" r = x + ϑ̄ e revetoriza."""
    strength = spec.strength if omega is None else omega
    return vectorize(make_denoiser(spec)(devectorize(r), strength))


def dual_update(state: SolverState) -> SignalVec:
    """ϑ̄ + (x − v); o passo ρ está implícito na forma escalada."""
    if not len(state.x) == len(state.v) == len(state.dual):
        raise DimensionMismatchError("x, v e dual com tamanhos diferentes")
    return state.dual.with_values(state.dual.values + state.x.values - state.v.values)


def residual_trace(state: SolverState) -> list[TraceRow]:
    """Trace por iteração para emissão em CSV."""
    if state.k < 1 or not state.trace:
        raise EmptyTraceError("Solver ainda não executou nenhuma iteração")
    return list(state.trace)


# =============================================================================
# Laço principal
# =============================================================================


def _frame_dims(n: int, dims: tuple[int, int] | None, ground_truth: Frame | None) -> tuple[int, int]:
    if ground_truth is not None:
        dims = ground_truth.dims
    if dims is None:
        side = math.isqrt(n)
        if side * side != n:
            raise DimensionMismatchError(f"N={n} não é quadrado perfeito; informe as dimensões")
        dims = (side, side)
    if dims[0] * dims[1] != n:
        raise DimensionMismatchError(f"Dimensões {dims} incompatíveis com N={n}")
    return dims


def _initial_x(phi: MeasurementMatrix, y: MeasurementSet, cfg: SolverConfig, dims) -> SignalVec:
    if cfg.x0_policy == "zeros":
        return SignalVec(values=np.zeros(phi.cols), origin_dims=dims)
    if cfg.x0_policy == "supplied":
        if len(cfg.x0) != phi.cols:
            raise DimensionMismatchError("x0 fornecido com tamanho incompatível")
        return SignalVec(values=cfg.x0.values, origin_dims=dims)
    return SignalVec(values=phi.entries.T @ y.values, origin_dims=dims)


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    change = float(np.linalg.norm(new - old))
    base = float(np.linalg.norm(old))
    if base == 0.0:
        return 0.0 if change == 0.0 else math.inf
    return change / base


def reconstruct(
    phi: MeasurementMatrix,
    y: MeasurementSet,
    cfg: SolverConfig,
    spec: DenoiserSpec,
    ground_truth: Frame | None = None,
    dims: tuple[int, int] | None = None,
) -> tuple[Frame, SolverState]:
    """Reconstrói um frame a partir de medições (completas ou parciais).

    Para em ``cfg.max_iter`` iterações ou quando a variação relativa de x
    fica abaixo de ``cfg.rel_tol``.
    """
    _check_measurements(phi, y)
    dims = _frame_dims(phi.cols, dims, ground_truth)
    omega = cfg.omega

    x = _initial_x(phi, y, cfg, dims)
    state = SolverState(x=x, v=x, dual=x.with_values(np.zeros(phi.cols)))

    for k in range(1, cfg.max_iter + 1):
        x_tilde = state.v.with_values(state.v.values - state.dual.values)
        x_new = inversion_step(phi, y, x_tilde, cfg.rho)
        v_new = denoising_step(spec, x_new.with_values(x_new.values + state.dual.values), omega)

        rel_change = _relative_change(x_new.values, state.x.values)
        state = replace(state, x=x_new, v=v_new)
        state = replace(state, dual=dual_update(state))

        primal = float(np.linalg.norm(x_new.values - v_new.values))
        quality = psnr(devectorize(x_new), ground_truth) if ground_truth is not None else None
        state = replace(state, k=k, trace=state.trace + (TraceRow(k, primal, rel_change, quality),))

        logger.debug(
            "frame=%s iter=%s primal=%.4e rel_change=%.4e psnr=%s",
            y.frame_id,
            k,
            primal,
            rel_change,
            "-" if quality is None else f"{quality:.2f}",
        )
        if k > 1 and rel_change < cfg.rel_tol:
            break

    return devectorize(state.x), state
