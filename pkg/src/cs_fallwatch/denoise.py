"""Denoisers de prateleira usados no passo de denoising do ADMM.

Todos recebem a força ω na escala de intensidade (0–255) e são determinísticos.
Calibrações fixas força → parâmetro:

- blur Gaussiano: desvio do kernel = 1.0·ω, truncado em 3 desvios;
- TV: min TV(v) + 1/(2ω²)·‖v − entrada‖² (peso do TV = ω²);
- NLM: h = 0.4·ω·(área do patch).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .errors import InvalidDenoiseRequestError, UnknownDenoiserError
from .frames import Frame

logger = logging.getLogger(__name__)

BLUR_SIGMA_FACTOR = 1.0
BLUR_TRUNCATE = 3.0
NLM_H_FACTOR = 0.4
TV_STEP = 0.248

DENOISER_KINDS = ("identity", "gaussian_blur", "median", "tv", "nlm")


@dataclass(frozen=True)
class DenoiseParams:
    """Parâmetros específicos de cada denoiser (em pixels / iterações)."""

    kernel_radius: int = 1
    patch_size: int = 3
    search_window: int = 7
    tv_iterations: int = 50


@dataclass(frozen=True)
class DenoiseRequest:
    image: Frame
    strength: float
    params: DenoiseParams = field(default_factory=DenoiseParams)

    def __post_init__(self) -> None:
        if self.strength < 0:
            raise InvalidDenoiseRequestError(f"Força negativa: {self.strength}")
        if self.params.kernel_radius < 1:
            raise InvalidDenoiseRequestError("kernel_radius deve ser >= 1")
        if self.params.search_window < self.params.patch_size:
            raise InvalidDenoiseRequestError("search_window deve ser >= patch_size")
        if self.params.tv_iterations < 1:
            raise InvalidDenoiseRequestError("tv_iterations deve ser >= 1")


# =============================================================================
# Denoisers
# =============================================================================


def identity(req: DenoiseRequest) -> Frame:
    return req.image


def gaussian_blur(req: DenoiseRequest) -> Frame:
    """Convolução Gaussiana separável com reflexão nas bordas."""
    if req.strength == 0:
        return req.image
    blurred = ndimage.gaussian_filter(
        req.image.pixels,
        sigma=BLUR_SIGMA_FACTOR * req.strength,
        mode="reflect",
        truncate=BLUR_TRUNCATE,
    )
    return Frame.from_array(blurred)


def median_filter(req: DenoiseRequest) -> Frame:
    """Mediana na vizinhança (2r+1)² com reflexão nas bordas."""
    if req.strength == 0:
        return req.image
    size = 2 * req.params.kernel_radius + 1
    return Frame.from_array(ndimage.median_filter(req.image.pixels, size=size, mode="reflect"))


def _gradient(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diferenças progressivas com fronteira de Neumann."""
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:-1, :] = u[1:, :] - u[:-1, :]
    gy[:, :-1] = u[:, 1:] - u[:, :-1]
    return gx, gy


def _divergence(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Adjunto negativo de ``_gradient``."""
    px = px.copy()
    py = py.copy()
    px[-1, :] = 0.0
    py[:, -1] = 0.0
    div = px + py
    div[1:, :] -= px[:-1, :]
    div[:, 1:] -= py[:, :-1]
    return div


def total_variation(frame: Frame) -> float:
    """TV isotrópica com a mesma discretização usada por ``tv_denoise``."""
    gx, gy = _gradient(frame.pixels)
    return float(np.sum(np.sqrt(gx * gx + gy * gy)))


def tv_denoise(req: DenoiseRequest) -> Frame:
    """Prox do TV por projeção dual de Chambolle com iterações fixas."""
    if req.strength == 0:
        return req.image

    g = req.image.pixels
    weight = req.strength * req.strength
    px = np.zeros_like(g)
    py = np.zeros_like(g)

    for _ in range(req.params.tv_iterations):
        gx, gy = _gradient(_divergence(px, py) - g / weight)
        norm = np.sqrt(gx * gx + gy * gy)
        px = (px + TV_STEP * gx) / (1.0 + TV_STEP * norm)
        py = (py + TV_STEP * gy) / (1.0 + TV_STEP * norm)

    return Frame.from_array(g - weight * _divergence(px, py))


def nlm_denoise(req: DenoiseRequest) -> Frame:
    """Non-local means: média ponderada por similaridade de patches.

    Peso de cada vizinho da janela de busca: exp(−‖Δpatch‖²/h²), com
    h = 0.4·ω·(área do patch); pesos normalizados para somar 1.
    """
    patch = req.params.patch_size
    window = req.params.search_window
    if patch % 2 == 0 or window % 2 == 0:
        raise InvalidDenoiseRequestError("patch_size e search_window devem ser ímpares")
    image = req.image.pixels
    height, width = image.shape
    if height < window or width < window:
        raise InvalidDenoiseRequestError(
            f"Frame {width}x{height} menor que a janela de busca {window}"
        )
    if req.strength == 0:
        return req.image

    half_p = patch // 2
    half_w = window // 2
    reach = half_w + half_p
    h = NLM_H_FACTOR * req.strength * patch * patch

    padded = np.pad(image, reach, mode="symmetric")
    center = padded[half_w : half_w + height + 2 * half_p, half_w : half_w + width + 2 * half_p]

    acc = np.zeros_like(image)
    norm = np.zeros_like(image)
    for dy in range(-half_w, half_w + 1):
        for dx in range(-half_w, half_w + 1):
            shifted = padded[
                half_w + dy : half_w + dy + height + 2 * half_p,
                half_w + dx : half_w + dx + width + 2 * half_p,
            ]
            diff2 = (center - shifted) ** 2
            dist = ndimage.uniform_filter(diff2, size=patch, mode="constant")
            dist = np.maximum(dist[half_p : half_p + height, half_p : half_p + width], 0.0)
            weight = np.exp(-(dist * patch * patch) / (h * h))
            acc += weight * shifted[half_p : half_p + height, half_p : half_p + width]
            norm += weight

    return Frame.from_array(acc / norm)


_DENOISERS: dict[str, Callable[[DenoiseRequest], Frame]] = {
    "identity": identity,
    "gaussian_blur": gaussian_blur,
    "median": median_filter,
    "tv": tv_denoise,
    "nlm": nlm_denoise,
}


def denoise(kind: str, req: DenoiseRequest) -> Frame:
    """Despacha para o denoiser ``kind``."""
    try:
        fn = _DENOISERS[kind]
    except KeyError:
        raise UnknownDenoiserError(
            f"Denoiser desconhecido: {kind}. Use um de: {', '.join(DENOISER_KINDS)}"
        ) from None
    return fn(req)
