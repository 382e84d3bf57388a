import logging
import math
from typing import Sequence

import numpy as np
from scipy.ndimage import correlate1d

from src.config.settings import (
    COO_BITS_PER_EVENT,
    INTENSITY_BIT_DEPTH,
    N_VIEWS,
    SENSOR_PIXELS,
    SENSOR_THROUGHPUT_EPS,
    VIEW_GRID,
)
from src.models.events import EventImage
from src.models.lightfield import LightField
from src.models.schemas import DataRateReport, EventStats
from src.utils.validators import ArrayValidator

logger = logging.getLogger(__name__)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_RANGE = 1.0


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    ArrayValidator.require_same_shape(a, b, "shape mismatch")
    diff = a - b
    return float(np.mean(diff * diff))


def _psnr_from_mse(mse: float) -> float:
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def psnr(ref: LightField, est: LightField) -> float:
    """10 log10(1 / MSE) over the whole 4-D tensor; +inf for identical inputs."""
    return _psnr_from_mse(_mse(ref.values, est.values))


def psnr_per_view(ref: LightField, est: LightField) -> np.ndarray:
    """8x8 table of per-view PSNR, indexed [v, u]."""
    ArrayValidator.require_same_shape(ref.values, est.values, "shape mismatch")
    table = np.empty((VIEW_GRID, VIEW_GRID))
    for v in range(VIEW_GRID):
        for u in range(VIEW_GRID):
            table[v, u] = _psnr_from_mse(_mse(ref.view(u, v), est.view(u, v)))
    return table


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D window is the outer product."""
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    half = taps.size // 2
    out = correlate1d(img, taps, axis=0, mode="constant")
    out = correlate1d(out, taps, axis=1, mode="constant")
    return out[half:img.shape[0] - half, half:img.shape[1] - half]


def ssim(ref: np.ndarray, est: np.ndarray) -> float:
    """Mean local SSIM over the valid region with an 11x11, sigma 1.5 Gaussian window."""
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    ArrayValidator.require_same_shape(ref, est, "shape mismatch")
    if ref.ndim != 2 or min(ref.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs 2-D images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")

    taps = gaussian_window()
    c1 = (SSIM_K1 * SSIM_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_RANGE) ** 2

    mu_x = _filter_valid(ref, taps)
    mu_y = _filter_valid(est, taps)
    sigma_xx = _filter_valid(ref * ref, taps) - mu_x * mu_x
    sigma_yy = _filter_valid(est * est, taps) - mu_y * mu_y
    sigma_xy = _filter_valid(ref * est, taps) - mu_x * mu_y

    numerator = (2.0 * (mu_x * mu_y) + c1) * (2.0 * sigma_xy + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_xx + sigma_yy + c2)
    return float(np.mean(numerator / denominator))


def lightfield_ssim(ref: LightField, est: LightField) -> float:
    """Mean SSIM over the 64 views."""
    ArrayValidator.require_same_shape(ref.values, est.values, "shape mismatch")
    scores = [ssim(ref.view(u, v), est.view(u, v)) for v in range(VIEW_GRID) for u in range(VIEW_GRID)]
    return float(np.mean(scores))


def event_stats(images: Sequence[EventImage]) -> EventStats:
    """Mean |E| per pixel for each transition and their total"""
    if not images:
        raise ValueError("no event images given")
    shape = images[0].values.shape
    if any(img.values.shape != shape for img in images):
        raise ValueError("event images differ in size")

    per_transition = [float(np.abs(img.values).mean()) for img in images]
    return EventStats(per_transition=per_transition, total=float(sum(per_transition)), pixels=int(np.prod(shape)))


def data_rate(events_per_pixel: float, bits_per_event: int = COO_BITS_PER_EVENT) -> DataRateReport:
    if events_per_pixel <= 0 or bits_per_event <= 0:
        raise ValueError("events per pixel and bits per event must be > 0")
    sensor_bits = events_per_pixel * bits_per_event
    return DataRateReport(
        events_per_pixel=events_per_pixel,
        bits_per_event=bits_per_event,
        bits_per_sensor_pixel=sensor_bits,
        bits_per_lightfield_pixel=sensor_bits / N_VIEWS,
        events_per_lightfield_pixel=events_per_pixel / N_VIEWS,
    )


def intensity_data_rate(n_frames: int, bit_depth: int = INTENSITY_BIT_DEPTH) -> float:
    """Bits per sensor pixel for an intensity-based capture of n_frames coded images."""
    if n_frames <= 0 or bit_depth <= 0:
        raise ValueError("frame count and bit depth must be > 0")
    return float(n_frames * bit_depth)


def measurement_time(
    events_per_pixel: float,
    throughput_eps: float = SENSOR_THROUGHPUT_EPS,
    sensor_pixels: int = SENSOR_PIXELS,
) -> float:
    """Lower bound in seconds for reading out events_per_pixel at full sensor throughput."""
    if events_per_pixel <= 0 or throughput_eps <= 0 or sensor_pixels <= 0:
        raise ValueError("inputs must be > 0")
    return events_per_pixel / (throughput_eps / sensor_pixels)
