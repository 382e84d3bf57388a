"""
Event-camera sensor model

Baseline generation compares consecutive coded images; reference-aware (RA)
generation compares against the per-pixel log reference left by the last event
and advances it by tau per emitted event.
"""

import logging
from typing import List, Literal, Sequence, Tuple, Union

import numpy as np

from src.config.settings import SENSOR_Z_FLOOR
from src.models.events import EVENT_DTYPE, EventImage, EventStream, RefState
from src.models.lightfield import AperturePattern, CodedImage, LightField
from src.models.schemas import SensorConfig
from src.nn.tensor import Tensor
from src.services.lightfield_service import code_image, normalize
from src.utils.validators import ArrayValidator

logger = logging.getLogger(__name__)

GOLDEN = 0.6180339887498949
MAX_TIMESTAMP = np.iinfo(np.uint32).max


def quantize_array(x: np.ndarray) -> np.ndarray:
    """Q(x) = sign(x) floor(|x|), float output"""
    return np.sign(x) * np.floor(np.abs(x))


def quantize(x: Union[float, np.ndarray]) -> Union[int, np.ndarray]:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("quantize requires finite input")
    q = quantize_array(arr).astype(np.int64)
    return int(q) if q.ndim == 0 else q


class STEQuantize:
    """Quantizer with an identity Jacobian on the backward pass."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("quantize requires finite input")
        return quantize_array(x)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out


def ste_quantize(x: Tensor) -> Tensor:
    op = STEQuantize()
    out = Tensor(op.forward(x.data))

    def grad_fn(gradient: np.ndarray) -> None:
        x.backward(op.backward(gradient))

    out.grad_fn = grad_fn
    return out


Z_CANDIDATES = 4


def _row_generators(cfg: SensorConfig, key: Tuple[int, ...], row: Tuple[int, ...]) -> List[np.random.Generator]:
    seq = np.random.SeedSequence([cfg.seed, *key, *row])
    return [np.random.Generator(np.random.Philox(child)) for child in seq.spawn(2)]


def _pixel_threshold_noise(cfg: SensorConfig, key: Tuple[int, ...], pixel: Tuple[int, ...]) -> float:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, *key, *pixel])))
    while True:
        z = rng.normal(0.0, cfg.sigma_z)
        if cfg.tau + z > SENSOR_Z_FLOOR:
            return z


def sensor_noise(cfg: SensorConfig, shape: Tuple[int, ...], *key: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Additive log noise w and threshold noise z for one keyed draw

    Each row (every index but the last) owns two Philox streams seeded from
    (seed, *key, *row), one for w and one for z. Pixel x reads entry x of its row's
    w stream and the x-th block of Z_CANDIDATES threshold draws, taking the first
    with tau + z > 1e-6, so a sample depends only on (seed, key, y, x) and not on
    the sensor width. A pixel whose block is exhausted falls back to its own stream.
    """
    shape = tuple(int(s) for s in shape)
    if cfg.noiseless:
        return np.zeros(shape), np.zeros(shape)

    key = tuple(int(k) for k in key)
    width = shape[-1]
    w = np.zeros(shape)
    z = np.zeros(shape)
    for row in np.ndindex(*shape[:-1]):
        w_rng, z_rng = _row_generators(cfg, key, row)
        if cfg.sigma_w > 0:
            w[row] = w_rng.normal(0.0, cfg.sigma_w, size=width)
        if cfg.sigma_z <= 0:
            continue
        candidates = z_rng.normal(0.0, cfg.sigma_z, size=(width, Z_CANDIDATES))
        valid = cfg.tau + candidates > SENSOR_Z_FLOOR
        first = np.argmax(valid, axis=1)
        z[row] = candidates[np.arange(width), first]
        for x in np.flatnonzero(~valid.any(axis=1)):
            z[row + (x,)] = _pixel_threshold_noise(cfg, key, row + (int(x),))
    return w, z


def log_intensity(values: np.ndarray, epsilon: float) -> np.ndarray:
    return np.log(values + epsilon)


def _require_normalized(*images: CodedImage) -> None:
    for img in images:
        if not img.normalized:
            raise ValueError("event generation requires normalized coded images")


def gen_events_baseline(
    prev: CodedImage,
    curr: CodedImage,
    cfg: SensorConfig,
    transition: int = 1,
) -> EventImage:
    """E = Q((ln(I_curr + eps) - ln(I_prev + eps) + w) / (tau + z)); transition is the 1-based n-1."""
    _require_normalized(prev, curr)
    ArrayValidator.require_same_shape(prev.values, curr.values)

    w, z = sensor_noise(cfg, curr.values.shape, transition)
    gap = log_intensity(curr.values, cfg.epsilon) - log_intensity(prev.values, cfg.epsilon)
    events = quantize_array((gap + w) / (cfg.tau + z))
    return EventImage(values=events.astype(np.int64), transition=(transition, transition + 1))


def black_reference(height: int, width: int, cfg: SensorConfig) -> RefState:
    """Reference of a pixel that last saw darkness: ln(eps)."""
    return RefState(
        base=np.full((height, width), np.log(cfg.epsilon)),
        count=np.zeros((height, width), dtype=np.int64),
        tau=cfg.tau,
    )


def image_reference(img: CodedImage, cfg: SensorConfig) -> RefState:
    """Reference initialized from a coded image instead of black."""
    _require_normalized(img)
    return RefState(
        base=log_intensity(img.values, cfg.epsilon),
        count=np.zeros(img.values.shape, dtype=np.int64),
        tau=cfg.tau,
    )


def gen_events_ra(
    curr: CodedImage,
    ref: RefState,
    cfg: SensorConfig,
    transition: int = 1,
) -> Tuple[EventImage, RefState]:
    """E = Q((ln(I_curr + eps) - log_ref + w) / (tau + z)), then log_ref += tau E."""
    _require_normalized(curr)
    if ref.shape != curr.values.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {curr.values.shape}")
    if ref.tau != cfg.tau:
        raise ValueError("reference state was built for a different tau")

    w, z = sensor_noise(cfg, curr.values.shape, transition)
    gap = log_intensity(curr.values, cfg.epsilon) - ref.log_ref
    events = quantize_array((gap + w) / (cfg.tau + z)).astype(np.int64)
    updated = RefState(base=ref.base, count=ref.count + events, tau=ref.tau)
    return EventImage(values=events, transition=(transition, transition + 1)), updated


def coded_sequence(lf: LightField, patterns: Sequence[AperturePattern]) -> List[CodedImage]:
    return [normalize(code_image(lf, p)) for p in patterns]


def simulate_sequence(
    lf: LightField,
    patterns: Sequence[AperturePattern],
    cfg: SensorConfig,
    mode: Literal["baseline", "ra"] = "ra",
    ref_init: Literal["black", "first"] = "black",
) -> List[EventImage]:
    """N patterns -> N-1 event images under the selected event model."""
    if len(patterns) < 2:
        raise ValueError("at least 2 patterns are required")
    if mode not in ("baseline", "ra"):
        raise ValueError(f"unknown event model {mode!r}")

    images = coded_sequence(lf, patterns)
    events: List[EventImage] = []
    if mode == "baseline":
        for n in range(1, len(images)):
            events.append(gen_events_baseline(images[n - 1], images[n], cfg, transition=n))
        return events

    if ref_init == "black":
        ref = black_reference(lf.height, lf.width, cfg)
    elif ref_init == "first":
        ref = image_reference(images[0], cfg)
    else:
        raise ValueError(f"unknown reference initialization {ref_init!r}")

    for n in range(1, len(images)):
        eimg, ref = gen_events_ra(images[n], ref, cfg, transition=n)
        events.append(eimg)
    return events


def accumulate_stream(
    stream: EventStream,
    window: Tuple[int, int],
    transition: Tuple[int, int] = (1, 2),
) -> EventImage:
    """Sum of polarities per pixel over records with t in [t0, t1), labelled with the given transition."""
    t0, t1 = int(window[0]), int(window[1])
    if t0 < 0 or t0 >= t1:
        raise ValueError(f"invalid window [{t0}, {t1})")

    img = np.zeros((stream.height, stream.width), dtype=np.int64)
    rec = stream.records
    inside = rec[(rec["t"] >= t0) & (rec["t"] < t1)]
    np.add.at(img, (inside["y"].astype(np.intp), inside["x"].astype(np.intp)), inside["p"].astype(np.int64))
    return EventImage(values=img, transition=transition)


def expand_to_stream(images: Sequence[EventImage], durations: Sequence[int]) -> EventStream:
    """
    Spread each image's counts over consecutive windows of the given durations

    A pixel with |E| = k gets k records at t0 + floor((j + phase) D / k), j < k, where
    phase in [0, 1) is derived from the pixel address.
    """
    if len(images) != len(durations):
        raise ValueError(f"{len(images)} images but {len(durations)} durations")
    if not images:
        raise ValueError("no event images to expand")
    if any(int(d) <= 0 for d in durations):
        raise ValueError("durations must be > 0")
    height, width = images[0].values.shape
    if any(img.values.shape != (height, width) for img in images):
        raise ValueError("event images differ in size")
    if sum(int(d) for d in durations) > MAX_TIMESTAMP:
        raise ValueError("total duration exceeds the 32-bit timestamp range")

    ys, xs = np.mgrid[0:height, 0:width]
    phase = ((ys * width + xs) * GOLDEN) % 1.0

    chunks = []
    t_start = 0
    for img, duration in zip(images, durations):
        duration = int(duration)
        counts = np.abs(img.values)
        py, px = np.nonzero(counts)
        k = counts[py, px]
        rep_y, rep_x = np.repeat(py, k), np.repeat(px, k)
        rep_k = np.repeat(k, k)
        # j-th record of each pixel
        starts = np.repeat(np.cumsum(k) - k, k)
        j = np.arange(rep_k.size) - starts
        offset = np.floor((j + phase[rep_y, rep_x]) * duration / rep_k).astype(np.int64)
        t = t_start + np.minimum(offset, duration - 1)

        chunk = np.empty(rep_k.size, dtype=EVENT_DTYPE)
        chunk["x"], chunk["y"], chunk["t"] = rep_x, rep_y, t
        chunk["p"] = np.sign(img.values[rep_y, rep_x])
        chunks.append(chunk)
        t_start += duration

    records = np.concatenate(chunks)
    records = records[np.lexsort((records["x"], records["y"], records["t"]))]
    logger.debug("expanded %d event images into %d records", len(images), records.size)
    return EventStream(width=width, height=height, records=records)


def window_bounds(durations: Sequence[int]) -> List[Tuple[int, int]]:
    """Consecutive [t0, t1) windows matching expand_to_stream"""
    bounds, t = [], 0
    for d in durations:
        bounds.append((t, t + int(d)))
        t += int(d)
    return bounds
