"""Light-field image formation, patching and synthetic scene generation."""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config.settings import N_VIEWS, VIEW_GRID, SYNTH_OCTAVES, SYNTH_MAX_DISPARITY
from src.models.lightfield import AperturePattern, CodedImage, LightField

logger = logging.getLogger(__name__)

CENTER_VIEW = VIEW_GRID // 2


def code_image(lf: LightField, pattern: AperturePattern) -> CodedImage:
    """I(x, y) = sum_{u,v} a_{u,v} L_{x,y,u,v}"""
    values = np.tensordot(lf.values, pattern.values, axes=([2, 3], [0, 1]))
    return CodedImage(values=values, normalized=False)


def normalize(img: CodedImage) -> CodedImage:
    if img.normalized:
        raise ValueError("coded image is already normalized")
    return CodedImage(values=img.values / N_VIEWS, normalized=True)


def extract_patches(lf: LightField, size: int, stride: int) -> List[LightField]:
    """All axis-aligned size x size patches with origins on the stride grid, row-major."""
    if size <= 0 or stride <= 0:
        raise ValueError("patch size and stride must be > 0")
    if size > min(lf.width, lf.height):
        raise ValueError(f"patch size {size} exceeds light field {lf.width}x{lf.height}")

    patches = []
    for y0 in range(0, lf.height - size + 1, stride):
        for x0 in range(0, lf.width - size + 1, stride):
            patches.append(LightField(values=lf.values[y0:y0 + size, x0:x0 + size]))
    return patches


def assemble_patches(patches: Sequence[LightField], width: int, height: int) -> LightField:
    """Inverse of extract_patches for a stride equal to the patch size."""
    if not patches:
        raise ValueError("no patches to assemble")
    size = patches[0].height
    cols, rows = width // size, height // size
    if cols * size != width or rows * size != height or len(patches) != rows * cols:
        raise ValueError("patches do not tile the requested size")

    out = np.empty((height, width, VIEW_GRID, VIEW_GRID))
    for i, patch in enumerate(patches):
        y0, x0 = (i // cols) * size, (i % cols) * size
        out[y0:y0 + size, x0:x0 + size] = patch.values
    return LightField(values=out)


def _value_noise(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Sum of bilinearly upsampled random grids, rescaled to [0, 1]."""
    total = np.zeros((height, width))
    for octave, cell in enumerate(SYNTH_OCTAVES):
        gh, gw = height // cell + 2, width // cell + 2
        grid = rng.random((gh, gw))
        ys = np.arange(height) / cell
        xs = np.arange(width) / cell
        y0, x0 = np.floor(ys).astype(int), np.floor(xs).astype(int)
        fy, fx = (ys - y0)[:, None], (xs - x0)[None, :]
        top = grid[y0][:, x0] * (1 - fx) + grid[y0][:, x0 + 1] * fx
        bottom = grid[y0 + 1][:, x0] * (1 - fx) + grid[y0 + 1][:, x0 + 1] * fx
        total += (top * (1 - fy) + bottom * fy) * 0.5 ** octave
    lo, hi = total.min(), total.max()
    if hi - lo < 1e-12:
        return np.full_like(total, 0.5)
    return (total - lo) / (hi - lo)


def _shifted(plane: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate by (dy, dx) with edge clamping."""
    height, width = plane.shape
    ys = np.clip(np.arange(height) - dy, 0, height - 1)
    xs = np.clip(np.arange(width) - dx, 0, width - 1)
    return plane[ys][:, xs]


def synth_lightfield(
    seed: int,
    width: int,
    height: int,
    layers: int,
    disparities: Optional[Sequence[int]] = None,
) -> LightField:
    """
    Layered fronto-parallel scene with integer disparities

    Layers are drawn back to front in the given order; the first layer is opaque,
    later layers carry a blob-shaped alpha mask and occlude the ones behind.
    View (u, v) shows a plane with disparity d translated by (d(u-4), d(v-4)).
    """
    if layers < 1:
        raise ValueError("layers must be >= 1")
    if width < 1 or height < 1:
        raise ValueError(f"width and height must be >= 1 (got {width}x{height})")

    rng = np.random.default_rng(seed)
    if disparities is None:
        pool = np.arange(-SYNTH_MAX_DISPARITY, SYNTH_MAX_DISPARITY + 1)
        if layers > pool.size:
            raise ValueError(f"at most {pool.size} layers with default disparities")
        disparities = sorted(rng.choice(pool, size=layers, replace=False).tolist())
    disparities = [int(d) for d in disparities]
    if len(disparities) != layers or len(set(disparities)) != layers:
        raise ValueError("need one distinct disparity per layer")

    textures = [_value_noise(rng, height, width) for _ in range(layers)]
    masks = [np.ones((height, width))]
    for _ in range(layers - 1):
        masks.append((_value_noise(rng, height, width) > 0.5).astype(np.float64))

    values = np.empty((height, width, VIEW_GRID, VIEW_GRID))
    for v in range(VIEW_GRID):
        for u in range(VIEW_GRID):
            view = np.zeros((height, width))
            for d, tex, mask in zip(disparities, textures, masks):
                dy, dx = d * (v - CENTER_VIEW), d * (u - CENTER_VIEW)
                alpha = _shifted(mask, dy, dx)
                view = alpha * _shifted(tex, dy, dx) + (1 - alpha) * view
            values[:, :, v, u] = view

    logger.debug("synthesized %dx%d light field, seed=%d, disparities=%s", width, height, seed, disparities)
    return LightField(values=np.clip(values, 0.0, 1.0))


def estimate_shift(view_a: np.ndarray, view_b: np.ndarray, max_shift: int = SYNTH_MAX_DISPARITY) -> np.ndarray:
    """
    Brute-force horizontal shift per scanline

    Returns, for every row, the integer s in [-max_shift, max_shift] minimizing the
    mean absolute difference between view_b[y, x] and view_a[y, x - s] over the
    columns valid for every candidate shift.
    """
    if view_a.shape != view_b.shape:
        raise ValueError("views must have the same shape")
    width = view_a.shape[1]
    lo, hi = max_shift, width - max_shift
    if hi <= lo:
        raise ValueError("views too narrow for the shift range")

    shifts = np.arange(-max_shift, max_shift + 1)
    errors = np.stack([
        np.abs(view_b[:, lo:hi] - view_a[:, lo - s:hi - s]).mean(axis=1) for s in shifts
    ])
    return shifts[np.argmin(errors, axis=0)]


def disparity_histogram(lf: LightField, max_shift: int = SYNTH_MAX_DISPARITY) -> Dict[int, int]:
    """Per-scanline shift counts between horizontally adjacent views along the center row."""
    counts: Dict[int, int] = {}
    v = CENTER_VIEW
    for u in range(VIEW_GRID - 1):
        for s in estimate_shift(lf.view(u, v), lf.view(u + 1, v), max_shift):
            counts[int(s)] = counts.get(int(s), 0) + 1
    return dict(sorted(counts.items()))


def epipolar_slice(lf: LightField, axis: str, index: int, view: int = CENTER_VIEW) -> np.ndarray:
    """
    Epipolar plane image

    axis="horizontal": fixed row y=index and v=view, returns (u, x).
    axis="vertical": fixed column x=index and u=view, returns (v, y).
    """
    if axis == "horizontal":
        if not 0 <= index < lf.height:
            raise ValueError(f"row {index} out of range")
        return lf.values[index, :, view, :].T.copy()
    if axis == "vertical":
        if not 0 <= index < lf.width:
            raise ValueError(f"column {index} out of range")
        return lf.values[:, index, :, view].T.copy()
    raise ValueError(f"unknown EPI axis {axis!r}")
