"""
Log-domain relations between event images and coded intensities

Event images telescope: summing consecutive transitions gives the event image of
any pair of patterns (virtual events), and with one black pattern in the sequence
every coded intensity can be recovered up to the contrast-threshold quantization.
"""

import logging
from typing import List, Literal, Sequence, Union

import numpy as np

from src.models.events import EventImage
from src.models.lightfield import AperturePattern, CodedImage, LightField
from src.models.schemas import PermutationReport, RecoveryResult, SensorConfig
from src.services.event_service import simulate_sequence
from src.utils.validators import ArrayValidator

logger = logging.getLogger(__name__)


def log_gap(eimg_sum: Union[int, np.ndarray], cfg: SensorConfig) -> Union[float, np.ndarray]:
    """Predicted ln(I'' + eps) - ln(I' + eps) for a (summed) event count"""
    gap = cfg.tau * np.asarray(eimg_sum, dtype=np.float64)
    return float(gap) if gap.ndim == 0 else gap


def _check_sequence(images: Sequence[EventImage]) -> None:
    if not images:
        raise ValueError("no event images given")
    shape = images[0].values.shape
    if any(img.values.shape != shape for img in images):
        raise ValueError("event images differ in size")


def virtual_event(images: Sequence[EventImage], start: int, end: int) -> EventImage:
    """
    Event image of the transition start -> end (1-based pattern indices)

    images[k] holds the transition (k+1, k+2). Forward pairs sum the recorded
    transitions in between; backward pairs take the negated sum.
    """
    _check_sequence(images)
    n = len(images) + 1
    ArrayValidator.require_index(start, 1, n, "from index")
    ArrayValidator.require_index(end, 1, n, "to index")

    stack = np.stack([img.values for img in images])
    if start < end:
        values = stack[start - 1:end - 1].sum(axis=0)
    elif end < start:
        values = -stack[end - 1:start - 1].sum(axis=0)
    else:
        values = np.zeros_like(stack[0])
    return EventImage(values=values, transition=(start, end))


def recover_intensities(images: Sequence[EventImage], black_index: int, cfg: SensorConfig) -> RecoveryResult:
    """I_n = eps (exp(tau S_n) - 1) with S_n the virtual event count from the black pattern to n."""
    _check_sequence(images)
    n_patterns = len(images) + 1
    ArrayValidator.require_index(black_index, 1, n_patterns, "black index")

    recovered: List[CodedImage] = []
    clamped_per_image: List[int] = []
    saturated = 0
    for n in range(1, n_patterns + 1):
        if n == black_index:
            values = np.zeros(images[0].values.shape)
            negative = 0
        else:
            cumulative = virtual_event(images, black_index, n).values
            values = cfg.epsilon * np.expm1(cfg.tau * cumulative)
            negative = int(np.count_nonzero(values < 0))
            saturated += int(np.count_nonzero(values > 1.0))
            values = np.clip(values, 0.0, 1.0)
        clamped_per_image.append(negative)
        recovered.append(CodedImage(values=values, normalized=True))

    clamped = sum(clamped_per_image)
    if clamped:
        logger.warning("clamped %d negative recovered pixels to zero", clamped)
    return RecoveryResult(
        images=recovered,
        black_index=black_index,
        clamped_pixels=clamped,
        clamped_per_image=clamped_per_image,
        saturated_pixels=saturated,
    )


def permute_check(
    lf: LightField,
    patterns: Sequence[AperturePattern],
    perm: Sequence[int],
    cfg: SensorConfig,
    mode: Literal["baseline", "ra"] = "ra",
) -> PermutationReport:
    """
    Compare events recorded under a permuted order with their virtual prediction

    perm[k] is the 1-based original index of the pattern shown at position k+1.
    Both sequences are simulated noiselessly; in RA mode the reference starts at
    each sequence's first coded image (black when the sequence is black-first).
    """
    n = len(patterns)
    order = ArrayValidator.require_permutation(perm, n)
    quiet = cfg.as_noiseless()

    original = simulate_sequence(lf, patterns, quiet, mode=mode, ref_init="first")
    permuted = simulate_sequence(lf, [patterns[p - 1] for p in order], quiet, mode=mode, ref_init="first")

    diffs = []
    for k in range(1, n):
        predicted = virtual_event(original, order[k - 1], order[k]).values
        diffs.append(np.abs(permuted[k - 1].values - predicted))
    diffs = np.stack(diffs)

    report = PermutationReport(
        permutation=list(order),
        max_discrepancy=int(diffs.max()),
        fraction_within_one=float(np.mean(diffs <= 1)),
        per_transition_max=[int(d.max()) for d in diffs],
    )
    logger.info("permutation %s: max discrepancy %d, %.4f within one event",
                report.permutation, report.max_discrepancy, report.fraction_within_one)
    return report
