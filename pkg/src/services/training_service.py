"""
Joint optimization of aperture patterns and the reconstruction network

Patterns are sigmoid(s * logits) with s annealed upward every epoch so the codes
drift toward binary. One Adam instance updates the trainable logits together with
every network parameter; frozen (black) logits never enter the optimizer.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.config.settings import VIEW_GRID
from src.models.events import EventImage
from src.models.lightfield import AperturePattern, LightField
from src.models.schemas import EvalReport, EventModel, EventStats, SensorConfig, TrainConfig
from src.models.state import EpochRecord, PatternLogits, TrainHistory
from src.nn import functional as F
from src.nn.optim import Adam
from src.nn.recnet import ReconNet
from src.pipeline.graph import AcqRecPipeline, create_pipeline
from src.pipeline.nodes import lightfields_from_views
from src.pipeline.routers import frozen_router
from src.services.event_service import simulate_sequence
from src.services.metrics_service import event_stats, lightfield_ssim, psnr

logger = logging.getLogger(__name__)

LOGIT_SCALE = 1.0
# noise context tag for validation batches, kept apart from training batch indices
VALIDATION_TAG = 2 ** 31 - 1


def patterns_from_logits(logits: PatternLogits, s: float) -> List[AperturePattern]:
    if s <= 0:
        raise ValueError(f"sharpness s must be > 0, got {s}")
    grids = _pattern_grids(logits, s)
    return [
        AperturePattern.black() if frozen else AperturePattern(values=grid)
        for grid, frozen in zip(grids, logits.frozen_black)
    ]


def _pattern_grids(logits: PatternLogits, s: float) -> np.ndarray:
    grids = F.sigmoid(s * logits.values)
    grids[np.asarray(logits.frozen_black, dtype=bool)] = 0.0
    return grids


def init_logits(n_patterns: int, frozen_black: Sequence[bool], rng: np.random.Generator) -> PatternLogits:
    values = rng.normal(0.0, LOGIT_SCALE, size=(n_patterns, VIEW_GRID, VIEW_GRID))
    values[np.asarray(frozen_black, dtype=bool)] = 0.0
    return PatternLogits(values=values, frozen_black=list(frozen_black))


def binarize_patterns(patterns: Sequence[AperturePattern]) -> List[AperturePattern]:
    """Threshold at 0.5, ties go to 1."""
    return [AperturePattern(values=(p.values >= 0.5).astype(np.float64), binary=True) for p in patterns]


def split_dataset(dataset: Sequence[LightField], val_fraction: float) -> Tuple[List[LightField], List[LightField]]:
    """Last val_fraction of the list is held out; the training part keeps at least one sample."""
    n_val = int(math.floor(len(dataset) * val_fraction))
    n_val = min(n_val, len(dataset) - 1)
    cut = len(dataset) - n_val
    return list(dataset[:cut]), list(dataset[cut:])


def _check_dataset(dataset: Sequence[LightField]) -> None:
    if not dataset:
        raise ValueError("dataset is empty")
    shape = dataset[0].values.shape
    for i, lf in enumerate(dataset):
        if lf.values.shape != shape:
            raise ValueError(f"sample {i} has shape {lf.values.shape}, expected {shape}")


def _stack(samples: Sequence[LightField]) -> np.ndarray:
    return np.stack([lf.values for lf in samples])


def _emergence(grids: np.ndarray, frozen: Sequence[bool]) -> Tuple[float, int]:
    """Smallest mean transmittance among trainable patterns and its 1-based index."""
    candidates = [i for i, f in enumerate(frozen) if not f] or list(range(len(frozen)))
    means = [float(grids[i].mean()) for i in candidates]
    k = int(np.argmin(means))
    return means[k], candidates[k] + 1


def train(
    dataset: Sequence[LightField],
    cfg: TrainConfig,
    verbose: bool = False,
) -> Tuple[PatternLogits, ReconNet, TrainHistory]:
    _check_dataset(dataset)
    train_set, val_set = split_dataset(dataset, cfg.val_fraction)
    rng = np.random.default_rng(cfg.seed)

    frozen = frozen_router(cfg)
    logits = init_logits(cfg.n_patterns, frozen, rng)
    trainable = logits.trainable_indices
    net = ReconNet.build(cfg.n_patterns, cfg.depth, cfg.width, seed=cfg.seed)
    pipeline = create_pipeline(cfg, net)
    optimizer = Adam(lr=cfg.lr)

    logger.info(
        "training mode=%s N=%d on %d samples (%d held out), event model %s",
        cfg.mode, cfg.n_patterns, len(train_set), len(val_set), pipeline.event_model,
    )

    history = TrainHistory()
    s = cfg.s_init
    trainable_logits = logits.values[trainable].copy()

    for epoch in tqdm(range(cfg.epochs), desc="epochs", disable=not verbose):
        order = rng.permutation(len(train_set))
        loss_sum, events_sum, seen = 0.0, 0.0, 0

        for batch_index, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = _stack([train_set[i] for i in order[start:start + cfg.batch_size]])
            grids = _pattern_grids(logits, s)

            net.zero_grad()
            loss, _, events = pipeline.run(batch, grids, context=(epoch, batch_index))
            grad_grids = pipeline.backward()

            grad_logits = grad_grids * s * grids * (1.0 - grids)
            params: Dict[str, np.ndarray] = {"logits": trainable_logits}
            grads: Dict[str, np.ndarray] = {"logits": grad_logits[trainable]}
            for name, tensor in net.parameters().items():
                params[name] = tensor.data
                grads[name] = tensor.grad
            optimizer.step(params, grads)
            logits.values[trainable] = trainable_logits

            n = batch.shape[0]
            loss_sum += loss * n
            events_sum += float(np.abs(events).sum(axis=1).mean()) * n
            seen += n

        val_loss = _validation_loss(pipeline, val_set, logits, s, cfg.batch_size, epoch) if val_set else None
        grids = _pattern_grids(logits, s)
        min_trans, darkest = _emergence(grids, frozen)
        record = EpochRecord(
            epoch=epoch + 1,
            loss=loss_sum / seen,
            val_loss=val_loss,
            s=s,
            events_per_pixel=events_sum / seen,
            min_transmittance=min_trans,
            darkest_pattern=darkest,
        )
        history.append(record)
        logger.info(
            "epoch %d: loss %.6f val %s s %.4g events/pixel %.3f darkest pattern %d (%.3f)",
            record.epoch, record.loss, "-" if val_loss is None else f"{val_loss:.6f}",
            s, record.events_per_pixel, darkest, min_trans,
        )
        if not math.isfinite(record.loss):
            raise RuntimeError(f"loss diverged at epoch {record.epoch}")
        s *= cfg.s_growth

    return logits, net, history


def _validation_loss(pipeline: AcqRecPipeline, val_set: Sequence[LightField], logits: PatternLogits, s: float,
                     batch_size: int, epoch: int) -> float:
    grids = _pattern_grids(logits, s)
    total = 0.0
    for start in range(0, len(val_set), batch_size):
        batch = _stack(val_set[start:start + batch_size])
        loss, _, _ = pipeline.run(batch, grids, context=(epoch, VALIDATION_TAG + start))
        total += loss * batch.shape[0]
    return total / len(val_set)


def reconstruct(
    lf: LightField,
    patterns: Sequence[AperturePattern],
    net: ReconNet,
    sensor: SensorConfig,
    event_model: EventModel = "ra",
    ref_init: str = "black",
) -> Tuple[LightField, List[EventImage]]:
    """Simulate the event images of one field and map them back to 64 views."""
    if net.in_channels != len(patterns) - 1:
        raise ValueError(f"network expects {net.in_channels + 1} patterns, got {len(patterns)}")
    images = simulate_sequence(lf, patterns, sensor, mode=event_model, ref_init=ref_init)
    stacked = np.stack([img.values for img in images]).astype(np.float64)
    views = net.forward(stacked)
    return LightField(values=lightfields_from_views(views[None])[0]), images


def constant_predictor_mse(train_set: Sequence[LightField], held_out: Sequence[LightField]) -> float:
    """MSE on held_out of the single constant (training mean) that minimizes training MSE."""
    if not train_set or not held_out:
        raise ValueError("both sample lists must be non-empty")
    mean = float(np.mean([lf.values.mean() for lf in train_set]))
    return float(np.mean([np.mean((lf.values - mean) ** 2) for lf in held_out]))


def evaluate(
    dataset: Sequence[LightField],
    patterns: Sequence[AperturePattern],
    net: ReconNet,
    sensor: SensorConfig,
    event_model: EventModel = "ra",
    ref_init: str = "black",
    baseline_set: Optional[Sequence[LightField]] = None,
) -> Tuple[EvalReport, List[LightField]]:
    """Full-field MSE/PSNR/SSIM and event statistics, averaged over samples."""
    _check_dataset(dataset)
    outputs: List[LightField] = []
    all_images: List[EventImage] = []
    mses, psnrs, ssims = [], [], []

    for lf in dataset:
        est, images = reconstruct(lf, patterns, net, sensor, event_model, ref_init)
        outputs.append(est)
        all_images.extend(images)
        mses.append(float(np.mean((est.values - lf.values) ** 2)))
        psnrs.append(psnr(lf, est))
        ssims.append(lightfield_ssim(lf, est))

    # per-transition means across samples
    n_trans = len(patterns) - 1
    per_sample = [event_stats(all_images[i:i + n_trans]) for i in range(0, len(all_images), n_trans)]
    per_transition = np.mean([st.per_transition for st in per_sample], axis=0)
    stats = EventStats(
        per_transition=per_transition.tolist(),
        total=float(per_transition.sum()),
        pixels=per_sample[0].pixels,
    )

    mse = float(np.mean(mses))
    report = EvalReport(
        samples=len(dataset),
        mse=mse,
        psnr=math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse),
        ssim=float(np.mean(ssims)),
        events=stats,
        event_model=event_model,
        per_sample_psnr=psnrs,
        constant_mse=constant_predictor_mse(baseline_set, dataset) if baseline_set else None,
    )
    logger.info("evaluated %d samples: psnr %.3f dB, ssim %.4f, %.3f events/pixel",
                report.samples, report.psnr, report.ssim, stats.total)
    return report, outputs
