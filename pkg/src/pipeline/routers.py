from typing import List

from src.models.schemas import TrainConfig


def event_model_router(cfg: TrainConfig) -> str:
    if cfg.reference_aware:
        return "ra"
    return "baseline"


def reference_router(cfg: TrainConfig) -> str:
    # RA without a black first pattern starts from the first coded image
    if cfg.reference_aware and not cfg.black_first:
        return "first"
    return "black"


def frozen_router(cfg: TrainConfig) -> List[bool]:
    frozen = [False] * cfg.n_patterns
    if cfg.black_first:
        frozen[0] = True
    return frozen
