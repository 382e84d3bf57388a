from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.config.settings import VIEW_GRID


class PatternLogits(BaseModel):
    """Trainable pre-sigmoid codes, one 8x8 grid per pattern."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray
    frozen_black: List[bool]

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v):
        arr = np.array(v, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[1:] != (VIEW_GRID, VIEW_GRID):
            raise ValueError(f"logits must have shape (N, {VIEW_GRID}, {VIEW_GRID}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("logits contain non-finite values")
        return arr

    @model_validator(mode="after")
    def _check_flags(self):
        if len(self.frozen_black) != self.values.shape[0]:
            raise ValueError("one frozen_black flag per pattern required")
        return self

    @property
    def n_patterns(self) -> int:
        return self.values.shape[0]

    @property
    def trainable_indices(self) -> List[int]:
        return [i for i, frozen in enumerate(self.frozen_black) if not frozen]


class EpochRecord(BaseModel):
    epoch: int
    loss: float
    val_loss: Optional[float] = None
    s: float
    events_per_pixel: float
    min_transmittance: float
    darkest_pattern: int


class TrainHistory(BaseModel):
    records: List[EpochRecord] = []

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    @property
    def losses(self) -> List[float]:
        return [r.loss for r in self.records]

    def __len__(self) -> int:
        return len(self.records)
