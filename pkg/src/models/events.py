from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

# One on-disk / in-memory event record
EVENT_DTYPE = np.dtype([("x", "<u2"), ("y", "<u2"), ("t", "<u4"), ("p", "i1")])


class EventImage(BaseModel):
    """Signed per-pixel event counts for the transition (n-1, n), 1-based."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    transition: Tuple[int, int] = (1, 2)

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v):
        arr = np.asarray(v)
        if arr.ndim != 2:
            raise ValueError(f"event image must be 2-D, got shape {arr.shape}")
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or not np.all(arr == np.round(arr)):
                raise ValueError("event image values must be integers")
        elif arr.dtype.kind not in "iu":
            raise ValueError(f"event image dtype {arr.dtype} is not integral")
        out = np.array(arr, dtype=np.int64, copy=True)
        out.setflags(write=False)
        return out

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zeros(cls, height: int, width: int, transition: Tuple[int, int] = (1, 2)) -> "EventImage":
        return cls(values=np.zeros((height, width), dtype=np.int64), transition=transition)


class EventStream(BaseModel):
    """Timestamped raw events sorted by (t, y, x)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    width: int
    height: int
    records: np.ndarray

    @field_validator("records", mode="before")
    @classmethod
    def _check_records(cls, v):
        arr = np.array(v, dtype=EVENT_DTYPE, copy=True).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check_layout(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("stream sensor size must be >= 1")
        rec = self.records
        if rec.size == 0:
            return self
        if rec["x"].max() >= self.width or rec["y"].max() >= self.height:
            raise ValueError("event coordinates outside the sensor")
        if not np.all(np.isin(rec["p"], (-1, 1))):
            raise ValueError("event polarity must be +1 or -1")
        order = np.lexsort((rec["x"], rec["y"], rec["t"]))
        if not np.array_equal(order, np.arange(rec.size)):
            raise ValueError("event records must be sorted by t, then y, then x")
        return self

    def __len__(self) -> int:
        return int(self.records.size)


class RefState(BaseModel):
    """Per-pixel log reference ln(I_ref + eps) held as base + tau * count."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    base: np.ndarray
    count: np.ndarray
    tau: float

    @field_validator("base", mode="before")
    @classmethod
    def _check_base(cls, v):
        arr = np.array(v, dtype=np.float64, copy=True)
        if arr.ndim != 2 or not np.all(np.isfinite(arr)):
            raise ValueError("reference base must be a finite 2-D array")
        arr.setflags(write=False)
        return arr

    @field_validator("count", mode="before")
    @classmethod
    def _check_count(cls, v):
        arr = np.array(v, dtype=np.int64, copy=True)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.base.shape != self.count.shape:
            raise ValueError("reference base and count shapes differ")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        return self

    @property
    def log_ref(self) -> np.ndarray:
        return self.base + self.tau * self.count

    @property
    def shape(self) -> Tuple[int, int]:
        return self.base.shape
