from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.config.settings import VIEW_GRID
from src.utils.validators import ArrayValidator


def _frozen(values: Any, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class LightField(BaseModel):
    """4-D light field stored as (y, x, v, u) with values in [0, 1]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v):
        arr = _frozen(v, np.float64)
        if arr.ndim != 4 or arr.shape[2:] != (VIEW_GRID, VIEW_GRID):
            raise ValueError(f"light field must have shape (H, W, {VIEW_GRID}, {VIEW_GRID}), got {arr.shape}")
        ArrayValidator.require_positive_size(arr.shape[1], arr.shape[0])
        ArrayValidator.require_range(arr, 0.0, 1.0, "light field")
        return arr

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def view(self, u: int, v: int) -> np.ndarray:
        return self.values[:, :, v, u]


class AperturePattern(BaseModel):
    """8x8 transmittance code indexed [v, u]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    binary: bool = False

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v):
        arr = _frozen(v, np.float64)
        if arr.shape != (VIEW_GRID, VIEW_GRID):
            raise ValueError(f"aperture pattern must be {VIEW_GRID}x{VIEW_GRID}, got {arr.shape}")
        ArrayValidator.require_range(arr, 0.0, 1.0, "aperture pattern")
        return arr

    @model_validator(mode="after")
    def _check_binary(self):
        if self.binary and not np.all((self.values == 0.0) | (self.values == 1.0)):
            raise ValueError("binary pattern contains values other than 0 and 1")
        return self

    @classmethod
    def black(cls) -> "AperturePattern":
        return cls(values=np.zeros((VIEW_GRID, VIEW_GRID)), binary=True)

    @property
    def is_black(self) -> bool:
        return not np.any(self.values)

    @property
    def transmittance(self) -> float:
        return float(self.values.sum())


class CodedImage(BaseModel):
    """Sensor image under one pattern; `normalized` means divided by the view count."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    normalized: bool = False

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v):
        arr = _frozen(v, np.float64)
        if arr.ndim != 2:
            raise ValueError(f"coded image must be 2-D, got shape {arr.shape}")
        ArrayValidator.require_finite(arr, "coded image")
        if arr.size and arr.min() < 0.0:
            raise ValueError("coded image values must be >= 0")
        return arr

    @model_validator(mode="after")
    def _check_normalized(self):
        if self.normalized and self.values.size and self.values.max() > 1.0:
            raise ValueError("normalized coded image values must be <= 1")
        return self

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]
