from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config.settings import (
    SENSOR_TAU,
    SENSOR_EPSILON,
    SENSOR_SIGMA_W,
    SENSOR_SIGMA_Z,
    TRAIN_N,
    TRAIN_EPOCHS,
    TRAIN_BATCH_SIZE,
    TRAIN_S_INIT,
    TRAIN_S_GROWTH,
    TRAIN_LR,
    RECNET_DEPTH,
    RECNET_WIDTH,
    RECNET_MAX_DEPTH,
    VAL_FRACTION,
)
from src.models.lightfield import CodedImage
from src.utils.mode_resolver import get_mode_resolver

TrainMode = Literal["baseline", "baseline+bf", "baseline+ra", "baseline+bf+ra"]
EventModel = Literal["baseline", "ra"]


class SensorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau: float = Field(default=SENSOR_TAU, gt=0)
    epsilon: float = Field(default=SENSOR_EPSILON, gt=0)
    sigma_w: float = Field(default=SENSOR_SIGMA_W, ge=0)
    sigma_z: float = Field(default=SENSOR_SIGMA_Z, ge=0)
    seed: int = Field(default=0, ge=0)
    noiseless: bool = False

    def as_noiseless(self) -> "SensorConfig":
        return self.model_copy(update={"noiseless": True})


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_patterns: int = Field(default=TRAIN_N, ge=2)
    epochs: int = Field(default=TRAIN_EPOCHS, ge=0)
    batch_size: int = Field(default=TRAIN_BATCH_SIZE, ge=1)
    s_init: float = Field(default=TRAIN_S_INIT, gt=0)
    s_growth: float = Field(default=TRAIN_S_GROWTH, ge=1)
    mode: TrainMode = "baseline+bf+ra"
    sensor: SensorConfig = Field(default_factory=SensorConfig)
    seed: int = Field(default=0, ge=0)
    lr: float = Field(default=TRAIN_LR, gt=0)
    depth: int = Field(default=RECNET_DEPTH, ge=2, le=RECNET_MAX_DEPTH)
    width: int = Field(default=RECNET_WIDTH, ge=1)
    val_fraction: float = Field(default=VAL_FRACTION, ge=0, lt=1)

    @field_validator("mode", mode="before")
    @classmethod
    def _resolve_mode(cls, v):
        return get_mode_resolver().require(str(v))

    @property
    def black_first(self) -> bool:
        return "bf" in self.mode.split("+")

    @property
    def reference_aware(self) -> bool:
        return "ra" in self.mode.split("+")


class RecoveryResult(BaseModel):
    """Intensities recovered from event images around a black pattern."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    images: List[CodedImage]
    black_index: int
    clamped_pixels: int = 0
    clamped_per_image: List[int] = []
    saturated_pixels: int = 0


class PermutationReport(BaseModel):
    permutation: List[int]
    max_discrepancy: int
    fraction_within_one: float
    per_transition_max: List[int]


class EventStats(BaseModel):
    per_transition: List[float]
    total: float
    pixels: int


class DataRateReport(BaseModel):
    events_per_pixel: float
    bits_per_event: int
    bits_per_sensor_pixel: float
    bits_per_lightfield_pixel: float
    events_per_lightfield_pixel: float


class EvalReport(BaseModel):
    samples: int
    mse: float
    psnr: float
    ssim: float
    events: EventStats
    event_model: EventModel
    per_sample_psnr: List[float] = []
    constant_mse: Optional[float] = None

    @model_validator(mode="after")
    def _check_counts(self):
        if self.per_sample_psnr and len(self.per_sample_psnr) != self.samples:
            raise ValueError("per-sample PSNR list does not match sample count")
        return self
