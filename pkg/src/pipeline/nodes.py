"""
Batched, differentiable stages of the acquisition-reconstruction pipeline

Each node caches what its backward pass needs. Shapes:
    light fields  (B, H, W, 8, 8)   [y, x, v, u]
    patterns      (N, 8, 8)         [v, u]
    events        (B, N-1, H, W)
    views         (B, 64, H, W)     channel = v * 8 + u
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from src.config.settings import N_VIEWS
from src.models.schemas import SensorConfig
from src.nn import functional as F
from src.nn.recnet import ReconNet
from src.services.event_service import STEQuantize, log_intensity, sensor_noise


def views_from_lightfields(lf: np.ndarray) -> np.ndarray:
    batch, height, width = lf.shape[:3]
    return np.ascontiguousarray(lf.reshape(batch, height, width, N_VIEWS).transpose(0, 3, 1, 2))


def lightfields_from_views(views: np.ndarray) -> np.ndarray:
    batch, _, height, width = views.shape
    side = int(round(np.sqrt(N_VIEWS)))
    return np.ascontiguousarray(views.transpose(0, 2, 3, 1).reshape(batch, height, width, side, side))


class AcquisitionNode:
    """Coded images -> normalized log intensities -> event images (baseline or RA)."""

    def __init__(self, sensor: SensorConfig, event_model: str = "ra", ref_init: str = "black"):
        if event_model not in ("baseline", "ra"):
            raise ValueError(f"unknown event model {event_model!r}")
        if ref_init not in ("black", "first"):
            raise ValueError(f"unknown reference initialization {ref_init!r}")
        self.sensor = sensor
        self.event_model = event_model
        self.ref_init = ref_init
        self.quantizer = STEQuantize()
        self._cache: Optional[dict] = None

    def _noise(self, shape: Tuple[int, int, int, int], context: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        batch, transitions, height, width = shape
        w = np.zeros(shape)
        z = np.zeros(shape)
        if self.sensor.noiseless:
            return w, z
        for b in range(batch):
            for k in range(transitions):
                w[b, k], z[b, k] = sensor_noise(self.sensor, (height, width), k + 1, *context, b)
        return w, z

    def forward(self, lf: np.ndarray, patterns: np.ndarray, context: Sequence[int] = ()) -> np.ndarray:
        n_patterns = patterns.shape[0]
        if n_patterns < 2:
            raise ValueError("at least 2 patterns are required")
        batch, height, width = lf.shape[:3]
        tau, eps = self.sensor.tau, self.sensor.epsilon

        flat = lf.reshape(batch, height, width, N_VIEWS)
        coded = np.tensordot(flat, patterns.reshape(n_patterns, N_VIEWS), axes=([3], [1]))
        normalized = np.ascontiguousarray(coded.transpose(0, 3, 1, 2)) / N_VIEWS
        logs = log_intensity(normalized, eps)

        w, z = self._noise((batch, n_patterns - 1, height, width), context)
        scale = tau + z
        events = np.empty((batch, n_patterns - 1, height, width))

        if self.event_model == "baseline":
            pre = (logs[:, 1:] - logs[:, :-1] + w) / scale
            events[...] = self.quantizer.forward(pre)
        else:
            base = logs[:, 0] if self.ref_init == "first" else np.full((batch, height, width), np.log(eps))
            count = np.zeros((batch, height, width))
            for k in range(n_patterns - 1):
                pre = (logs[:, k + 1] - (base + tau * count) + w[:, k]) / scale[:, k]
                events[:, k] = self.quantizer.forward(pre)
                count += events[:, k]

        self._cache = {"lf": flat, "normalized": normalized, "scale": scale}
        return events

    def backward(self, grad_events: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the pattern grid (N, 8, 8); quantizers pass gradients straight through."""
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        flat, normalized, scale = self._cache["lf"], self._cache["normalized"], self._cache["scale"]
        tau, eps = self.sensor.tau, self.sensor.epsilon
        n_patterns = normalized.shape[1]

        passed = self.quantizer.backward(grad_events)
        grad_logs = np.zeros_like(normalized)
        if self.event_model == "baseline":
            grad_pre = passed / scale
            grad_logs[:, 1:] += grad_pre
            grad_logs[:, :-1] -= grad_pre
        else:
            # reference after transition k is ref_{k-1} + tau * E_k
            grad_ref = np.zeros_like(normalized[:, 0])
            for k in reversed(range(n_patterns - 1)):
                g = (passed[:, k] + tau * grad_ref) / scale[:, k]
                grad_logs[:, k + 1] += g
                grad_ref = grad_ref - g
            if self.ref_init == "first":
                grad_logs[:, 0] += grad_ref

        grad_coded = grad_logs / (normalized + eps) / N_VIEWS
        grad_patterns = np.tensordot(grad_coded, flat, axes=([0, 2, 3], [0, 1, 2]))
        side = int(round(np.sqrt(N_VIEWS)))
        return grad_patterns.reshape(n_patterns, side, side)


class ReconstructionNode:
    def __init__(self, net: ReconNet):
        self.net = net

    def forward(self, events: np.ndarray) -> np.ndarray:
        return self.net.forward(events)

    def backward(self, grad_views: np.ndarray) -> np.ndarray:
        return self.net.backward(grad_views)


class LossNode:
    def __init__(self):
        self._grad: Optional[np.ndarray] = None

    def forward(self, pred_views: np.ndarray, lf: np.ndarray) -> float:
        loss, self._grad = F.mse_loss(pred_views, views_from_lightfields(lf))
        return loss

    def backward(self) -> np.ndarray:
        if self._grad is None:
            raise RuntimeError("backward called before forward")
        return self._grad
