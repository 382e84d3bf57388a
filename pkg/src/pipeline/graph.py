from typing import Sequence, Tuple

import numpy as np

from src.models.schemas import TrainConfig
from src.nn.recnet import ReconNet
from src.pipeline.nodes import AcquisitionNode, LossNode, ReconstructionNode
from src.pipeline.routers import event_model_router, reference_router


class AcqRecPipeline:
    """acquisition -> reconstruction -> loss, and the reverse pass through all three"""

    def __init__(self, cfg: TrainConfig, net: ReconNet):
        self.acquisition = AcquisitionNode(cfg.sensor, event_model_router(cfg), reference_router(cfg))
        self.reconstruction = ReconstructionNode(net)
        self.loss = LossNode()

    @property
    def event_model(self) -> str:
        return self.acquisition.event_model

    def run(self, lf: np.ndarray, patterns: np.ndarray, context: Sequence[int] = ()) -> Tuple[float, np.ndarray, np.ndarray]:
        events = self.acquisition.forward(lf, patterns, context)
        pred = self.reconstruction.forward(events)
        loss = self.loss.forward(pred, lf)
        return loss, pred, events

    def backward(self) -> np.ndarray:
        """Accumulates network gradients and returns dLoss/dpatterns."""
        grad_events = self.reconstruction.backward(self.loss.backward())
        return self.acquisition.backward(grad_events)


def create_pipeline(cfg: TrainConfig, net: ReconNet) -> AcqRecPipeline:
    return AcqRecPipeline(cfg, net)
