"""Reconstruction network: stacked event images (N-1, H, W) -> 64 views (64, H, W)."""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config.settings import N_VIEWS, RECNET_DEPTH, RECNET_WIDTH, RECNET_MAX_DEPTH
from src.nn.layers import Conv2d, Layer, ReLU, SigmoidOutput
from src.nn.tensor import Tensor

logger = logging.getLogger(__name__)


def channel_widths(in_channels: int, depth: int = RECNET_DEPTH, width: int = RECNET_WIDTH) -> List[int]:
    """[N-1, width x (depth-2), 64, 64]; depth counts conv layers."""
    if not 2 <= depth <= RECNET_MAX_DEPTH:
        raise ValueError(f"depth must be in [2, {RECNET_MAX_DEPTH}], got {depth}")
    return [in_channels] + [width] * (depth - 2) + [N_VIEWS, N_VIEWS]


class ReconNet:
    def __init__(self, widths: Sequence[int], seed: int = 0, zero_last: bool = False):
        widths = list(widths)
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if widths[-1] != N_VIEWS:
            raise ValueError(f"last layer must output {N_VIEWS} channels")

        rng = np.random.default_rng(seed)
        self.layers: List[Layer] = []
        n_conv = len(widths) - 1
        for i in range(n_conv):
            self.layers.append(Conv2d(widths[i], widths[i + 1], rng))
            self.layers.append(ReLU() if i < n_conv - 1 else SigmoidOutput())

        if zero_last:
            last = self.convs[-1]
            last.weight.data[...] = 0.0
            last.bias.data[...] = 0.0

        self._forwarded = False
        self._squeeze = False

    @classmethod
    def build(cls, n_patterns: int, depth: int = RECNET_DEPTH, width: int = RECNET_WIDTH,
              seed: int = 0, zero_last: bool = False) -> "ReconNet":
        return cls(channel_widths(n_patterns - 1, depth, width), seed=seed, zero_last=zero_last)

    @property
    def convs(self) -> List[Conv2d]:
        return [layer for layer in self.layers if isinstance(layer, Conv2d)]

    @property
    def in_channels(self) -> int:
        return self.convs[0].in_channels

    @property
    def widths(self) -> List[int]:
        convs = self.convs
        return [convs[0].in_channels] + [c.out_channels for c in convs]

    def parameters(self) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = {}
        for i, conv in enumerate(self.convs):
            for name, tensor in conv.parameters().items():
                params[f"conv{i}.{name}"] = tensor
        return params

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def forward(self, x: np.ndarray) -> np.ndarray:
        """(B, N-1, H, W) or (N-1, H, W) -> (B, 64, H, W) or (64, H, W)"""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 3
        if squeeze:
            x = x[None]
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got shape {x.shape}")

        for layer in self.layers:
            x = layer.forward(x)
        self._forwarded = True
        self._squeeze = squeeze
        return x[0] if squeeze else x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        """Accumulates parameter gradients and returns the gradient w.r.t. the input."""
        if not self._forwarded:
            raise RuntimeError("backward called before forward")
        grad = np.asarray(grad_out, dtype=np.float64)
        if self._squeeze:
            grad = grad[None]
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad[0] if self._squeeze else grad


def recnet_forward(net: ReconNet, events: np.ndarray) -> np.ndarray:
    return net.forward(events)


def backward(net: ReconNet, loss_grad: np.ndarray) -> Dict[str, np.ndarray]:
    """Zero, backpropagate, and return parameter gradients plus the input gradient under 'input'."""
    net.zero_grad()
    grad_input = net.backward(loss_grad)
    grads = {name: t.grad for name, t in net.parameters().items()}
    grads["input"] = grad_input
    return grads


def load_weights(net: ReconNet, weights: List[np.ndarray], biases: List[np.ndarray],
                 source: Optional[str] = None) -> None:
    convs = net.convs
    if len(weights) != len(convs) or len(biases) != len(convs):
        raise ValueError(f"checkpoint has {len(weights)} conv layers, network has {len(convs)}")
    for conv, w, b in zip(convs, weights, biases):
        if w.shape != conv.weight.shape or b.shape != conv.bias.shape:
            raise ValueError(f"checkpoint layer shape {w.shape} does not match {conv.weight.shape}")
        conv.weight.data[...] = w
        conv.bias.data[...] = b
    logger.debug("loaded %d conv layers%s", len(convs), f" from {source}" if source else "")
