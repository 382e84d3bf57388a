from typing import Dict, Optional

import numpy as np

from src.nn import functional as F
from src.nn.tensor import Tensor


class Layer:
    """Forward caches what backward needs; parameters() exposes trainable tensors."""

    kind = "layer"

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parameters(self) -> Dict[str, Tensor]:
        return {}


class Conv2d(Layer):
    kind = "conv2d"

    def __init__(self, in_channels: int, out_channels: int, rng: Optional[np.random.Generator] = None):
        if in_channels < 1 or out_channels < 1:
            raise ValueError("channel counts must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels

        # He-uniform over the fan-in, zero bias
        rng = rng or np.random.default_rng(0)
        bound = np.sqrt(6.0 / (in_channels * F.KERNEL * F.KERNEL))
        self.weight = Tensor(rng.uniform(-bound, bound, size=(out_channels, in_channels, F.KERNEL, F.KERNEL)))
        self.bias = Tensor(np.zeros(out_channels))
        self._input: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._input = x
        return F.conv2d_forward(x, self.weight.data, self.bias.data)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._input is None:
            raise RuntimeError("backward called before forward")
        grad_x, grad_w, grad_b = F.conv2d_backward(grad_out, self._input, self.weight.data)
        self.weight.accumulate(grad_w)
        self.bias.accumulate(grad_b)
        return grad_x

    def parameters(self) -> Dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        self._input: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._input = x
        return F.relu(x)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._input is None:
            raise RuntimeError("backward called before forward")
        return F.relu_backward(grad_out, self._input)


class SigmoidOutput(Layer):
    kind = "sigmoid_output"

    def __init__(self):
        self._output: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._output = F.sigmoid(x)
        return self._output

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._output is None:
            raise RuntimeError("backward called before forward")
        return F.sigmoid_backward(grad_out, self._output)
