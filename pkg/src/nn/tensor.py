from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

MAX_AXES = 4


@dataclass
class Tensor:
    """Dense float64 array with an optional gradient buffer and backward hook."""

    data: np.ndarray
    grad: Optional[np.ndarray] = None
    grad_fn: Optional[Callable[[np.ndarray], None]] = field(default=None, repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim > MAX_AXES:
            raise ValueError(f"tensor supports at most {MAX_AXES} axes, got {self.data.ndim}")
        if self.grad is not None:
            self.grad = np.asarray(self.grad, dtype=np.float64)
            if self.grad.shape != self.data.shape:
                raise ValueError("gradient buffer shape does not match tensor shape")

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def accumulate(self, gradient: np.ndarray) -> None:
        if gradient.shape != self.data.shape:
            raise ValueError(f"gradient shape {gradient.shape} does not match {self.data.shape}")
        if self.grad is None:
            self.grad = np.array(gradient, dtype=np.float64, copy=True)
        else:
            self.grad += gradient

    def backward(self, gradient: Optional[np.ndarray] = None) -> None:
        """Accumulate `gradient` here and push it to the inputs through grad_fn."""
        if gradient is None:
            gradient = np.ones_like(self.data)
        gradient = np.asarray(gradient, dtype=np.float64)
        self.accumulate(gradient)
        if self.grad_fn is not None:
            self.grad_fn(gradient)
