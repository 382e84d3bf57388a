"""Array-level kernels shared by the layers: same-padded 3x3 conv, activations, MSE."""

from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

KERNEL = 3
PAD = KERNEL // 2


def _windows(x: np.ndarray) -> np.ndarray:
    """(B, C, H, W) -> (B, C, H, W, 3, 3) views over the zero-padded input"""
    padded = np.pad(x, ((0, 0), (0, 0), (PAD, PAD), (PAD, PAD)))
    return sliding_window_view(padded, (KERNEL, KERNEL), axis=(2, 3))


def _check_conv_args(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> None:
    if x.ndim != 4:
        raise ValueError(f"conv input must be (B, C, H, W), got {x.shape}")
    if weights.ndim != 4 or weights.shape[2:] != (KERNEL, KERNEL):
        raise ValueError(f"conv weights must be (C_out, C_in, 3, 3), got {weights.shape}")
    if weights.shape[1] != x.shape[1]:
        raise ValueError(f"channel mismatch: input has {x.shape[1]}, weights expect {weights.shape[1]}")
    if bias.shape != (weights.shape[0],):
        raise ValueError(f"bias must have shape ({weights.shape[0]},), got {bias.shape}")


def conv2d_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-padded cross-correlation: out[b,o,y,x] = bias[o] + sum_{c,i,j} w[o,c,i,j] xp[b,c,y+i,x+j]"""
    _check_conv_args(x, weights, bias)
    out = np.tensordot(_windows(x), weights, axes=([1, 4, 5], [1, 2, 3]))
    out += bias
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv2d_backward(
    grad_out: np.ndarray, x: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_x, grad_weights, grad_bias)."""
    grad_w = np.tensordot(grad_out, _windows(x), axes=([0, 2, 3], [0, 2, 3]))
    grad_b = grad_out.sum(axis=(0, 2, 3))
    # transpose-conv of a same-padded 3x3 kernel is a same-padded conv with the flipped kernel
    flipped = weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    grad_x = conv2d_forward(grad_out, flipped, np.zeros(flipped.shape[0]))
    return grad_x, grad_w, grad_b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split form keeps exp() from overflowing for large |x|
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(grad_out: np.ndarray, y: np.ndarray) -> np.ndarray:
    return grad_out * y * (1.0 - y)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error and its gradient 2 (pred - target) / numel."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
