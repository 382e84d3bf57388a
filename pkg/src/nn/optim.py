# bias-corrected Adam over named parameter arrays

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from src.config.settings import TRAIN_LR, ADAM_BETA1, ADAM_BETA2, ADAM_EPS


@dataclass
class AdamState:
    lr: float = TRAIN_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps_adam: float = ADAM_EPS
    # first and second moment estimates, keyed like the parameters
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState) -> None:
    """In-place update of every array in params; state moments are created on first sight."""
    for k in params:
        if k not in grads:
            raise ValueError(f"missing gradient for parameter {k!r}")
        if grads[k].shape != params[k].shape:
            raise ValueError(f"shape mismatch for {k!r}: {grads[k].shape} vs {params[k].shape}")

    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    step_size = state.lr / bc1

    for k in params:
        g = grads[k]
        if k not in state.m:
            state.m[k] = np.zeros_like(params[k])
            state.v[k] = np.zeros_like(params[k])

        state.m[k] *= state.beta1
        state.m[k] += (1.0 - state.beta1) * g

        state.v[k] *= state.beta2
        state.v[k] += (1.0 - state.beta2) * (g * g)

        denom = np.sqrt(state.v[k] * (1.0 / bc2)) + state.eps_adam
        params[k] -= step_size * state.m[k] / denom


class Adam:
    def __init__(self, lr: float = TRAIN_LR, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
                 eps_adam: float = ADAM_EPS):
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps_adam=eps_adam)

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        adam_step(params, grads, self.state)
