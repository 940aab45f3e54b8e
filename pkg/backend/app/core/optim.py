from typing import Dict, Tuple

import numpy as np

from app.schemas import OptimizerSpec

from .errors import ConfigError


def adam_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: dict,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[Dict[str, np.ndarray], dict]:
    """Bias-corrected Adam update, in place.

    ``state`` holds ``t`` plus first/second moments keyed like ``params``;
    an empty dict starts from zero moments.
    """
    t = state.get("t", 0) + 1
    m = state.setdefault("m", {})
    v = state.setdefault("v", {})
    for name, p in params.items():
        g = grads[name]
        if name not in m:
            m[name] = np.zeros_like(p)
            v[name] = np.zeros_like(p)
        elif m[name].shape != p.shape:
            raise ConfigError(f"optimizer state for '{name}' has shape {m[name].shape}, "
                              f"parameter has {p.shape}")
        m[name] *= beta1
        m[name] += (1 - beta1) * g
        v[name] *= beta2
        v[name] += (1 - beta2) * (g * g)
        if lr == 0:
            continue
        m_hat = m[name] / (1 - beta1 ** t)
        v_hat = v[name] / (1 - beta2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)
    state["t"] = t
    return params, state


class SGD:
    def __init__(self, params: Dict[str, np.ndarray], lr: float):
        self.params = params
        self.lr = lr

    def step(self, grads: Dict[str, np.ndarray]):
        if self.lr == 0:
            return
        for name, p in self.params.items():
            p -= self.lr * grads[name]


class Adam(SGD):
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(params, lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state: dict = {}

    def step(self, grads: Dict[str, np.ndarray]):
        adam_step(self.params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)


def build_optimizer(params: Dict[str, np.ndarray], spec: OptimizerSpec, lr: float):
    if lr < 0:
        raise ConfigError("learning rate must be non-negative", key="optimizer.lr")
    if spec.kind == "sgd":
        return SGD(params, lr)
    return Adam(params, lr, spec.beta1, spec.beta2, spec.eps)
