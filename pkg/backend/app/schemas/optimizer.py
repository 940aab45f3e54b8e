from typing import Literal, Optional

from pydantic import Field

from .base import Spec


class OptimizerSpec(Spec):
    kind: Literal["sgd", "adam"] = "adam"
    lr: Optional[float] = Field(default=None, ge=0.0)  # None: per-loss default
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
