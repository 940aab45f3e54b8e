from typing import Literal, Optional

from pydantic import model_validator

from .base import Spec

LossKind = Literal["sg", "mse", "log-pair", "hinge-pair"]
PAIRWISE = ("log-pair", "hinge-pair")


class LossSpec(Spec):
    kind: LossKind = "sg"
    lam: Optional[float] = None  # negative-term weight, pointwise only
    gamma: Optional[float] = None  # pairwise scale (log) or margin (hinge)
    r_pos: float = 1.0
    r_neg: float = 0.0

    @model_validator(mode="after")
    def _fill_defaults(self):
        if self.lam is None:
            self.lam = 8.0 if self.kind == "mse" else 128.0
        if self.gamma is None:
            self.gamma = 0.1 if self.kind == "hinge-pair" else 10.0
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        return self

    @property
    def pairwise(self) -> bool:
        return self.kind in PAIRWISE

    @property
    def default_lr(self) -> float:
        return 0.001 if self.kind == "mse" else 0.01
