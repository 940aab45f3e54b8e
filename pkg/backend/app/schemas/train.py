from typing import Literal, Optional

from pydantic import Field, model_validator

from .base import Spec
from .eval import EvalSpec
from .loss import LossSpec
from .model import ModelSpec
from .noise import NoiseSpec
from .optimizer import OptimizerSpec
from .sampler import SamplerConfig


class TrainOptions(Spec):
    epochs: int = Field(default=30, ge=1)
    eval_every: int = Field(default=1, ge=0)  # 0 disables recall evaluation
    reference_loss: Literal["batch", "full"] = "batch"
    weight_decay: float = Field(default=0.0, ge=0.0)  # L2 on user rows only
    g_cost_multiplier: int = Field(default=1, ge=1)
    early_stopping: bool = False
    patience: int = Field(default=3, ge=1)


class TrainConfig(Spec):
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    loss: LossSpec = Field(default_factory=LossSpec)
    optimizer: OptimizerSpec = Field(default_factory=OptimizerSpec)
    model: ModelSpec = Field(default_factory=ModelSpec)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    eval: EvalSpec = Field(default_factory=EvalSpec)
    train: TrainOptions = Field(default_factory=TrainOptions)
    seed: int = 0

    @model_validator(mode="after")
    def _propagate_seed(self):
        if self.sampler.seed is None:
            self.sampler.seed = self.seed
        return self

    @property
    def lr(self) -> float:
        if self.optimizer.lr is not None:
            return self.optimizer.lr
        return self.loss.default_lr

    def with_overrides(self, **sections) -> "TrainConfig":
        """Copy with whole sections or section fields replaced.

        ``cfg.with_overrides(sampler={"strategy": "iid"})`` keeps every other
        sampler field.
        """
        data = self.model_dump()
        for name, value in sections.items():
            if isinstance(value, dict) and isinstance(data.get(name), dict):
                data[name].update(value)
            else:
                data[name] = value
        return type(self)(**data)


class DataSpec(Spec):
    links: Optional[str] = None
    features: Optional[str] = None
    num_users: Optional[int] = Field(default=None, ge=1)
    num_items: Optional[int] = Field(default=None, ge=1)


class SynthSpec(Spec):
    num_users: int = Field(default=200, ge=1)
    num_items: int = Field(default=300, ge=1)
    target_links: int = Field(default=6000, ge=0)
    degree_exponent: float = Field(default=1.0, ge=0.0)
    rank: int = Field(default=8, ge=1)  # planted preference topics
    vocab: int = Field(default=500, ge=1)
    mean_bag: float = Field(default=20.0, gt=0.0)
    seed: int = 0
