from typing import Literal, Optional

from pydantic import model_validator

from .base import Spec

Strategy = Literal["iid", "negative", "stratified", "neg-sharing", "stratified-ns"]
STRATEGIES = ("iid", "negative", "stratified", "neg-sharing", "stratified-ns")
STRATIFIED = ("stratified", "stratified-ns")
DRAWS_NEGATIVES = ("iid", "negative", "stratified")


class SamplerConfig(Spec):
    strategy: Strategy = "negative"
    b: int = 512
    k: int = 10
    s: int = 4
    seed: Optional[int] = None
    # shuffle: epoch plan, every link once per epoch; iid: independent draws
    positives: Literal["shuffle", "iid"] = "shuffle"
    exclude_known_positives: bool = False

    @model_validator(mode="after")
    def _check_counts(self):
        if self.b <= 0:
            raise ValueError("b must be positive")
        if self.strategy in DRAWS_NEGATIVES and self.k < 1:
            raise ValueError(f"k must be >= 1 for strategy '{self.strategy}'")
        if self.strategy in STRATIFIED:
            if self.s < 1:
                raise ValueError("s must be >= 1")
            if self.b % self.s:
                raise ValueError(f"s={self.s} must divide b={self.b}")
        return self

    @property
    def strata_per_batch(self) -> int:
        return self.b // self.s
