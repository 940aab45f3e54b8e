from typing import Literal

from pydantic import Field

from .base import Spec

NoiseKind = Literal["degree-unigram", "uniform", "unigram-power"]


class NoiseSpec(Spec):
    kind: NoiseKind = "degree-unigram"
    alpha: float = Field(default=0.75, ge=0.0)  # exponent for unigram-power
