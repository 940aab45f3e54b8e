from typing import Literal

from pydantic import Field

from .base import Spec

ItemFnKind = Literal["id", "linear-bag", "mlp-bag"]


class ModelSpec(Spec):
    dim: int = Field(default=16, ge=1)
    item_fn: ItemFnKind = "id"
    d_in: int = Field(default=50, ge=1)  # token embedding width for bag functions
    hidden: int = Field(default=64, ge=1)
    init: Literal["uniform", "zeros"] = "uniform"
    init_scale: float = Field(default=0.05, ge=0.0)
    dtype: Literal["float64", "float32"] = "float64"
