from pydantic import Field

from .base import Spec


class SplitSpec(Spec):
    test_item_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    seed: int = 0
