from pydantic import Field

from .base import Spec


class EvalSpec(Spec):
    M: int = Field(default=50, ge=1)
