from pydantic import BaseModel
from typing import Union


class SpeedupRowModel(BaseModel):
    strategy: str
    seconds_per_iteration: float
    per_iteration_speedup: float
    # inf when the strategy never reaches the reference loss
    iterations_to_reference: Union[int, float]
    iteration_speedup: float
    total_speedup: float
    analytic_ng_ratio: float
    reached_reference: bool
    min_loss: float
