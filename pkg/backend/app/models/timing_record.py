from pydantic import BaseModel


class TimingRecordModel(BaseModel):
    epoch: int
    batches: int
    wall_seconds: float  # cumulative, training steps only
    seconds_per_batch: float
    dtype: str
