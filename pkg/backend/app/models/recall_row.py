from pydantic import BaseModel


class RecallRowModel(BaseModel):
    user_id: int
    recall: float


class KSweepRowModel(BaseModel):
    k: int
    seed: int
    recall: float
