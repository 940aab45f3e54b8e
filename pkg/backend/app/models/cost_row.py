from pydantic import BaseModel


class CostRowModel(BaseModel):
    strategy: str
    n_f: int
    n_g: int
    n_i: int
    interaction_mode: str  # "vec" or "mat"
    negatives: int
    cost: float
    ng_speedup: float  # item evaluations of IID over this strategy
