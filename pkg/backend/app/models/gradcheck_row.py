from pydantic import BaseModel


class GradcheckRowModel(BaseModel):
    item_fn: str
    loss: str
    strategy: str
    worst_block: str
    max_rel_error: float
    passed: bool
