from pydantic import BaseModel
from typing import List, Optional


class AuditRecordModel(BaseModel):
    batch: int
    strategy: str
    users: List[int]
    items: List[int]
    pos_user_slot: List[int]
    pos_item_slot: List[int]
    neg_user_slot: Optional[List[int]] = None
    neg_item_slot: Optional[List[int]] = None
    neg_weight: Optional[List[float]] = None
    item_weights: Optional[List[float]] = None
    n_f: int
    n_g: int
    n_i_vec: int
    n_i_mat: int
    negatives: int
