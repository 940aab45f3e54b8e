from pydantic import BaseModel
from typing import Optional

from .ledger_snapshot import LedgerSnapshotModel


class EpochRecordModel(BaseModel):
    epoch: int
    batches: int
    train_loss: float
    full_loss: Optional[float] = None
    recall: Optional[float] = None
    max_grad_norm: float
    degenerate_batches: int = 0
    ledger: LedgerSnapshotModel
