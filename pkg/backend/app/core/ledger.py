"""
Evaluation counts per batch: user-function (n_f), item-function (n_g) and
interaction evaluations, split into per-link dot products (n_i_vec) and
dense matrix cells (n_i_mat).
"""
from dataclasses import dataclass, field
from typing import List, Optional

from app.models import LedgerSnapshotModel

from .errors import ShapeMismatchError


@dataclass
class BatchCost:
    n_f: int
    n_g: int
    n_i_vec: int
    n_i_mat: int
    negatives: int


@dataclass
class CostLedger:
    n_f: int = 0
    n_g: int = 0
    n_i_vec: int = 0
    n_i_mat: int = 0
    batches: int = 0
    epochs: int = 0
    wall_seconds: float = 0.0
    keep_history: bool = False
    history: List[BatchCost] = field(default_factory=list)

    def record(self, batch, acts=None) -> BatchCost:
        """Add one batch; with activations, check they match its slot counts."""
        cost = BatchCost(batch.n_f, batch.n_g, batch.n_i_vec, batch.n_i_mat, batch.num_negatives)
        if acts is not None:
            evaluated = (acts.F.shape[0], acts.G.shape[0])
            if evaluated != (cost.n_f, cost.n_g):
                raise ShapeMismatchError(
                    f"forward evaluated {evaluated} user/item slots, batch has "
                    f"{(cost.n_f, cost.n_g)}"
                )
        self.n_f += cost.n_f
        self.n_g += cost.n_g
        self.n_i_vec += cost.n_i_vec
        self.n_i_mat += cost.n_i_mat
        self.batches += 1
        if self.keep_history:
            self.history.append(cost)
        return cost

    def add_time(self, seconds: float):
        self.wall_seconds += seconds

    def end_epoch(self):
        self.epochs += 1

    def mean_n_g(self) -> Optional[float]:
        return self.n_g / self.batches if self.batches else None

    def snapshot(self) -> LedgerSnapshotModel:
        return LedgerSnapshotModel(
            n_f=self.n_f,
            n_g=self.n_g,
            n_i_vec=self.n_i_vec,
            n_i_mat=self.n_i_mat,
            batches=self.batches,
            epochs=self.epochs,
        )
