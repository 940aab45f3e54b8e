"""
recall@M over the held-out item pool.

Only pool items are ranked. Ties go to the lower item id. Users with no
held-out link are left out of the mean.
"""
import csv
from dataclasses import dataclass
from typing import List

import numpy as np

from app.models import RecallRowModel

from .embeddings import EmbeddingModel
from .errors import ConfigError, DataError
from .graph import InteractionGraph

_USER_CHUNK = 1024


@dataclass
class RecallResult:
    users: np.ndarray
    recall: np.ndarray
    M: int

    @property
    def mean(self) -> float:
        return float(self.recall.mean()) if self.recall.size else float("nan")

    def rows(self) -> List[RecallRowModel]:
        return [
            RecallRowModel(user_id=int(u), recall=float(r))
            for u, r in zip(self.users, self.recall)
        ]


def top_m(scores: np.ndarray, M: int) -> np.ndarray:
    """Column indices of the M best scores per row, ties by lower column."""
    M = min(M, scores.shape[1])
    return np.argsort(-scores, axis=1, kind="stable")[:, :M]


def recall_at_m(
    model: EmbeddingModel,
    test_pool,
    test_links: InteractionGraph,
    M: int,
) -> RecallResult:
    if M < 1:
        raise ConfigError("M must be >= 1", key="eval.M")
    pool = np.unique(np.asarray(test_pool, dtype=np.int64))
    if pool.size == 0:
        raise DataError("test item pool is empty")

    users = np.flatnonzero(test_links.user_degree > 0)
    G, _ = model.embed_items(pool)
    held = test_links.user_adj[:, pool].tocsr()

    recalls = np.zeros(users.size, dtype=np.float64)
    for lo in range(0, users.size, _USER_CHUNK):
        chunk = users[lo:lo + _USER_CHUNK]
        S = model.embed_users(chunk).astype(np.float64) @ G.astype(np.float64).T
        top = top_m(S, M)
        truth = held[chunk].toarray().astype(bool)
        hits = np.take_along_axis(truth, top, axis=1).sum(axis=1)
        recalls[lo:lo + chunk.size] = hits / test_links.user_degree[chunk]
    return RecallResult(users=users, recall=recalls, M=M)


def write_recall_csv(path, result: RecallResult):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["user_id", "recall"], lineterminator="\n")
        writer.writeheader()
        for row in result.rows():
            writer.writerow(row.model_dump())
        writer.writerow({"user_id": "mean", "recall": result.mean})
