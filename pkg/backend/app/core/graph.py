"""
Immutable bipartite user-item graph built from implicit feedback.

Links are stored twice as CSR (user -> items, item -> users) so both
directions serve neighbour lookups in O(degree). Optional item feature bags
are a sparse items x vocab count matrix.
"""
from pathlib import Path
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, IdBoundsError, LinkParseError
from .logger import get_logger
from .rng import STREAM_SPLIT, make_rng

logger = get_logger(__name__)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class InteractionGraph:
    def __init__(
        self,
        num_users: int,
        num_items: int,
        users,
        items,
        item_features: Optional[sp.spmatrix] = None,
    ):
        users = np.asarray(users, dtype=np.int64).ravel()
        items = np.asarray(items, dtype=np.int64).ravel()
        if users.shape != items.shape:
            raise DataError("users and items must have the same length")
        if num_users < 0 or num_items < 0:
            raise DataError("dimensions must be non-negative")
        if users.size:
            if users.min() < 0 or items.min() < 0:
                raise IdBoundsError("ids must be non-negative")
            if users.max() >= num_users:
                raise IdBoundsError(f"user id {users.max()} >= num_users={num_users}")
            if items.max() >= num_items:
                raise IdBoundsError(f"item id {items.max()} >= num_items={num_items}")

        adj = sp.coo_matrix(
            (np.ones(users.size, dtype=np.int64), (users, items)),
            shape=(num_users, num_items),
        ).tocsr()
        adj.sum_duplicates()
        adj.sort_indices()
        adj.data[:] = 1  # duplicate lines collapse to one link
        self._user_adj = adj
        self._item_adj = adj.T.tocsr()
        self._item_adj.sort_indices()
        for mat in (self._user_adj, self._item_adj):
            for arr in (mat.indptr, mat.indices, mat.data):
                _frozen(arr)

        self.num_users = int(num_users)
        self.num_items = int(num_items)
        self.user_degree = _frozen(np.diff(self._user_adj.indptr).astype(np.int64))
        self.item_degree = _frozen(np.diff(self._item_adj.indptr).astype(np.int64))

        if item_features is not None:
            feats = sp.csr_matrix(item_features, dtype=np.float64)
            if feats.shape[0] != num_items:
                raise DataError(
                    f"feature matrix has {feats.shape[0]} rows, expected {num_items} items"
                )
            feats.sum_duplicates()
            feats.sort_indices()
            item_features = feats
        self.item_features = item_features

        # (u, v) sorted by user then item
        self._link_users = _frozen(
            np.repeat(np.arange(num_users, dtype=np.int64), self.user_degree)
        )
        self._link_items = _frozen(self._user_adj.indices.astype(np.int64))
        self._link_keys = _frozen(self._link_users * max(num_items, 1) + self._link_items)

    # -- basic views -------------------------------------------------------

    @property
    def num_links(self) -> int:
        return int(self._link_items.size)

    @property
    def vocab_size(self) -> int:
        return 0 if self.item_features is None else int(self.item_features.shape[1])

    @property
    def user_adj(self) -> sp.csr_matrix:
        return self._user_adj

    @property
    def item_adj(self) -> sp.csr_matrix:
        return self._item_adj

    def items_of(self, user: int) -> np.ndarray:
        a = self._user_adj
        return a.indices[a.indptr[user]:a.indptr[user + 1]]

    def users_of(self, item: int) -> np.ndarray:
        a = self._item_adj
        return a.indices[a.indptr[item]:a.indptr[item + 1]]

    def links(self) -> Tuple[np.ndarray, np.ndarray]:
        """All links as parallel (users, items) arrays sorted by (user, item)."""
        return self._link_users, self._link_items

    def has_links(self, users, items) -> np.ndarray:
        """Vectorised membership test for (users[i], items[i]) pairs."""
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        keys = users * max(self.num_items, 1) + items
        if self._link_keys.size == 0:
            return np.zeros(keys.shape, dtype=bool)
        pos = np.searchsorted(self._link_keys, keys)
        pos = np.minimum(pos, self._link_keys.size - 1)
        return self._link_keys[pos] == keys

    def has_feature_bags(self, items=None) -> np.ndarray:
        if self.item_features is None:
            n = self.num_items if items is None else len(items)
            return np.zeros(n, dtype=bool)
        counts = np.diff(self.item_features.indptr)
        if items is not None:
            counts = counts[np.asarray(items, dtype=np.int64)]
        return counts > 0

    def subgraph_items(self, keep_items: np.ndarray) -> "InteractionGraph":
        """Same node universe, only links whose item is flagged in ``keep_items``."""
        users, items = self.links()
        mask = keep_items[items]
        return InteractionGraph(
            self.num_users, self.num_items, users[mask], items[mask], self.item_features
        )

    def stats(self) -> dict:
        density = self.num_links / max(self.num_users * self.num_items, 1)
        return {
            "num_users": self.num_users,
            "num_items": self.num_items,
            "num_links": self.num_links,
            "density": density,
            "max_user_degree": int(self.user_degree.max(initial=0)),
            "max_item_degree": int(self.item_degree.max(initial=0)),
            "mean_user_degree": float(self.user_degree.mean()) if self.num_users else 0.0,
            "mean_item_degree": float(self.item_degree.mean()) if self.num_items else 0.0,
            "vocab_size": self.vocab_size,
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        if (self.num_users, self.num_items) != (other.num_users, other.num_items):
            return False
        if not np.array_equal(self._link_keys, other._link_keys):
            return False
        if (self.item_features is None) != (other.item_features is None):
            return False
        if self.item_features is None:
            return True
        a, b = self.item_features, other.item_features
        return a.shape == b.shape and (a != b).nnz == 0

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"InteractionGraph(num_users={self.num_users}, num_items={self.num_items}, "
            f"num_links={self.num_links})"
        )


class Holdout(NamedTuple):
    train: InteractionGraph
    test_pool: np.ndarray  # sorted held-out item ids
    test_links: InteractionGraph  # held-out links, same node universe


# -- TSV ingestion ---------------------------------------------------------


def _parse_int(token: str) -> int:
    if not token.isdigit():
        raise ValueError(token)
    return int(token)


def read_link_pairs(path) -> Tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    users, items = [], []
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LinkParseError(path, line_no, line)
            try:
                users.append(_parse_int(parts[0].strip()))
                items.append(_parse_int(parts[1].strip()))
            except ValueError:
                raise LinkParseError(
                    path, line_no, line, reason="ids must be non-negative integers"
                ) from None
    return np.asarray(users, dtype=np.int64), np.asarray(items, dtype=np.int64)


def read_feature_bags(path, num_items: int) -> sp.csr_matrix:
    """Parse ``item<TAB>tok tok ...`` lines into an items x vocab count matrix."""
    path = Path(path)
    rows, cols = [], []
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            head, sep, rest = line.partition("\t")
            if not sep:
                raise LinkParseError(path, line_no, line, reason="expected 'item<TAB>tokens'")
            try:
                item = _parse_int(head.strip())
                tokens = [_parse_int(tok) for tok in rest.split()]
            except ValueError:
                raise LinkParseError(
                    path, line_no, line, reason="ids and tokens must be non-negative integers"
                ) from None
            if item >= num_items:
                raise IdBoundsError(f"{path}:{line_no}: item id {item} >= num_items={num_items}")
            rows.extend([item] * len(tokens))
            cols.extend(tokens)
    vocab = (max(cols) + 1) if cols else 1
    mat = sp.coo_matrix(
        (np.ones(len(rows), dtype=np.float64), (rows, cols)), shape=(num_items, vocab)
    ).tocsr()
    mat.sum_duplicates()
    return mat


def ingest_links(
    path,
    num_users: Optional[int] = None,
    num_items: Optional[int] = None,
    features_path=None,
) -> InteractionGraph:
    """Load a ``user<TAB>item`` file (and optional feature bags) into a graph.

    Dimensions default to max id + 1. An id at or beyond a declared dimension
    raises IdBoundsError.
    """
    users, items = read_link_pairs(path)
    inferred_users = int(users.max()) + 1 if users.size else 0
    inferred_items = int(items.max()) + 1 if items.size else 0
    if num_users is not None and inferred_users > num_users:
        raise IdBoundsError(f"user id {inferred_users - 1} >= num_users={num_users}")
    if num_items is not None and inferred_items > num_items:
        raise IdBoundsError(f"item id {inferred_items - 1} >= num_items={num_items}")
    num_users = inferred_users if num_users is None else num_users
    num_items = inferred_items if num_items is None else num_items

    features = None
    if features_path is not None:
        features = read_feature_bags(features_path, num_items)

    graph = InteractionGraph(num_users, num_items, users, items, features)
    logger.info(
        f"ingested {path}: {graph.num_users} users, {graph.num_items} items, "
        f"{graph.num_links} links ({users.size - graph.num_links} duplicate lines)"
    )
    return graph


def write_links(graph: InteractionGraph, path):
    users, items = graph.links()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in zip(users.tolist(), items.tolist()):
            fh.write(f"{u}\t{v}\n")


def write_features(graph: InteractionGraph, path):
    if graph.item_features is None:
        raise DataError("graph has no item features to write")
    feats = graph.item_features
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in range(graph.num_items):
            lo, hi = feats.indptr[item], feats.indptr[item + 1]
            if lo == hi:
                continue
            tokens = []
            for tok, count in zip(feats.indices[lo:hi].tolist(), feats.data[lo:hi].tolist()):
                tokens.extend([str(tok)] * int(round(count)))
            fh.write(f"{item}\t{' '.join(tokens)}\n")


# -- item-holdout split ----------------------------------------------------


def split_holdout(graph: InteractionGraph, spec) -> Holdout:
    """Hold out a uniform random subset of items with all of their links.

    ``floor(fraction * num_items)`` items form the test pool; the training
    graph keeps every other link and the full node universe.
    """
    fraction = float(spec.test_item_fraction)
    if not 0.0 < fraction < 1.0:
        raise ConfigError("test_item_fraction must lie in (0, 1)", key="split.test_item_fraction")
    n_test = int(np.floor(fraction * graph.num_items))
    if n_test < 1:
        raise ConfigError(
            f"test_item_fraction={fraction} holds out no item of {graph.num_items}",
            key="split.test_item_fraction",
        )
    rng = make_rng(spec.seed, STREAM_SPLIT)
    test_pool = np.sort(rng.choice(graph.num_items, size=n_test, replace=False)).astype(np.int64)
    held = np.zeros(graph.num_items, dtype=bool)
    held[test_pool] = True

    train = graph.subgraph_items(~held)
    test_links = graph.subgraph_items(held)
    logger.info(
        f"holdout: {n_test} test items, {train.num_links} train links, "
        f"{test_links.num_links} held-out links"
    )
    return Holdout(train, _frozen(test_pool), test_links)
