import numpy as np
import pytest
import scipy.sparse as sp

from app.core.graph import InteractionGraph
from app.core.samplers import (
    assemble_iid,
    assemble_neg_sharing,
    assemble_negative,
    assemble_stratified,
    assemble_stratified_ns,
)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# 3 users x 4 items; user degrees (2, 2, 2), item degrees (2, 2, 1, 1)
TINY_LINKS = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 3)]


@pytest.fixture
def tiny_graph():
    users, items = zip(*TINY_LINKS)
    return InteractionGraph(3, 4, users, items)


@pytest.fixture
def tiny_bag_graph():
    users, items = zip(*TINY_LINKS)
    rows = [0, 0, 1, 2, 2, 3]
    cols = [0, 1, 1, 2, 3, 0]
    feats = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(4, 5))
    return InteractionGraph(3, 4, users, items, feats)


def _ones(items):
    return np.ones(len(items))


def composition_batch(strategy: str, b: int, k: int, s: int):
    """Batch with all-distinct ids, so counts hit the closed-form composition."""
    pos_u = np.arange(b)
    pos_i = np.arange(b)
    if strategy == "iid":
        neg = np.arange(b, b + b * k)
        return assemble_iid(pos_u, pos_i, neg, neg, k)
    if strategy == "negative":
        return assemble_negative(pos_u, pos_i, np.arange(b, b + b * k), k)
    if strategy == "neg-sharing":
        return assemble_neg_sharing(pos_u, pos_i, _ones)
    m = b // s
    strata_users = [np.arange(g * s, (g + 1) * s) for g in range(m)]
    if strategy == "stratified":
        neg_users = [np.arange(b + g * s * k, b + (g + 1) * s * k) for g in range(m)]
        return assemble_stratified(np.arange(m), strata_users, neg_users, np.ones(m), k)
    if strategy == "stratified-ns":
        return assemble_stratified_ns(np.arange(m), strata_users, _ones)
    raise ValueError(strategy)


@pytest.fixture
def make_composition_batch():
    return composition_batch
