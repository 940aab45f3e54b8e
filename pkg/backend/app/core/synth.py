"""
Desk-scale synthetic implicit-feedback graphs.

Item degrees follow a power law over a random popularity ranking
(degree ~ rank^-exponent, capped at num_users). Users are attached to each
item in proportion to a planted topic affinity, so a low-rank model can
actually learn something, and every item gets a token bag drawn from its
topics so the bag item functions have signal too.
"""
import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .graph import InteractionGraph
from .logger import get_logger
from .rng import STREAM_SYNTH, make_rng

logger = get_logger(__name__)

_TOPIC_CONCENTRATION = 0.3
_AFFINITY_FLOOR = 1e-3


def power_law_degrees(weights: np.ndarray, total: int, cap: int) -> np.ndarray:
    """Integer degrees proportional to ``weights``, each <= cap, summing to ``total``.

    Mass above the cap is poured back into uncapped items; the fractional
    parts are then rounded by largest remainder (lower id first on ties).
    """
    weights = np.asarray(weights, dtype=np.float64)
    n = weights.size
    if total > cap * n:
        raise DataError(f"cannot place {total} links on {n} items with cap {cap}")
    real = np.zeros(n)
    capped = np.zeros(n, dtype=bool)
    remaining = float(total)
    while remaining > 0 and not capped.all():
        free = ~capped
        share = remaining * weights[free] / weights[free].sum()
        over = share >= cap
        if not over.any():
            real[free] = share
            break
        idx = np.flatnonzero(free)[over]
        real[idx] = cap
        capped[idx] = True
        remaining = total - real[capped].sum()

    degrees = np.minimum(np.floor(real), cap).astype(np.int64)
    short = int(total - degrees.sum())
    if short > 0:
        frac = np.where(degrees < cap, real - degrees, -np.inf)
        order = np.lexsort((np.arange(n), -frac))
        degrees[order[:short]] += 1
    return degrees


def _token_bags(rng, item_topics: np.ndarray, vocab: int, mean_bag: float) -> sp.csr_matrix:
    num_items, rank = item_topics.shape
    bounds = np.linspace(0, vocab, rank + 1).astype(np.int64)
    seg_lo = bounds[:-1]
    seg_size = np.maximum(bounds[1:] - bounds[:-1], 1)
    lengths = 1 + rng.poisson(max(mean_bag - 1.0, 0.0), size=num_items)

    rows, cols = [], []
    for v in range(num_items):
        topics = rng.choice(rank, size=lengths[v], p=item_topics[v])
        tokens = np.minimum(seg_lo[topics] + rng.integers(0, seg_size[topics]), vocab - 1)
        rows.append(np.full(lengths[v], v, dtype=np.int64))
        cols.append(tokens)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    mat = sp.coo_matrix(
        (np.ones(rows.size), (rows, cols)), shape=(num_items, vocab)
    ).tocsr()
    mat.sum_duplicates()
    return mat


def synth_graph(
    num_users: int,
    num_items: int,
    target_links: int,
    degree_exponent: float = 1.0,
    seed: int = 0,
    *,
    rank: int = 8,
    vocab: int = 500,
    mean_bag: float = 20.0,
) -> InteractionGraph:
    if num_users < 1 or num_items < 1:
        raise DataError("synthetic graph needs at least one user and one item")
    if target_links < 0 or target_links > num_users * num_items:
        raise DataError(
            f"target_links={target_links} is infeasible for "
            f"{num_users}x{num_items} (max {num_users * num_items})"
        )
    rng = make_rng(seed, STREAM_SYNTH)

    popularity_rank = rng.permutation(num_items) + 1
    weights = popularity_rank.astype(np.float64) ** (-float(degree_exponent))
    degrees = power_law_degrees(weights, target_links, num_users)

    alpha = np.full(rank, _TOPIC_CONCENTRATION)
    user_topics = rng.dirichlet(alpha, size=num_users)
    item_topics = rng.dirichlet(alpha, size=num_items)
    affinity = user_topics @ item_topics.T + _AFFINITY_FLOOR

    users, items = [], []
    for v in range(num_items):
        deg = int(degrees[v])
        if deg == 0:
            continue
        p = affinity[:, v] / affinity[:, v].sum()
        users.append(rng.choice(num_users, size=deg, replace=False, p=p))
        items.append(np.full(deg, v, dtype=np.int64))
    users = np.concatenate(users) if users else np.zeros(0, dtype=np.int64)
    items = np.concatenate(items) if items else np.zeros(0, dtype=np.int64)

    features = _token_bags(rng, item_topics, vocab, mean_bag)
    graph = InteractionGraph(num_users, num_items, users, items, features)
    logger.info(
        f"synthesized {graph.num_users}x{graph.num_items} graph with "
        f"{graph.num_links} links (exponent {degree_exponent}, seed {seed})"
    )
    return graph


def degree_slope(degrees: np.ndarray) -> float:
    """Least-squares slope of log(degree) against log(popularity rank)."""
    deg = np.sort(np.asarray(degrees, dtype=np.float64))[::-1]
    deg = deg[deg > 0]
    if deg.size < 2:
        raise DataError("need at least two non-zero degrees for a slope")
    ranks = np.arange(1, deg.size + 1, dtype=np.float64)
    slope, _ = np.polyfit(np.log(ranks), np.log(deg), 1)
    return float(slope)
