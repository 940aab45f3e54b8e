"""
Categorical node distributions with alias-method sampling.

P_d (data marginals over users and items) and P_n (negative-item noise) are
both DiscreteDistribution instances. Negatives that come out of the data
itself (stratified and shared-negative batches) are drawn from P_d, so their
terms carry the correction P_n(v) / P_d(v) returned by ``neg_weight``.
"""
from collections import deque
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ConfigError, EmptyGraphError, UndefinedWeightError
from .graph import InteractionGraph
from .logger import get_logger

logger = get_logger(__name__)


class DiscreteDistribution:
    """Normalized distribution over ``0..n-1`` with Vose alias tables."""

    def __init__(self, weights, name: str = "dist"):
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if weights.size == 0:
            raise EmptyGraphError(f"{name}: distribution over zero outcomes")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ConfigError(f"{name}: weights must be finite and non-negative")
        total = weights.sum()
        if total <= 0:
            raise EmptyGraphError(f"{name}: all weights are zero")
        self.name = name
        self.probs = weights / total
        self.probs.setflags(write=False)
        self.alias_prob, self.alias = self._build_alias(self.probs)

    @staticmethod
    def _build_alias(probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = probs.size
        scaled = probs * n
        prob = np.ones(n, dtype=np.float64)
        alias = np.arange(n, dtype=np.int64)
        # both worklists are served lowest id first
        small = deque(int(i) for i in np.flatnonzero(scaled < 1.0))
        large = deque(int(i) for i in np.flatnonzero(scaled >= 1.0))
        while small and large:
            s = small.popleft()
            l = large.popleft()
            prob[s] = scaled[s]
            alias[s] = l
            scaled[l] = (scaled[l] + scaled[s]) - 1.0
            if scaled[l] < 1.0:
                small.append(l)
            else:
                large.appendleft(l)
        # leftovers differ from 1 only by rounding
        for i in list(small) + list(large):
            prob[i] = 1.0
            alias[i] = i
        prob.setflags(write=False)
        alias.setflags(write=False)
        return prob, alias

    def __len__(self) -> int:
        return int(self.probs.size)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def sample(self, rng: np.random.Generator, size=None) -> Union[int, np.ndarray]:
        """O(1) per draw: one uniform slot, one biased coin."""
        n = self.probs.size
        slot = rng.integers(0, n, size=size)
        coin = rng.random(size=size)
        out = np.where(coin < self.alias_prob[slot], slot, self.alias[slot])
        if size is None:
            return int(out)
        return out.astype(np.int64)

    def reconstruct(self) -> np.ndarray:
        """Probabilities implied by the alias tables alone."""
        n = self.probs.size
        out = self.alias_prob.copy()
        np.add.at(out, self.alias, 1.0 - self.alias_prob)
        return out / n

    def __repr__(self) -> str:
        return f"DiscreteDistribution(name={self.name!r}, n={len(self)})"


def sample(dist: DiscreteDistribution, rng: np.random.Generator) -> int:
    return dist.sample(rng)


def build_marginals(g: InteractionGraph) -> Tuple[DiscreteDistribution, DiscreteDistribution]:
    """Empirical data marginals ``(P_d_user, P_d_item)`` from node degrees."""
    if g.num_links == 0:
        raise EmptyGraphError("cannot build data marginals of a graph with no links")
    return (
        DiscreteDistribution(g.user_degree, name="P_d_user"),
        DiscreteDistribution(g.item_degree, name="P_d_item"),
    )


def build_noise(g: InteractionGraph, spec) -> DiscreteDistribution:
    kind = spec.kind
    if kind == "uniform":
        return DiscreteDistribution(np.ones(g.num_items), name="P_n")
    if g.num_links == 0:
        raise EmptyGraphError(f"{kind} noise needs item degrees, graph has no links")
    degree = g.item_degree.astype(np.float64)
    if kind == "degree-unigram":
        return DiscreteDistribution(degree, name="P_n")
    if kind == "unigram-power":
        alpha = float(spec.alpha)
        if alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {alpha}", key="noise.alpha")
        weights = np.where(degree > 0, degree ** alpha, 0.0)
        return DiscreteDistribution(weights, name="P_n")
    raise ConfigError(f"unknown noise kind '{kind}'", key="noise.kind")


def neg_weight(v, P_n: DiscreteDistribution, P_d_item: DiscreteDistribution):
    """Importance correction P_n(v) / P_d(v) for data-drawn negative items.

    Scalar in, float out; array in, array out.
    """
    v_arr = np.asarray(v, dtype=np.int64)
    pd = P_d_item.probs[v_arr]
    if np.any(pd <= 0):
        bad = np.atleast_1d(v_arr)[np.atleast_1d(pd) <= 0][0]
        raise UndefinedWeightError(f"P_d({int(bad)}) = 0, weight P_n/P_d is undefined")
    w = P_n.probs[v_arr] / pd
    return float(w) if w.ndim == 0 else w


def uncovered_mass(P_n: DiscreteDistribution, P_d_item: DiscreteDistribution) -> float:
    """Noise mass on items the data marginal never produces."""
    return float(P_n.probs[P_d_item.probs <= 0].sum())


def noise_for(g: InteractionGraph, spec, P_d_item: Optional[DiscreteDistribution] = None):
    """Build P_n and warn when data-drawn negatives cannot cover it."""
    P_n = build_noise(g, spec)
    if P_d_item is not None:
        lost = uncovered_mass(P_n, P_d_item)
        if lost > 0:
            logger.warning(
                f"P_n puts {lost:.4f} of its mass on items with no training links; "
                "data-drawn negatives cannot reach them"
            )
    return P_n
