"""
Mini-batch construction for the five sampling strategies.

Randomness lives in two places only: the epoch plan (which positives go in
which batch) and the per-strategy draws of negative users/items. Turning
drawn ids into a MiniBatch is done by the deterministic ``assemble_*``
functions, which tests and the unbiasedness oracle call directly.

Negative blocks come in two shapes:

* ExplicitNegatives: listed (user_slot, item_slot) links with a raw
  importance weight and the index of the positive that owns them.
* DenseGrid: every user slot x item slot cell is scored. For positive i the
  partner items are the item slots of the *other* groups in the batch (a
  group is one positive for neg-sharing, one stratum for stratified-ns);
  ``partners[i, c]`` counts them. On batches with distinct users and items
  this is exactly the grid minus the positive cells.
"""
import warnings
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from app.models import AuditRecordModel
from app.schemas import STRATIFIED, SamplerConfig

from .distributions import DiscreteDistribution, build_marginals, neg_weight, noise_for
from .errors import DegenerateBatchWarning, EmptyGraphError, UnsupportedCombinationError
from .graph import InteractionGraph
from .logger import get_logger
from .rng import STREAM_SAMPLER, make_rng

logger = get_logger(__name__)


class Marginals(NamedTuple):
    user: DiscreteDistribution
    item: DiscreteDistribution


def check_combination(strategy: str, loss_kind: str):
    """Reject sampler/loss pairs whose batches cannot form pairwise triplets."""
    pairwise = loss_kind in ("log-pair", "hinge-pair")
    if not pairwise:
        return
    if strategy in ("stratified",):
        raise UnsupportedCombinationError(
            f"strategy 'stratified' cannot be applied to pairwise loss '{loss_kind}': "
            "its negatives are other users of the same item, so no (u, v, v') triplet "
            "exists; use 'stratified-ns' instead",
            key="sampler.strategy",
        )
    if strategy == "iid":
        raise UnsupportedCombinationError(
            f"strategy 'iid' cannot be applied to pairwise loss '{loss_kind}': "
            "its negative links do not share the positive's user",
            key="sampler.strategy",
        )


# -- batch containers ------------------------------------------------------


@dataclass(frozen=True)
class ExplicitNegatives:
    user_slot: np.ndarray
    item_slot: np.ndarray
    weight: np.ndarray
    owner: np.ndarray  # positive index each negative belongs to

    @property
    def count(self) -> int:
        return int(self.user_slot.size)

    def per_positive(self, num_pos: int) -> np.ndarray:
        return np.bincount(self.owner, minlength=num_pos)

    def effective_weight(self, num_pos: int) -> np.ndarray:
        """w / n_i: each positive's block averages to an expectation."""
        n = self.per_positive(num_pos)
        return self.weight / n[self.owner]


@dataclass(frozen=True)
class DenseGrid:
    pos_mask: np.ndarray  # user slots x item slots
    item_weights: np.ndarray  # per item slot
    partners: np.ndarray  # positives x item slots, multiplicity of partner items
    groups: np.ndarray  # group id of each positive
    known_mask: Optional[np.ndarray] = None  # training links masked out of the negatives

    @property
    def partner_counts(self) -> np.ndarray:
        return self.partners.sum(axis=1)

    def partner_weights(self, pos_user_slot: np.ndarray) -> np.ndarray:
        """Omega[i, c]: weight of item slot c as a negative for positive i, already / n_i."""
        n = self.partner_counts
        omega = self.partners * self.item_weights[None, :]
        omega = np.divide(
            omega, n[:, None], out=np.zeros_like(omega, dtype=np.float64), where=n[:, None] > 0
        )
        if self.known_mask is not None:
            omega = np.where(self.known_mask[pos_user_slot], 0.0, omega)
        return omega


@dataclass(frozen=True)
class MiniBatch:
    strategy: str
    users: np.ndarray  # unique user ids, one per slot
    items: np.ndarray  # unique item ids, one per slot
    pos_user_slot: np.ndarray
    pos_item_slot: np.ndarray
    negatives: Union[ExplicitNegatives, DenseGrid]

    @property
    def num_pos(self) -> int:
        return int(self.pos_user_slot.size)

    @property
    def dense(self) -> bool:
        return isinstance(self.negatives, DenseGrid)

    @property
    def n_f(self) -> int:
        return int(self.users.size)

    @property
    def n_g(self) -> int:
        return int(self.items.size)

    @property
    def n_i_vec(self) -> int:
        return 0 if self.dense else self.num_pos + self.negatives.count

    @property
    def n_i_mat(self) -> int:
        return self.n_f * self.n_g if self.dense else 0

    @property
    def num_negatives(self) -> int:
        """Negative terms the loss sees; grid partners count once per occurrence."""
        if self.dense:
            grid = self.negatives
            partners = grid.partners
            if grid.known_mask is not None:
                partners = np.where(grid.known_mask[self.pos_user_slot], 0, partners)
            return int(partners.sum())
        return self.negatives.count

    def negatives_per_positive(self) -> np.ndarray:
        if self.dense:
            return self.negatives.partner_counts
        return self.negatives.per_positive(self.num_pos)

    @property
    def degenerate(self) -> bool:
        return bool(self.num_pos and np.any(self.negatives_per_positive() == 0))

    def pairing(self) -> List[np.ndarray]:
        """Per positive: explicit negative indices, or partner item slots for grids."""
        if self.dense:
            return [np.flatnonzero(row) for row in self.negatives.partners]
        order = np.argsort(self.negatives.owner, kind="stable")
        counts = self.negatives.per_positive(self.num_pos)
        return np.split(order, np.cumsum(counts)[:-1])

    def positive_links(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.users[self.pos_user_slot], self.items[self.pos_item_slot]

    def to_record(self, index: int) -> AuditRecordModel:
        record = dict(
            batch=index,
            strategy=self.strategy,
            users=self.users.tolist(),
            items=self.items.tolist(),
            pos_user_slot=self.pos_user_slot.tolist(),
            pos_item_slot=self.pos_item_slot.tolist(),
            n_f=self.n_f,
            n_g=self.n_g,
            n_i_vec=self.n_i_vec,
            n_i_mat=self.n_i_mat,
            negatives=self.num_negatives,
        )
        if self.dense:
            record["item_weights"] = self.negatives.item_weights.tolist()
        else:
            record["neg_user_slot"] = self.negatives.user_slot.tolist()
            record["neg_item_slot"] = self.negatives.item_slot.tolist()
            record["neg_weight"] = self.negatives.weight.tolist()
        return AuditRecordModel(**record)


# -- deterministic assembly ------------------------------------------------


def _slots(*id_arrays: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Unique ids (sorted) and the slot index of every input id."""
    sizes = [a.size for a in id_arrays]
    ids = np.concatenate([np.asarray(a, dtype=np.int64) for a in id_arrays])
    unique, inverse = np.unique(ids, return_inverse=True)
    inverse = inverse.reshape(-1).astype(np.int64)
    return unique, np.split(inverse, np.cumsum(sizes)[:-1])


def _as_ids(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int64).reshape(-1)


def assemble_explicit(
    strategy: str,
    pos_users,
    pos_items,
    neg_users,
    neg_items,
    neg_weights,
    owner,
) -> MiniBatch:
    pos_users, pos_items = _as_ids(pos_users), _as_ids(pos_items)
    neg_users, neg_items = _as_ids(neg_users), _as_ids(neg_items)
    users, (pu, nu) = _slots(pos_users, neg_users)
    items, (pi, ni) = _slots(pos_items, neg_items)
    negatives = ExplicitNegatives(
        user_slot=nu,
        item_slot=ni,
        weight=np.asarray(neg_weights, dtype=np.float64).reshape(-1),
        owner=_as_ids(owner),
    )
    return MiniBatch(strategy, users, items, pu, pi, negatives)


def assemble_iid(pos_users, pos_items, neg_users, neg_items, k: int) -> MiniBatch:
    b = _as_ids(pos_users).size
    return assemble_explicit(
        "iid", pos_users, pos_items, neg_users, neg_items,
        np.ones(b * k), np.repeat(np.arange(b), k),
    )


def assemble_negative(pos_users, pos_items, neg_items, k: int) -> MiniBatch:
    pos_users = _as_ids(pos_users)
    b = pos_users.size
    return assemble_explicit(
        "negative", pos_users, pos_items, np.repeat(pos_users, k), neg_items,
        np.ones(b * k), np.repeat(np.arange(b), k),
    )


def assemble_stratified(
    stratum_items,
    stratum_users: Sequence[np.ndarray],
    neg_users: Sequence[np.ndarray],
    stratum_weights,
    k: int,
) -> MiniBatch:
    """Strata of (item, its sampled users) plus k drawn users per positive on that item."""
    stratum_items = _as_ids(stratum_items)
    sizes = np.array([len(u) for u in stratum_users], dtype=np.int64)
    pos_users = np.concatenate([_as_ids(u) for u in stratum_users]) if len(sizes) else _as_ids([])
    pos_items = np.repeat(stratum_items, sizes)
    n_neg = k * sizes
    neg_u = np.concatenate([_as_ids(u) for u in neg_users]) if len(sizes) else _as_ids([])
    if neg_u.size != n_neg.sum():
        raise ValueError(f"expected {int(n_neg.sum())} negative users, got {neg_u.size}")
    neg_i = np.repeat(stratum_items, n_neg)
    weights = np.repeat(np.asarray(stratum_weights, dtype=np.float64), n_neg)
    owner = np.repeat(np.arange(pos_users.size), k)
    return assemble_explicit("stratified", pos_users, pos_items, neg_u, neg_i, weights, owner)


def _assemble_grid(
    strategy: str,
    pos_users: np.ndarray,
    pos_items: np.ndarray,
    groups: np.ndarray,
    group_items: np.ndarray,
    item_weight: Callable[[np.ndarray], np.ndarray],
    known: Optional[InteractionGraph],
) -> MiniBatch:
    users, (pu,) = _slots(pos_users)
    items, (pi, gi) = _slots(pos_items, group_items)
    n_users, n_items = users.size, items.size
    pos_mask = np.zeros((n_users, n_items), dtype=bool)
    pos_mask[pu, pi] = True

    group_count = np.bincount(gi, minlength=n_items)
    partners = np.tile(group_count, (pu.size, 1))
    partners[np.arange(pu.size), gi[groups]] -= 1

    known_mask = None
    if known is not None:
        known_mask = known.has_links(users[:, None], items[None, :])

    negatives = DenseGrid(
        pos_mask=pos_mask,
        item_weights=np.asarray(item_weight(items), dtype=np.float64),
        partners=partners,
        groups=groups,
        known_mask=known_mask,
    )
    batch = MiniBatch(strategy, users, items, pu, pi, negatives)
    if batch.degenerate:
        warnings.warn(
            f"{strategy} batch with {len(group_items)} group(s): "
            "some positives have no negative partner",
            DegenerateBatchWarning,
            stacklevel=3,
        )
    return batch


def assemble_neg_sharing(
    pos_users, pos_items, item_weight: Callable, known: Optional[InteractionGraph] = None
) -> MiniBatch:
    pos_users, pos_items = _as_ids(pos_users), _as_ids(pos_items)
    groups = np.arange(pos_users.size)
    return _assemble_grid(
        "neg-sharing", pos_users, pos_items, groups, pos_items, item_weight, known
    )


def assemble_stratified_ns(
    stratum_items,
    stratum_users: Sequence[np.ndarray],
    item_weight: Callable,
    known: Optional[InteractionGraph] = None,
) -> MiniBatch:
    stratum_items = _as_ids(stratum_items)
    sizes = np.array([len(u) for u in stratum_users], dtype=np.int64)
    pos_users = np.concatenate([_as_ids(u) for u in stratum_users]) if len(sizes) else _as_ids([])
    pos_items = np.repeat(stratum_items, sizes)
    groups = np.repeat(np.arange(stratum_items.size), sizes)
    return _assemble_grid(
        "stratified-ns", pos_users, pos_items, groups, stratum_items, item_weight, known
    )


# -- epoch plan ------------------------------------------------------------


class EpochPlan:
    """Ordered source of positives for one epoch.

    shuffle mode: a permutation of the links (or of item strata), consumed
    in order so every link appears exactly once. iid mode: the same number
    of batches, each drawn independently from P_d.
    """

    def __init__(
        self,
        graph: InteractionGraph,
        cfg: SamplerConfig,
        rng: np.random.Generator,
        marginals: Marginals,
    ):
        if graph.num_links == 0:
            raise EmptyGraphError("cannot plan an epoch over a graph with no links")
        self.graph = graph
        self.cfg = cfg
        self.marginals = marginals
        self.stratified = cfg.strategy in STRATIFIED
        self.cursor = 0
        self._link_users, self._link_items = graph.links()

        if cfg.positives == "iid":
            self.num_batches = -(-graph.num_links // cfg.b)
        elif self.stratified:
            self._build_strata(rng)
            self.num_batches = -(-self.strata_items.size // cfg.strata_per_batch)
        else:
            self.order = rng.permutation(graph.num_links)
            self.num_batches = -(-graph.num_links // cfg.b)

    def _build_strata(self, rng: np.random.Generator):
        s = self.cfg.s
        g = self.graph
        strata_items, strata_users = [], []
        for v in rng.permutation(np.flatnonzero(g.item_degree > 0)):
            users = rng.permutation(g.users_of(v))
            for lo in range(0, users.size, s):
                strata_items.append(int(v))
                strata_users.append(users[lo:lo + s].astype(np.int64))
        order = rng.permutation(len(strata_items))
        self.strata_items = np.asarray(strata_items, dtype=np.int64)[order]
        self.strata_users = [strata_users[i] for i in order]

    def __len__(self) -> int:
        return self.num_batches

    @property
    def remaining(self) -> bool:
        return self.cursor < self.num_batches

    def take_links(self, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        b = self.cfg.b
        if self.cfg.positives == "iid":
            idx = rng.integers(0, self.graph.num_links, size=b)
        else:
            idx = self.order[self.cursor * b:(self.cursor + 1) * b]
        self.cursor += 1
        return self._link_users[idx], self._link_items[idx]

    def take_strata(self, rng: np.random.Generator) -> Tuple[np.ndarray, List[np.ndarray]]:
        m = self.cfg.strata_per_batch
        if self.cfg.positives == "iid":
            items = self.marginals.item.sample(rng, size=m)
            users = []
            for v in items:
                neighbours = self.graph.users_of(v)
                users.append(neighbours[rng.integers(0, neighbours.size, size=self.cfg.s)].astype(np.int64))
        else:
            lo, hi = self.cursor * m, (self.cursor + 1) * m
            items = self.strata_items[lo:hi]
            users = self.strata_users[lo:hi]
        self.cursor += 1
        return items, users

    def positive_links(self) -> Tuple[np.ndarray, np.ndarray]:
        """All positives of a shuffle-mode epoch in plan order."""
        if self.stratified:
            sizes = [u.size for u in self.strata_users]
            return np.concatenate(self.strata_users), np.repeat(self.strata_items, sizes)
        return self._link_users[self.order], self._link_items[self.order]


def epoch_plan(
    graph: InteractionGraph,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    marginals: Optional[Marginals] = None,
) -> EpochPlan:
    if marginals is None:
        marginals = Marginals(*build_marginals(graph))
    return EpochPlan(graph, cfg, rng, marginals)


# -- the five strategies ---------------------------------------------------


def _weight_fn(P_n: DiscreteDistribution, P_d_item: DiscreteDistribution):
    return lambda items: np.atleast_1d(neg_weight(items, P_n, P_d_item))


def _known(plan: EpochPlan) -> Optional[InteractionGraph]:
    return plan.graph if plan.cfg.exclude_known_positives else None


def next_batch_iid(plan: EpochPlan, P_n: DiscreteDistribution, rng: np.random.Generator) -> MiniBatch:
    users, items = plan.take_links(rng)
    n = users.size * plan.cfg.k
    neg_users = plan.marginals.user.sample(rng, size=n)
    neg_items = P_n.sample(rng, size=n)
    return assemble_iid(users, items, neg_users, neg_items, plan.cfg.k)


def next_batch_negative(plan: EpochPlan, P_n: DiscreteDistribution, rng: np.random.Generator) -> MiniBatch:
    users, items = plan.take_links(rng)
    neg_items = P_n.sample(rng, size=users.size * plan.cfg.k)
    return assemble_negative(users, items, neg_items, plan.cfg.k)


def next_batch_stratified(
    plan: EpochPlan, P_n: DiscreteDistribution, P_d: Marginals, rng: np.random.Generator
) -> MiniBatch:
    items, users = plan.take_strata(rng)
    k = plan.cfg.k
    neg_users = [P_d.user.sample(rng, size=k * u.size) for u in users]
    weights = np.atleast_1d(neg_weight(items, P_n, P_d.item))
    return assemble_stratified(items, users, neg_users, weights, k)


def next_batch_neg_sharing(
    plan: EpochPlan, P_n: DiscreteDistribution, P_d: Marginals, rng: np.random.Generator
) -> MiniBatch:
    users, items = plan.take_links(rng)
    return assemble_neg_sharing(users, items, _weight_fn(P_n, P_d.item), _known(plan))


def next_batch_stratified_ns(
    plan: EpochPlan, P_n: DiscreteDistribution, P_d: Marginals, rng: np.random.Generator
) -> MiniBatch:
    items, users = plan.take_strata(rng)
    return assemble_stratified_ns(items, users, _weight_fn(P_n, P_d.item), _known(plan))


class Sampler:
    """Owns one RNG stream and the epoch cursor for a single training run."""

    def __init__(self, graph: InteractionGraph, cfg: SamplerConfig, noise_spec):
        if graph.num_links == 0:
            raise EmptyGraphError("training graph has no links")
        self.graph = graph
        self.cfg = cfg
        self.rng = make_rng(cfg.seed or 0, STREAM_SAMPLER)
        self.marginals = Marginals(*build_marginals(graph))
        data_drawn = cfg.strategy in ("stratified", "neg-sharing", "stratified-ns")
        self.P_n = noise_for(graph, noise_spec, self.marginals.item if data_drawn else None)
        self._next: Dict[str, Callable[[EpochPlan], MiniBatch]] = {
            "iid": lambda p: next_batch_iid(p, self.P_n, self.rng),
            "negative": lambda p: next_batch_negative(p, self.P_n, self.rng),
            "stratified": lambda p: next_batch_stratified(p, self.P_n, self.marginals, self.rng),
            "neg-sharing": lambda p: next_batch_neg_sharing(p, self.P_n, self.marginals, self.rng),
            "stratified-ns": lambda p: next_batch_stratified_ns(p, self.P_n, self.marginals, self.rng),
        }

    def plan(self) -> EpochPlan:
        return epoch_plan(self.graph, self.cfg, self.rng, self.marginals)

    def next_batch(self, plan: EpochPlan) -> MiniBatch:
        return self._next[self.cfg.strategy](plan)

    def epoch(self) -> Iterator[MiniBatch]:
        plan = self.plan()
        while plan.remaining:
            yield self.next_batch(plan)

    def batches(self, count: int) -> Iterator[MiniBatch]:
        """``count`` consecutive batches, spanning epochs as needed."""
        produced = 0
        while produced < count:
            for batch in self.epoch():
                yield batch
                produced += 1
                if produced == count:
                    return


def negative_item_counts(sampler: Sampler, num_batches: int) -> np.ndarray:
    """Histogram of explicit negative item ids over ``num_batches`` batches."""
    if sampler.cfg.strategy not in ("iid", "negative"):
        raise UnsupportedCombinationError(
            "negative-item audit needs a strategy that draws items from P_n",
            key="sampler.strategy",
        )
    counts = np.zeros(sampler.graph.num_items, dtype=np.int64)
    for batch in sampler.batches(num_batches):
        neg = batch.negatives
        np.add.at(counts, batch.items[neg.item_slot], 1)
    return counts
