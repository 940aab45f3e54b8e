"""
Functional embedding model: r(u, v) = f(x_u) . g(x_v).

f is a user table lookup. g is one of three item functions:

* ``id``          item table lookup
* ``linear-bag``  mean of token rows of the item's feature bag
* ``mlp-bag``     mean token vector -> ReLU hidden layer -> d outputs

Forward evaluates f once per unique user slot and g once per unique item
slot of a batch; backward takes gradients already summed per slot, so g is
back-propagated once per item slot however many links touch it.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from app.schemas import ModelSpec

from .errors import MissingFeaturesError, ShapeMismatchError
from .logger import get_logger
from .rng import STREAM_INIT, make_rng

logger = get_logger(__name__)


def _row_mean_matrix(features: sp.csr_matrix, dtype) -> sp.csr_matrix:
    counts = np.asarray(features.sum(axis=1)).ravel()
    inv = np.divide(1.0, counts, out=np.zeros_like(counts, dtype=np.float64), where=counts > 0)
    return sp.csr_matrix(sp.diags(inv) @ features, dtype=dtype)


class ItemFunction:
    kind = "base"
    block_names = ()

    def __init__(self, dtype):
        self.dtype = dtype
        self.params: Dict[str, np.ndarray] = OrderedDict()

    def forward(self, items: np.ndarray):
        raise NotImplementedError

    def backward(self, cache, dG: np.ndarray, grads: Dict[str, np.ndarray]):
        raise NotImplementedError


class IdTable(ItemFunction):
    kind = "id"
    block_names = ("item_table",)

    def __init__(self, num_items: int, dim: int, init, dtype):
        super().__init__(dtype)
        self.params["item_table"] = init((num_items, dim))

    def forward(self, items):
        return self.params["item_table"][items], items

    def backward(self, cache, dG, grads):
        np.add.at(grads["item_table"], cache, dG)


class LinearBag(ItemFunction):
    kind = "linear-bag"
    block_names = ("token_table",)

    def __init__(self, bags: sp.csr_matrix, dim: int, init, dtype):
        super().__init__(dtype)
        self.bags = bags
        self.params["token_table"] = init((bags.shape[1], dim))

    def forward(self, items):
        A = self.bags[items]
        return np.asarray(A @ self.params["token_table"]), A

    def backward(self, cache, dG, grads):
        grads["token_table"] += np.asarray(cache.T @ dG)


class _MlpCache(NamedTuple):
    A: sp.csr_matrix
    h0: np.ndarray
    z: np.ndarray
    a: np.ndarray


class MlpBag(ItemFunction):
    kind = "mlp-bag"
    block_names = ("token_table", "w1", "b1", "w2", "b2")

    def __init__(self, bags: sp.csr_matrix, d_in: int, hidden: int, dim: int, init, dtype):
        super().__init__(dtype)
        self.bags = bags
        self.params["token_table"] = init((bags.shape[1], d_in))
        self.params["w1"] = init((d_in, hidden))
        self.params["b1"] = np.zeros(hidden, dtype=dtype)
        self.params["w2"] = init((hidden, dim))
        self.params["b2"] = np.zeros(dim, dtype=dtype)

    def forward(self, items):
        p = self.params
        A = self.bags[items]
        h0 = np.asarray(A @ p["token_table"])
        z = h0 @ p["w1"] + p["b1"]
        a = np.maximum(z, 0)
        return a @ p["w2"] + p["b2"], _MlpCache(A, h0, z, a)

    def backward(self, cache, dG, grads):
        p = self.params
        grads["w2"] += cache.a.T @ dG
        grads["b2"] += dG.sum(axis=0)
        dz = (dG @ p["w2"].T) * (cache.z > 0)
        grads["w1"] += cache.h0.T @ dz
        grads["b1"] += dz.sum(axis=0)
        grads["token_table"] += np.asarray(cache.A.T @ (dz @ p["w1"].T))


@dataclass
class BatchActivations:
    users: np.ndarray
    items: np.ndarray
    F: np.ndarray  # row i = f(user slot i)
    G: np.ndarray  # row j = g(item slot j)
    cache: object = field(default=None, repr=False)


class Scores(NamedTuple):
    pos: np.ndarray
    neg: Optional[np.ndarray] = None  # explicit negatives
    matrix: Optional[np.ndarray] = None  # users x items, dense grids


class EmbeddingModel:
    def __init__(
        self,
        num_users: int,
        num_items: int,
        spec: ModelSpec,
        item_features: Optional[sp.spmatrix] = None,
        seed: int = 0,
        g_cost_multiplier: int = 1,
    ):
        self.spec = spec
        self.num_users = num_users
        self.num_items = num_items
        self.dim = spec.dim
        self.dtype = np.dtype(spec.dtype)
        self.g_cost_multiplier = int(g_cost_multiplier)
        rng = make_rng(seed, STREAM_INIT)

        def init(shape):
            if spec.init == "zeros":
                return np.zeros(shape, dtype=self.dtype)
            return rng.uniform(-spec.init_scale, spec.init_scale, size=shape).astype(self.dtype)

        self.user_table = init((num_users, spec.dim))
        if spec.item_fn == "id":
            self.item_fn = IdTable(num_items, spec.dim, init, self.dtype)
        else:
            if item_features is None:
                raise MissingFeaturesError(
                    f"item function '{spec.item_fn}' needs item feature bags, graph has none"
                )
            if item_features.shape[0] != num_items:
                raise ShapeMismatchError(
                    f"feature rows {item_features.shape[0]} != num_items {num_items}"
                )
            feats = sp.csr_matrix(item_features)
            self.has_bag = np.diff(feats.indptr) > 0
            bags = _row_mean_matrix(feats, self.dtype)
            if spec.item_fn == "linear-bag":
                self.item_fn = LinearBag(bags, spec.dim, init, self.dtype)
            else:
                self.item_fn = MlpBag(bags, spec.d_in, spec.hidden, spec.dim, init, self.dtype)

        self.params: Dict[str, np.ndarray] = OrderedDict(user_table=self.user_table)
        self.params.update(self.item_fn.params)
        self.grads = OrderedDict((k, np.zeros_like(v)) for k, v in self.params.items())

    @property
    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def zero_grad(self):
        for g in self.grads.values():
            g.fill(0)

    def _check_items(self, items: np.ndarray):
        if self.spec.item_fn != "id" and not self.has_bag[items].all():
            missing = items[~self.has_bag[items]]
            raise MissingFeaturesError(
                f"item(s) {missing[:5].tolist()} have no feature bag for '{self.spec.item_fn}'"
            )

    def embed_users(self, users) -> np.ndarray:
        return self.user_table[np.asarray(users, dtype=np.int64)]

    def embed_items(self, items):
        items = np.asarray(items, dtype=np.int64)
        self._check_items(items)
        G = cache = None
        for _ in range(self.g_cost_multiplier):
            G, cache = self.item_fn.forward(items)
        return G, cache

    def forward(self, users, items) -> BatchActivations:
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        F = self.embed_users(users)
        G, cache = self.embed_items(items)
        return BatchActivations(users, items, F, G, cache)

    def backward(self, acts: BatchActivations, dF: np.ndarray, dG: np.ndarray):
        if dF.shape != acts.F.shape or dG.shape != acts.G.shape:
            raise ShapeMismatchError(
                f"upstream gradients {dF.shape}/{dG.shape} do not match "
                f"activations {acts.F.shape}/{acts.G.shape}"
            )
        np.add.at(self.grads["user_table"], acts.users, dF)
        # repeated evaluations are discarded; only the last one accumulates
        for _ in range(self.g_cost_multiplier - 1):
            scratch = OrderedDict((k, np.zeros_like(v)) for k, v in self.item_fn.params.items())
            self.item_fn.backward(acts.cache, dG, scratch)
        self.item_fn.backward(acts.cache, dG, self.grads)
        return self.grads

    def copy_params(self) -> Dict[str, np.ndarray]:
        return OrderedDict((k, v.copy()) for k, v in self.params.items())

    def load_params(self, params: Dict[str, np.ndarray]):
        for name, value in params.items():
            if name not in self.params:
                raise ShapeMismatchError(f"unknown parameter block '{name}'")
            if self.params[name].shape != value.shape:
                raise ShapeMismatchError(
                    f"block '{name}' shape {value.shape} != {self.params[name].shape}"
                )
            self.params[name][...] = value


def forward(model: EmbeddingModel, batch) -> BatchActivations:
    return model.forward(batch.users, batch.items)


def score_links(acts: BatchActivations, batch) -> Scores:
    """Per-link dot products, or the full F G^T matrix for dense grids."""
    F, G = acts.F, acts.G
    if batch.dense:
        S = F @ G.T
        return Scores(pos=S[batch.pos_user_slot, batch.pos_item_slot], matrix=S)
    neg = batch.negatives
    pos = np.einsum("ij,ij->i", F[batch.pos_user_slot], G[batch.pos_item_slot])
    negs = np.einsum("ij,ij->i", F[neg.user_slot], G[neg.item_slot])
    return Scores(pos=pos, neg=negs)


def backward(model: EmbeddingModel, batch, acts: BatchActivations, dF, dG):
    return model.backward(acts, dF, dG)
