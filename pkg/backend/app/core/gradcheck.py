"""
Central finite-difference checks of the analytic batch gradient.

The error of a parameter block is max |analytic - numeric| divided by the
largest gradient magnitude in that block, floored at GRAD_FLOOR. Elements
whose gradient is numerically zero do not dominate, and a block whose true
gradient vanishes (the output bias under pairwise losses) is judged on
absolute rounding error.
"""
from itertools import product
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.models import GradcheckRowModel
from app.schemas import LossSpec, ModelSpec, NoiseSpec, SamplerConfig

from .embeddings import EmbeddingModel, score_links
from .errors import GradcheckFailure, UnsupportedCombinationError
from .graph import InteractionGraph
from .logger import get_logger
from .losses import batch_loss, batch_objective
from .samplers import Sampler, check_combination
from .synth import synth_graph

logger = get_logger(__name__)

ITEM_FNS = ("id", "linear-bag", "mlp-bag")
LOSSES = ("sg", "mse", "log-pair", "hinge-pair")
# blocks whose gradient is below this are compared on absolute error
GRAD_FLOOR = 1e-4

STRATEGY_SHAPES = {
    "iid": dict(b=2, k=2),
    "negative": dict(b=2, k=2),
    "stratified": dict(b=2, k=2, s=1),
    "neg-sharing": dict(b=3),
    "stratified-ns": dict(b=2, s=1),
}


def loss_value(model: EmbeddingModel, batch, spec: LossSpec, weight_decay: float = 0.0) -> float:
    acts = model.forward(batch.users, batch.items)
    loss, _ = batch_loss(batch, score_links(acts, batch), spec)
    if weight_decay:
        loss += 0.5 * weight_decay * float(np.sum(acts.F ** 2))
    return loss


def numeric_grads(model, batch, spec, eps: float = 1e-5, weight_decay: float = 0.0):
    grads = {}
    for name, block in model.params.items():
        g = np.zeros_like(block, dtype=np.float64)
        flat = block.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_value(model, batch, spec, weight_decay)
            flat[i] = orig - eps
            down = loss_value(model, batch, spec, weight_decay)
            flat[i] = orig
            g.reshape(-1)[i] = (up - down) / (2 * eps)
        grads[name] = g
    return grads


def block_errors(analytic: Dict[str, np.ndarray], numeric: Dict[str, np.ndarray]) -> Dict[str, float]:
    errors = {}
    for name, a in analytic.items():
        n = numeric[name]
        scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(n), initial=0.0)))
        diff = float(np.max(np.abs(a - n), initial=0.0))
        errors[name] = diff / max(scale, GRAD_FLOOR)
    return errors


def check_batch(
    model: EmbeddingModel,
    batch,
    spec: LossSpec,
    eps: float = 1e-5,
    weight_decay: float = 0.0,
    fault: Optional[str] = None,
) -> Dict[str, float]:
    """Per-block error; ``fault`` names a block whose analytic gradient is sign-flipped."""
    batch_objective(model, batch, spec, weight_decay)
    analytic = {k: v.astype(np.float64).copy() for k, v in model.grads.items()}
    if fault is not None:
        analytic[fault] = -analytic[fault]
    numeric = numeric_grads(model, batch, spec, eps, weight_decay)
    return block_errors(analytic, numeric)


def fixture_graph(seed: int = 0) -> InteractionGraph:
    return synth_graph(4, 5, 12, 1.0, seed, rank=2, vocab=8, mean_bag=3.0)


def run_gradcheck(
    item_fns: Sequence[str] = ITEM_FNS,
    losses: Sequence[str] = LOSSES,
    strategies: Sequence[str] = tuple(STRATEGY_SHAPES),
    eps: float = 1e-5,
    tol: float = 1e-4,
    dim: int = 3,
    seed: int = 0,
    fault: Optional[str] = None,
    graph: Optional[InteractionGraph] = None,
) -> List[GradcheckRowModel]:
    graph = graph if graph is not None else fixture_graph(seed)
    noise = NoiseSpec(kind="unigram-power", alpha=0.75)
    rows = []
    for item_fn, loss_kind, strategy in product(item_fns, losses, strategies):
        try:
            check_combination(strategy, loss_kind)
        except UnsupportedCombinationError:
            continue
        spec = LossSpec(kind=loss_kind, lam=2.0)
        model = EmbeddingModel(
            graph.num_users, graph.num_items,
            ModelSpec(dim=dim, item_fn=item_fn, d_in=4, hidden=8, init_scale=0.5),
            graph.item_features, seed=seed,
        )
        sampler = Sampler(graph, SamplerConfig(strategy=strategy, seed=seed, **STRATEGY_SHAPES[strategy]), noise)
        batch = next(sampler.epoch())
        errors = check_batch(model, batch, spec, eps, weight_decay=0.01, fault=fault)
        worst = max(errors, key=errors.get)
        rows.append(GradcheckRowModel(
            item_fn=item_fn,
            loss=loss_kind,
            strategy=strategy,
            worst_block=worst,
            max_rel_error=errors[worst],
            passed=errors[worst] < tol,
        ))
    return rows


def raise_on_failure(rows: Sequence[GradcheckRowModel], tol: float = 1e-4):
    failed = [r for r in rows if not r.passed]
    if failed:
        detail = "; ".join(
            f"{r.item_fn}/{r.loss}/{r.strategy}: block '{r.worst_block}' error {r.max_rel_error:.3g}"
            for r in failed
        )
        raise GradcheckFailure(f"{len(failed)} gradient check(s) above {tol:g}: {detail}")
