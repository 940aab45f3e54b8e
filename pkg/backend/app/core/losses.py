"""
Pointwise (sg, mse) and pairwise (log-pair, hinge-pair) graph losses.

Batch losses are normalized per positive link:

    pointwise  (1/b) * (sum_i L+(x_i) + lam * sum_j omega_j L-(x_j))
    pairwise   (1/b) * sum_(i, j) omega_ij l(x_i - x_j)

omega already contains the per-positive averaging 1/n_i and the importance
weight P_n/P_d of data-drawn negatives, so every strategy estimates the same
expectation over P_d(u, v) and P_d(u) P_n(v').
"""
import warnings
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import expit

from app.schemas import PAIRWISE, LossSpec

from .embeddings import BatchActivations, EmbeddingModel, score_links
from .errors import ConfigError, DegenerateBatchWarning
from .graph import InteractionGraph
from .distributions import DiscreteDistribution


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


class ScoreGrad(NamedTuple):
    """dL/dscore: per explicit link, or one matrix for dense grids."""
    pos: Optional[np.ndarray] = None
    neg: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None


def _positive_term(kind: str, x: np.ndarray, target: float):
    if kind == "sg":
        return _softplus(-x), -expit(-x)  # -log sigmoid(x)
    if kind == "mse":
        return (target - x) ** 2, -2.0 * (target - x)
    raise ConfigError(f"unknown pointwise loss '{kind}'", key="loss.kind")


def _negative_term(kind: str, x: np.ndarray, target: float):
    if kind == "sg":
        return _softplus(x), expit(x)  # -log sigmoid(-x)
    if kind == "mse":
        return (target - x) ** 2, -2.0 * (target - x)
    raise ConfigError(f"unknown pointwise loss '{kind}'", key="loss.kind")


def pointwise_terms(
    kind: str,
    pos_scores,
    neg_scores,
    neg_weights,
    lam: float,
    r_pos: float = 1.0,
    r_neg: float = 0.0,
    num_pos: Optional[int] = None,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Returns ``(loss, dL/dpos, dL/dneg)``; ``neg_weights`` are effective weights."""
    x_pos = np.asarray(pos_scores, dtype=np.float64)
    x_neg = np.asarray(neg_scores, dtype=np.float64)
    w = np.asarray(neg_weights, dtype=np.float64)
    b = x_pos.size if num_pos is None else num_pos
    if b == 0:
        return 0.0, np.zeros_like(x_pos), np.zeros_like(x_neg)

    l_pos, d_pos = _positive_term(kind, x_pos, r_pos)
    l_neg, d_neg = _negative_term(kind, x_neg, r_neg)
    active = w != 0
    loss = (l_pos.sum() + lam * np.sum(w[active] * l_neg[active])) / b
    return float(loss), d_pos / b, lam * w * d_neg / b


def pairwise_terms(
    kind: str,
    pos_scores,
    neg_scores,
    weights,
    gamma: float,
    num_pos: Optional[int] = None,
    owner: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Per triplet ``(x+, x-, w)``; returns ``(loss, dL/dx+, dL/dx-)`` per triplet.

    With ``owner`` (positive index of each triplet) positives that have no
    triplet raise a DegenerateBatchWarning and contribute nothing.
    """
    x_pos = np.asarray(pos_scores, dtype=np.float64)
    x_neg = np.asarray(neg_scores, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    b = x_pos.size if num_pos is None else num_pos
    if owner is not None and num_pos:
        empty = np.bincount(owner, minlength=num_pos) == 0
        if empty.any():
            warnings.warn(
                f"{int(empty.sum())} positive(s) without negative partners skipped",
                DegenerateBatchWarning,
                stacklevel=2,
            )
    if b == 0 or x_pos.size == 0:
        return 0.0, np.zeros_like(x_pos), np.zeros_like(x_neg)

    diff = x_pos - x_neg
    if kind == "log-pair":
        per = _softplus(-gamma * diff)
        g = -gamma * expit(-gamma * diff)
    elif kind == "hinge-pair":
        margin = gamma - diff
        per = np.maximum(margin, 0.0)
        g = np.where(margin >= 0, -1.0, 0.0)  # active on the kink
    else:
        raise ConfigError(f"unknown pairwise loss '{kind}'", key="loss.kind")

    loss = np.sum(w * per) / b
    d_pos = w * g / b
    return float(loss), d_pos, -d_pos


def _grid_coefficients(batch) -> np.ndarray:
    """Pointwise negative coefficient per grid cell: sum over the row's positives."""
    grid = batch.negatives
    omega = grid.partner_weights(batch.pos_user_slot)
    coef = np.zeros(grid.pos_mask.shape, dtype=np.float64)
    np.add.at(coef, batch.pos_user_slot, omega)
    return coef


def batch_loss(batch, scores, spec: LossSpec) -> Tuple[float, ScoreGrad]:
    b = batch.num_pos
    if spec.kind in PAIRWISE:
        return _pairwise_batch(batch, scores, spec)
    if batch.dense:
        coef = _grid_coefficients(batch)
        loss, d_pos, d_cells = pointwise_terms(
            spec.kind, scores.pos, scores.matrix.ravel(), coef.ravel(), spec.lam,
            spec.r_pos, spec.r_neg, num_pos=b,
        )
        dS = d_cells.reshape(scores.matrix.shape)
        np.add.at(dS, (batch.pos_user_slot, batch.pos_item_slot), d_pos)
        return loss, ScoreGrad(matrix=dS)
    weights = batch.negatives.effective_weight(b)
    loss, d_pos, d_neg = pointwise_terms(
        spec.kind, scores.pos, scores.neg, weights, spec.lam,
        spec.r_pos, spec.r_neg, num_pos=b,
    )
    return loss, ScoreGrad(pos=d_pos, neg=d_neg)


def _pairwise_batch(batch, scores, spec: LossSpec) -> Tuple[float, ScoreGrad]:
    b = batch.num_pos
    if batch.dense:
        omega = batch.negatives.partner_weights(batch.pos_user_slot)
        i_idx, c_idx = np.nonzero(omega)
        u_idx = batch.pos_user_slot[i_idx]
        loss, d_pos, d_neg = pairwise_terms(
            spec.kind, scores.pos[i_idx], scores.matrix[u_idx, c_idx], omega[i_idx, c_idx],
            spec.gamma, num_pos=b, owner=i_idx,
        )
        dS = np.zeros_like(scores.matrix, dtype=np.float64)
        np.add.at(dS, (u_idx, c_idx), d_neg)
        np.add.at(
            dS, (batch.pos_user_slot[i_idx], batch.pos_item_slot[i_idx]), d_pos
        )
        return loss, ScoreGrad(matrix=dS)
    neg = batch.negatives
    owner = neg.owner
    loss, d_trip_pos, d_neg = pairwise_terms(
        spec.kind, scores.pos[owner], scores.neg, neg.effective_weight(b),
        spec.gamma, num_pos=b, owner=owner,
    )
    d_pos = np.bincount(owner, weights=d_trip_pos, minlength=b)
    return loss, ScoreGrad(pos=d_pos, neg=d_neg)


def assemble_gradients(batch, acts: BatchActivations, grad: ScoreGrad) -> Tuple[np.ndarray, np.ndarray]:
    """Chain rule through x = f . g, summed per slot."""
    F, G = acts.F, acts.G
    if grad.matrix is not None:
        dS = grad.matrix.astype(F.dtype, copy=False)
        return dS @ G, dS.T @ F
    dF = np.zeros_like(F)
    dG = np.zeros_like(G)
    pu, pi = batch.pos_user_slot, batch.pos_item_slot
    d_pos = grad.pos[:, None]
    np.add.at(dF, pu, d_pos * G[pi])
    np.add.at(dG, pi, d_pos * F[pu])
    if grad.neg is not None and grad.neg.size:
        nu, ni = batch.negatives.user_slot, batch.negatives.item_slot
        d_neg = grad.neg[:, None]
        np.add.at(dF, nu, d_neg * G[ni])
        np.add.at(dG, ni, d_neg * F[nu])
    return dF, dG


def batch_objective(
    model: EmbeddingModel, batch, spec: LossSpec, weight_decay: float = 0.0
) -> Tuple[float, BatchActivations]:
    """One forward/backward pass; gradients land in ``model.grads`` (zeroed first)."""
    model.zero_grad()
    acts = model.forward(batch.users, batch.items)
    scores = score_links(acts, batch)
    loss, grad = batch_loss(batch, scores, spec)
    dF, dG = assemble_gradients(batch, acts, grad)
    if weight_decay:
        loss += 0.5 * weight_decay * float(np.sum(acts.F.astype(np.float64) ** 2))
        dF = dF + weight_decay * acts.F
    model.backward(acts, dF, dG)
    return loss, acts


def full_objective(
    model: EmbeddingModel,
    graph: InteractionGraph,
    P_n: DiscreteDistribution,
    spec: LossSpec,
    with_grad: bool = False,
) -> Tuple[float, Optional[Dict[str, np.ndarray]]]:
    """The exact objective over every (u, v) and (u, v') of the training graph.

    pointwise: E_{P_d(u,v)} L+ + lam * E_{P_d(u) P_n(v')} L-
    pairwise:  E_{P_d(u,v)} E_{P_n(v')} l(x_uv - x_uv')
    With ``with_grad`` the gradient is left in ``model.grads`` and a copy returned.
    """
    L = graph.num_links
    link_u, link_v = graph.links()
    items = np.union1d(P_n.support, np.flatnonzero(graph.item_degree > 0))
    col = np.full(graph.num_items, -1, dtype=np.int64)
    col[items] = np.arange(items.size)
    users = np.arange(graph.num_users)

    acts = model.forward(users, items)
    F = acts.F.astype(np.float64)
    G = acts.G.astype(np.float64)
    S = F @ G.T
    pn = P_n.probs[items]
    dS = np.zeros_like(S)

    if spec.kind in PAIRWISE:
        x_pos = S[link_u, col[link_v]]
        x_neg = S[link_u]
        trip_w = np.broadcast_to(pn[None, :] / L, x_neg.shape)
        loss, d_pos, d_neg = pairwise_terms(
            spec.kind, np.repeat(x_pos, items.size), x_neg.ravel(), trip_w.ravel(),
            spec.gamma, num_pos=1,
        )
        np.add.at(dS, link_u, d_neg.reshape(x_neg.shape))
        np.add.at(dS, (link_u, col[link_v]), d_pos.reshape(x_neg.shape).sum(axis=1))
    else:
        pd_user = graph.user_degree / L
        coef = spec.lam * pd_user[:, None] * pn[None, :]
        x_pos = S[link_u, col[link_v]]
        l_pos, d_pos = _positive_term(spec.kind, x_pos, spec.r_pos)
        l_neg, d_neg = _negative_term(spec.kind, S, spec.r_neg)
        active = coef != 0
        loss = l_pos.sum() / L + np.sum(coef[active] * l_neg[active])
        dS = coef * d_neg
        np.add.at(dS, (link_u, col[link_v]), d_pos / L)

    if not with_grad:
        return float(loss), None
    model.zero_grad()
    model.backward(acts, (dS @ G).astype(model.dtype), (dS.T @ F).astype(model.dtype))
    return float(loss), {k: v.copy() for k, v in model.grads.items()}

