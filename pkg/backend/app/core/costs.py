"""
Closed-form batch composition and cost per strategy, for b positives with
distinct users and items:

    strategy       n_f      n_g      n_i          negatives
    iid            b(1+k)   b(1+k)   b(1+k) vec   bk
    negative       b        b(1+k)   b(1+k) vec   bk
    stratified     b(1+k)   b/s      b(1+k) vec   bk
    neg-sharing    b        b        b*b mat      b(b-1)
    stratified-ns  b        b/s      b*(b/s) mat  b(b/s-1)

cost = t_f * n_f + t_g * n_g + t_i * n_i
"""
from typing import List, NamedTuple, Sequence

from app.models import CostRowModel
from app.schemas import STRATEGIES

from .errors import ConfigError


class Composition(NamedTuple):
    n_f: int
    n_g: int
    n_i: int
    mode: str
    negatives: int


def composition(strategy: str, b: int, k: int, s: int) -> Composition:
    if b <= 0:
        raise ConfigError("b must be positive", key="sampler.b")
    if strategy in ("stratified", "stratified-ns") and (s < 1 or b % s):
        raise ConfigError(f"s={s} must divide b={b}", key="sampler.s")
    if strategy == "iid":
        return Composition(b * (1 + k), b * (1 + k), b * (1 + k), "vec", b * k)
    if strategy == "negative":
        return Composition(b, b * (1 + k), b * (1 + k), "vec", b * k)
    if strategy == "stratified":
        return Composition(b * (1 + k), b // s, b * (1 + k), "vec", b * k)
    if strategy == "neg-sharing":
        return Composition(b, b, b * b, "mat", b * (b - 1))
    if strategy == "stratified-ns":
        return Composition(b, b // s, b * (b // s), "mat", b * (b // s - 1))
    raise ConfigError(f"unknown strategy '{strategy}'", key="sampler.strategy")


def cost_sim(b: int, k: int, s: int, t_f: float, t_g: float, t_i: float, strategy: str) -> float:
    """Predicted cost of one batch in units of t_f, t_g, t_i."""
    if min(t_f, t_g, t_i) < 0:
        raise ConfigError("unit costs must be non-negative")
    c = composition(strategy, b, k, s)
    return t_f * c.n_f + t_g * c.n_g + t_i * c.n_i


def cost_table(
    b: int, k: int, s: int, t_f: float, t_g: float, t_i: float,
    strategies: Sequence[str] = STRATEGIES,
) -> List[CostRowModel]:
    iid_ng = composition("iid", b, k, s).n_g
    rows = []
    for strategy in strategies:
        c = composition(strategy, b, k, s)
        rows.append(CostRowModel(
            strategy=strategy,
            n_f=c.n_f,
            n_g=c.n_g,
            n_i=c.n_i,
            interaction_mode=c.mode,
            negatives=c.negatives,
            cost=cost_sim(b, k, s, t_f, t_g, t_i, strategy),
            ng_speedup=iid_ng / c.n_g,
        ))
    return rows
