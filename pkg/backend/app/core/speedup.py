"""
Referenced-loss speedup protocol.

IID is trained first; its smallest training loss over the epoch budget is
the finish line L_ref. Every strategy is then compared with IID on

* per-iteration speedup: IID seconds per batch / strategy seconds per batch
* iteration speedup: IID batches to reach L_ref / strategy batches to L_ref
* total speedup: product of the two

plus the ratio of mean item-function evaluations per batch from the ledgers.
A strategy that never reaches L_ref gets infinite iterations and a cleared
``reached_reference`` flag.
"""
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

from app.models import KSweepRowModel, SpeedupRowModel
from app.schemas import TrainConfig

from .config import settings
from .graph import InteractionGraph
from .logger import get_logger
from .trainer import EvalSet, RunTrace, train

logger = get_logger(__name__)


def _run(args) -> Tuple[RunTrace, float]:
    graph, test, cfg = args
    result = train(graph, test, cfg)
    return result.trace, result.ledger.mean_n_g()


def _run_all(graph, test, configs: Sequence[TrainConfig], workers: int) -> List[Tuple[RunTrace, float]]:
    jobs = [(graph, test, cfg) for cfg in configs]
    if workers <= 1 or settings.NCF_SERIAL:
        return [_run(job) for job in jobs]
    # concurrent runs share cores, so wall-time ratios get noisier
    logger.info(f"running {len(jobs)} trainings on {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run, jobs))


def speedup_rows(
    traces: Dict[str, Tuple[RunTrace, float]],
    strategies: Sequence[str],
    source: str = "batch",
) -> List[SpeedupRowModel]:
    iid_trace, iid_ng = traces["iid"]
    l_ref = iid_trace.min_loss(source)
    iid_iters = iid_trace.batches_to_reach(l_ref, source)
    iid_spb = iid_trace.seconds_per_batch

    rows = []
    for strategy in strategies:
        trace, mean_ng = traces[strategy]
        spb = trace.seconds_per_batch
        per_iteration = iid_spb / spb if spb > 0 else float("inf")
        iters = trace.batches_to_reach(l_ref, source)
        reached = iters is not None
        if not reached:
            iters = float("inf")
        iteration = iid_iters / iters
        rows.append(SpeedupRowModel(
            strategy=strategy,
            seconds_per_iteration=spb,
            per_iteration_speedup=per_iteration,
            iterations_to_reference=iters,
            iteration_speedup=iteration,
            total_speedup=per_iteration * iteration,
            analytic_ng_ratio=iid_ng / mean_ng,
            reached_reference=reached,
            min_loss=trace.min_loss(source),
        ))
        if not reached:
            logger.warning(f"{strategy} never reached L_ref={l_ref:.6f}")
    return rows


def speedup_report(
    g_train: InteractionGraph,
    test: Optional[EvalSet],
    base_cfg: TrainConfig,
    strategies: Sequence[str],
    workers: int = 1,
) -> List[SpeedupRowModel]:
    """Rows in the order of ``strategies``; IID is trained even when not listed."""
    source = base_cfg.train.reference_loss
    order = list(dict.fromkeys(["iid", *strategies]))
    configs = [base_cfg.with_overrides(sampler={"strategy": st}) for st in order]
    results = _run_all(g_train, test, configs, workers)
    traces = dict(zip(order, results))
    logger.info(f"referenced loss L_ref={traces['iid'][0].min_loss(source):.6f} ({source})")
    return speedup_rows(traces, strategies, source)


def k_sweep(
    g_train: InteractionGraph,
    test: EvalSet,
    base_cfg: TrainConfig,
    ks: Sequence[int],
    seeds: Sequence[int],
    workers: int = 1,
) -> List[KSweepRowModel]:
    """Final recall@M of negative sampling for every (k, seed)."""
    grid = [(k, seed) for k in ks for seed in seeds]
    configs = [
        base_cfg.with_overrides(
            sampler={"strategy": "negative", "k": k, "seed": seed},
            train={"eval_every": base_cfg.train.epochs, "early_stopping": False},
            seed=seed,
        )
        for k, seed in grid
    ]
    results = _run_all(g_train, test, configs, workers)
    return [
        KSweepRowModel(k=k, seed=seed, recall=trace.final_recall)
        for (k, seed), (trace, _) in zip(grid, results)
    ]
