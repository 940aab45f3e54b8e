"""
Training loop: sample -> forward -> score -> loss -> backward -> step.

Wall time covers each training step (sampling, forward, loss, backward and
the optimizer update); evaluation, the optional full-objective pass and I/O
are outside the clock. The trace file carries only deterministic fields so
repeated serial runs are byte-identical; timings go to their own file.
"""
import csv
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, NamedTuple, Optional

import numpy as np
from tqdm import tqdm

from app.models import EpochRecordModel, TimingRecordModel
from app.schemas import TrainConfig

from .checkpoint import save_checkpoint
from .embeddings import EmbeddingModel
from .errors import DegenerateBatchWarning, DivergenceError, EmptyGraphError
from .evaluation import recall_at_m
from .graph import InteractionGraph
from .ledger import CostLedger
from .logger import get_logger
from .losses import batch_objective, full_objective
from .optim import build_optimizer
from .samplers import Sampler, check_combination
from .tables import write_jsonl

logger = get_logger(__name__)

TRACE_FILE = "trace.jsonl"
TIMING_FILE = "timing.jsonl"
SUMMARY_FILE = "summary.csv"
CHECKPOINT_FILE = "model.ckpt"


class EvalSet(NamedTuple):
    pool: np.ndarray
    links: InteractionGraph


@dataclass
class RunTrace:
    strategy: str
    records: List[EpochRecordModel] = field(default_factory=list)
    timings: List[TimingRecordModel] = field(default_factory=list)
    stopped_early: bool = False

    def losses(self, source: str = "batch") -> np.ndarray:
        if source == "full":
            return np.array([r.full_loss for r in self.records], dtype=np.float64)
        return np.array([r.train_loss for r in self.records], dtype=np.float64)

    def min_loss(self, source: str = "batch") -> float:
        return float(np.min(self.losses(source)))

    def batches_to_reach(self, target: float, source: str = "batch") -> Optional[int]:
        """Cumulative batches at the first epoch whose loss is <= target."""
        for record, loss in zip(self.records, self.losses(source)):
            if loss <= target:
                return record.batches
        return None

    @property
    def seconds_per_batch(self) -> float:
        last = self.timings[-1]
        return last.wall_seconds / max(last.batches, 1)

    @property
    def final_recall(self) -> Optional[float]:
        recalls = [r.recall for r in self.records if r.recall is not None]
        return recalls[-1] if recalls else None


@dataclass
class TrainResult:
    model: EmbeddingModel
    trace: RunTrace
    ledger: CostLedger
    sampler: Sampler


def _grad_norm(grads) -> float:
    return float(np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values())))


def train(
    g_train: InteractionGraph,
    test: Optional[EvalSet],
    cfg: TrainConfig,
    progress: bool = False,
) -> TrainResult:
    check_combination(cfg.sampler.strategy, cfg.loss.kind)
    if g_train.num_links == 0:
        raise EmptyGraphError("training graph has no links")
    opts = cfg.train

    model = EmbeddingModel(
        g_train.num_users, g_train.num_items, cfg.model, g_train.item_features,
        seed=cfg.seed, g_cost_multiplier=opts.g_cost_multiplier,
    )
    sampler = Sampler(g_train, cfg.sampler, cfg.noise)
    optimizer = build_optimizer(model.params, cfg.optimizer, cfg.lr)
    ledger = CostLedger()
    trace = RunTrace(strategy=cfg.sampler.strategy)
    logger.info(
        f"training {cfg.sampler.strategy}/{cfg.loss.kind} on {g_train}: "
        f"b={cfg.sampler.b} k={cfg.sampler.k} s={cfg.sampler.s} lr={cfg.lr} "
        f"item_fn={cfg.model.item_fn} dtype={cfg.model.dtype}"
    )

    best_recall, stale = -np.inf, 0
    for epoch in range(1, opts.epochs + 1):
        plan = sampler.plan()
        loss_sum, pos_sum, max_norm = 0.0, 0, 0.0
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateBatchWarning)
            for n in tqdm(range(len(plan)), desc=f"epoch {epoch}", disable=not progress, leave=False):
                start = time.perf_counter()
                batch = sampler.next_batch(plan)
                loss, acts = batch_objective(model, batch, cfg.loss, opts.weight_decay)
                norm = _grad_norm(model.grads)
                if not (np.isfinite(loss) and np.isfinite(norm)):
                    raise DivergenceError(
                        f"epoch {epoch} batch {n}: loss={loss} grad_norm={norm} "
                        f"(strategy={cfg.sampler.strategy}, loss={cfg.loss.kind}, lr={cfg.lr}); "
                        "try a smaller learning rate or lam"
                    )
                optimizer.step(model.grads)
                ledger.add_time(time.perf_counter() - start)
                ledger.record(batch, acts)
                loss_sum += loss * batch.num_pos
                pos_sum += batch.num_pos
                max_norm = max(max_norm, norm)
        degenerate = sum(1 for w in caught if issubclass(w.category, DegenerateBatchWarning))
        if degenerate:
            logger.warning(f"epoch {epoch}: {degenerate} degenerate batch(es)")
        ledger.end_epoch()

        full_loss = None
        if opts.reference_loss == "full":
            full_loss, _ = full_objective(model, g_train, sampler.P_n, cfg.loss)
        recall = None
        if test is not None and opts.eval_every and epoch % opts.eval_every == 0:
            recall = recall_at_m(model, test.pool, test.links, cfg.eval.M).mean

        record = EpochRecordModel(
            epoch=epoch,
            batches=ledger.batches,
            train_loss=loss_sum / max(pos_sum, 1),
            full_loss=full_loss,
            recall=recall,
            max_grad_norm=max_norm,
            degenerate_batches=degenerate,
            ledger=ledger.snapshot(),
        )
        trace.records.append(record)
        trace.timings.append(TimingRecordModel(
            epoch=epoch,
            batches=ledger.batches,
            wall_seconds=ledger.wall_seconds,
            seconds_per_batch=ledger.wall_seconds / max(ledger.batches, 1),
            dtype=cfg.model.dtype,
        ))
        logger.info(
            f"epoch {epoch}: loss={record.train_loss:.6f}"
            + (f" full={full_loss:.6f}" if full_loss is not None else "")
            + (f" recall@{cfg.eval.M}={recall:.4f}" if recall is not None else "")
            + f" n_g={ledger.n_g} t={ledger.wall_seconds:.2f}s"
        )

        if opts.early_stopping and recall is not None:
            if recall > best_recall:
                best_recall, stale = recall, 0
            else:
                stale += 1
                if stale >= opts.patience:
                    logger.info(f"early stop after epoch {epoch}: no recall gain in {stale} evals")
                    trace.stopped_early = True
                    break

    return TrainResult(model=model, trace=trace, ledger=ledger, sampler=sampler)


def write_run(out_dir, result: TrainResult):
    """trace.jsonl, timing.jsonl, summary.csv and the checkpoint."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / TRACE_FILE, result.trace.records)
    write_jsonl(out / TIMING_FILE, result.trace.timings)
    fields = [
        "epoch", "batches", "train_loss", "full_loss", "recall", "max_grad_norm",
        "n_f", "n_g", "n_i_vec", "n_i_mat",
    ]
    with open(out / SUMMARY_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in result.trace.records:
            row = r.model_dump(include=set(fields))
            row.update(r.ledger.model_dump(include={"n_f", "n_g", "n_i_vec", "n_i_mat"}))
            writer.writerow(row)
    save_checkpoint(result.model, out / CHECKPOINT_FILE)
    logger.info(f"wrote run artifacts to {out}")
