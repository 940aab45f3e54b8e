from collections import defaultdict
from pathlib import Path

import click
import numpy as np

from app.core.checkpoint import load_checkpoint
from app.core.config import settings
from app.core.errors import ConfigError
from app.core.evaluation import recall_at_m, write_recall_csv
from app.core.logger import get_logger
from app.core.samplers import check_combination
from app.core.speedup import k_sweep, speedup_report
from app.core.tables import format_table, write_csv
from app.core.trainer import CHECKPOINT_FILE, EvalSet, train, write_run
from app.schemas import STRATEGIES

from .common import (
    CONFIG_COMMAND,
    load_holdout,
    output_dir,
    parse_int_list,
    resolve_config,
    show_progress,
    write_resolved,
)

logger = get_logger(__name__)

RECALL_FILE = "recall.csv"
SPEEDUP_FILE = "speedup.csv"
K_SWEEP_FILE = "k_sweep.csv"

commands = []


@click.command("train", context_settings=CONFIG_COMMAND)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="flat key=value config file")
@click.pass_context
def train_cmd(ctx, config_path):
    """Train one model; any config key can be overridden as --section.key=value."""
    cfg = resolve_config(config_path, ctx.args)
    check_combination(cfg.sampler.strategy, cfg.loss.kind)
    holdout = load_holdout(cfg)
    out = output_dir(cfg, f"{cfg.sampler.strategy}-{cfg.loss.kind}-seed{cfg.seed}")
    write_resolved(cfg, out)

    result = train(
        holdout.train,
        EvalSet(holdout.test_pool, holdout.test_links),
        cfg.train_config(),
        progress=show_progress(ctx),
    )
    write_run(out, result)
    last = result.trace.records[-1]
    msg = f"epochs: {last.epoch}, batches: {last.batches}, train_loss: {last.train_loss:.6f}"
    if result.trace.final_recall is not None:
        msg += f", recall@{cfg.eval.M}: {result.trace.final_recall:.4f}"
    click.echo(f"{msg} -> {out}")


commands.append(train_cmd)


@click.command("eval", context_settings=CONFIG_COMMAND)
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(), help="checkpoint file or run directory")
@click.pass_context
def eval_cmd(ctx, config_path, checkpoint_path):
    """recall@M of a checkpoint on the held-out items (same split keys as training)."""
    cfg = resolve_config(config_path, ctx.args)
    path = Path(checkpoint_path)
    if path.is_dir():
        path = path / CHECKPOINT_FILE
    if not path.is_file():
        raise ConfigError(f"checkpoint {path} not found", key="checkpoint")
    holdout = load_holdout(cfg)
    model = load_checkpoint(path, holdout.train.item_features)
    if (model.num_users, model.num_items) != (holdout.train.num_users, holdout.train.num_items):
        raise ConfigError(
            f"checkpoint is {model.num_users}x{model.num_items}, data is "
            f"{holdout.train.num_users}x{holdout.train.num_items}",
            key="data.links",
        )
    result = recall_at_m(model, holdout.test_pool, holdout.test_links, cfg.eval.M)
    out = output_dir(cfg, f"eval-seed{cfg.split.seed}")
    write_recall_csv(out / RECALL_FILE, result)
    click.echo(f"recall@{cfg.eval.M}: {result.mean:.4f} over {result.users.size} users -> {out / RECALL_FILE}")


commands.append(eval_cmd)


@click.command("speedup-report", context_settings=CONFIG_COMMAND)
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.option("--strategies", default=",".join(STRATEGIES), show_default=True,
              help="comma-separated strategies, reported in this order")
@click.option("--k-sweep", "k_values", default=None, help="comma-separated k values for negative sampling")
@click.option("--seeds", default="0", show_default=True, help="seeds for --k-sweep")
@click.option("--workers", type=int, default=None, help="worker processes (NCF_WORKERS)")
@click.pass_context
def speedup_cmd(ctx, config_path, strategies, k_values, seeds, workers):
    """Train every strategy to IID's best loss and compare time and iterations."""
    cfg = resolve_config(config_path, ctx.args)
    order = [s.strip() for s in strategies.split(",") if s.strip()]
    unknown = [s for s in order if s not in STRATEGIES]
    if unknown or not order:
        raise ConfigError(f"unknown strategies {unknown}; choose from {list(STRATEGIES)}", key="strategies")
    for strategy in ("iid", *order):
        check_combination(strategy, cfg.loss.kind)
    workers = settings.NCF_WORKERS if workers is None else workers

    holdout = load_holdout(cfg)
    test = EvalSet(holdout.test_pool, holdout.test_links)
    out = output_dir(cfg, f"speedup-{cfg.loss.kind}-seed{cfg.seed}")
    write_resolved(cfg, out)

    rows = speedup_report(holdout.train, test, cfg.train_config(), order, workers=workers)
    write_csv(out / SPEEDUP_FILE, rows)
    click.echo(format_table(rows))

    if k_values:
        ks = parse_int_list(k_values, "k-sweep")
        seed_list = parse_int_list(seeds, "seeds")
        sweep = k_sweep(holdout.train, test, cfg.train_config(), ks, seed_list, workers=workers)
        write_csv(out / K_SWEEP_FILE, sweep)
        by_k = defaultdict(list)
        for row in sweep:
            by_k[row.k].append(row.recall)
        for k in ks:
            click.echo(f"k={k}: mean recall@{cfg.eval.M} = {np.mean(by_k[k]):.4f}")
    click.echo(f"wrote {out}")


commands.append(speedup_cmd)
