from pathlib import Path

import click
import numpy as np
from scipy import stats

from app.core.costs import cost_table
from app.core.gradcheck import ITEM_FNS, LOSSES, STRATEGY_SHAPES, raise_on_failure, run_gradcheck
from app.core.logger import get_logger
from app.core.samplers import Sampler, negative_item_counts
from app.core.tables import format_table, write_csv, write_jsonl
from app.schemas import STRATEGIES

from .common import CONFIG_COMMAND, load_graph, output_dir, resolve_config, write_resolved

logger = get_logger(__name__)

AUDIT_FILE = "audit.jsonl"
MAX_DUMP = 1000

commands = []


def _names(text: str, allowed, option: str):
    names = [part.strip() for part in text.split(",") if part.strip()]
    bad = [n for n in names if n not in allowed]
    if bad or not names:
        raise click.BadParameter(f"{bad or text!r}; choose from {', '.join(allowed)}", param_hint=option)
    return names


@click.command("cost-sim", context_settings=CONFIG_COMMAND)
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.option("--t-f", "t_f", type=float, default=1.0, show_default=True, help="cost of one user-function evaluation")
@click.option("--t-g", "t_g", type=float, default=1.0, show_default=True, help="cost of one item-function evaluation")
@click.option("--t-i", "t_i", type=float, default=0.0, show_default=True, help="cost of one interaction")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def cost_sim_cmd(ctx, config_path, t_f, t_g, t_i, csv_path):
    """Per-batch composition and predicted cost at sampler.b, sampler.k, sampler.s."""
    cfg = resolve_config(config_path, ctx.args)
    s = cfg.sampler
    rows = cost_table(s.b, s.k, s.s, t_f, t_g, t_i, STRATEGIES)
    click.echo(format_table(rows))
    if csv_path:
        write_csv(Path(csv_path), rows)


commands.append(cost_sim_cmd)


@click.command("gradcheck")
@click.option("--eps", type=float, default=1e-5, show_default=True)
@click.option("--tol", type=float, default=1e-4, show_default=True)
@click.option("--dim", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--item-fns", default=",".join(ITEM_FNS), show_default=True)
@click.option("--losses", default=",".join(LOSSES), show_default=True)
@click.option("--strategies", default=",".join(STRATEGY_SHAPES), show_default=True)
@click.option("--fault", default=None, hidden=True, help="parameter block whose analytic gradient is sign-flipped")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def gradcheck_cmd(eps, tol, dim, seed, item_fns, losses, strategies, fault, csv_path):
    """Finite-difference check of every item function x loss x strategy."""
    rows = run_gradcheck(
        _names(item_fns, ITEM_FNS, "--item-fns"),
        _names(losses, LOSSES, "--losses"),
        _names(strategies, tuple(STRATEGY_SHAPES), "--strategies"),
        eps=eps, tol=tol, dim=dim, seed=seed, fault=fault,
    )
    click.echo(format_table(rows))
    if csv_path:
        write_csv(Path(csv_path), rows)
    raise_on_failure(rows, tol)
    click.echo(f"all {len(rows)} checks below {tol:g}")


commands.append(gradcheck_cmd)


@click.command("sample-audit", context_settings=CONFIG_COMMAND)
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.option("--batches", type=int, default=10, show_default=True, help="batches drawn; at most 1000 are written")
@click.option("--chi2/--no-chi2", "chi2", default=False, help="test negative-item frequencies against P_n")
@click.pass_context
def sample_audit_cmd(ctx, config_path, batches, chi2):
    """Dump sampled batches as JSON lines; optionally a chi-square test of negatives."""
    if batches < 1:
        raise click.BadParameter("must be >= 1", param_hint="--batches")
    cfg = resolve_config(config_path, ctx.args)
    graph = load_graph(cfg)
    out = output_dir(cfg, f"audit-{cfg.sampler.strategy}-seed{cfg.seed}")
    write_resolved(cfg, out)

    sampler = Sampler(graph, cfg.sampler, cfg.noise)
    dumped = min(batches, MAX_DUMP)
    records = [b.to_record(i) for i, b in enumerate(sampler.batches(dumped))]
    write_jsonl(out / AUDIT_FILE, records)
    mean = {key: np.mean([getattr(r, key) for r in records]) for key in ("n_f", "n_g", "n_i_vec", "n_i_mat", "negatives")}
    click.echo("mean per batch: " + ", ".join(f"{k}={v:.2f}" for k, v in mean.items()))
    click.echo(f"wrote {dumped} batches to {out / AUDIT_FILE}")

    if chi2:
        fresh = Sampler(graph, cfg.sampler, cfg.noise)
        counts = negative_item_counts(fresh, batches)
        support = fresh.P_n.probs > 0
        observed = counts[support]
        expected = observed.sum() * fresh.P_n.probs[support]
        statistic, p_value = stats.chisquare(observed, expected)
        click.echo(
            f"chi2: statistic={statistic:.4f} dof={int(support.sum()) - 1} "
            f"p={p_value:.4g} negatives={int(observed.sum())}"
        )


commands.append(sample_audit_cmd)
