import click
import numpy as np

from app.core.graph import split_holdout, write_features, write_links
from app.core.logger import get_logger
from app.core.synth import degree_slope, synth_graph

from .common import (
    CONFIG_COMMAND,
    load_graph,
    output_dir,
    resolve_config,
    write_resolved,
)

logger = get_logger(__name__)

LINKS_FILE = "links.tsv"
FEATURES_FILE = "features.tsv"
TRAIN_FILE = "train.tsv"
TEST_FILE = "test.tsv"
POOL_FILE = "test_pool.txt"
DATA_CONFIG = "data.conf"

commands = []


def _echo_stats(graph):
    for key, value in graph.stats().items():
        click.echo(f"{key}: {value:.6g}" if isinstance(value, float) else f"{key}: {value}")


@click.command("ingest", context_settings=CONFIG_COMMAND)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="flat key=value config file")
@click.pass_context
def ingest(ctx, config_path):
    """Load data.links (and data.features) and print dataset statistics."""
    cfg = resolve_config(config_path, ctx.args)
    graph = load_graph(cfg)
    _echo_stats(graph)
    click.echo(f"degree_slope: {degree_slope(graph.item_degree):.4f}")


commands.append(ingest)


@click.command("split", context_settings=CONFIG_COMMAND)
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.pass_context
def split(ctx, config_path):
    """Hold out split.test_item_fraction of the items with all their links."""
    cfg = resolve_config(config_path, ctx.args)
    graph = load_graph(cfg)
    holdout = split_holdout(graph, cfg.split)
    out = output_dir(cfg, f"split-seed{cfg.split.seed}")
    write_links(holdout.train, out / TRAIN_FILE)
    write_links(holdout.test_links, out / TEST_FILE)
    np.savetxt(out / POOL_FILE, holdout.test_pool, fmt="%d")
    if graph.item_features is not None:
        write_features(graph, out / FEATURES_FILE)
    write_resolved(cfg, out)
    click.echo(
        f"train links: {holdout.train.num_links}, test items: {holdout.test_pool.size}, "
        f"test links: {holdout.test_links.num_links} -> {out}"
    )


commands.append(split)


@click.command("synth", context_settings=CONFIG_COMMAND)
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.pass_context
def synth(ctx, config_path):
    """Write a power-law synthetic graph with token bags (synth.* keys)."""
    cfg = resolve_config(config_path, ctx.args)
    spec = cfg.synth
    graph = synth_graph(
        spec.num_users, spec.num_items, spec.target_links, spec.degree_exponent, spec.seed,
        rank=spec.rank, vocab=spec.vocab, mean_bag=spec.mean_bag,
    )
    out = output_dir(cfg, f"synth-seed{spec.seed}")
    write_links(graph, out / LINKS_FILE)
    write_features(graph, out / FEATURES_FILE)
    # node counts pinned so trailing zero-degree ids survive re-ingestion
    (out / DATA_CONFIG).write_text(
        f"data.links={(out / LINKS_FILE).resolve()}\n"
        f"data.features={(out / FEATURES_FILE).resolve()}\n"
        f"data.num_users={graph.num_users}\n"
        f"data.num_items={graph.num_items}\n",
        encoding="utf-8",
    )
    write_resolved(cfg, out)
    _echo_stats(graph)
    click.echo(f"degree_slope: {degree_slope(graph.item_degree):.4f}")
    click.echo(f"wrote {out / LINKS_FILE}, {out / FEATURES_FILE} and {out / DATA_CONFIG}")


commands.append(synth)
