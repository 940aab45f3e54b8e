"""
Helpers shared by the command modules: dotted-key config resolution, output
directories and dataset loading.
"""
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click
from dotenv import dotenv_values

from app.core.config import settings
from app.core.errors import ConfigError
from app.core.graph import Holdout, InteractionGraph, ingest_links, split_holdout
from app.core.logger import get_logger
from app.schemas import RunConfig

logger = get_logger(__name__)

RESOLVED_FILE = "config.resolved"

# every command taking --section.key=value overrides
CONFIG_COMMAND = dict(ignore_unknown_options=True, allow_extra_args=True)


def parse_overrides(args: Sequence[str]) -> Dict[str, str]:
    """``--sampler.b=512`` and ``--sampler.b 512`` into ``{"sampler.b": "512"}``."""
    flat: Dict[str, str] = {}
    tokens = list(args)
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--") or len(token) == 2:
            raise ConfigError(f"unexpected argument '{token}'")
        key, sep, value = token[2:].partition("=")
        if not sep:
            if i + 1 >= len(tokens) or tokens[i + 1].startswith("--"):
                raise ConfigError(f"missing value for '{key}'", key=key)
            value = tokens[i + 1]
            i += 1
        flat[key] = value
        i += 1
    return flat


def resolve_config(config_path: Optional[str], args: Sequence[str]) -> RunConfig:
    """Config file entries first, command-line overrides on top."""
    flat: Dict[str, str] = {}
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found", key="config")
        flat.update({k: v for k, v in dotenv_values(path).items() if v is not None})
    flat.update(parse_overrides(args))
    return RunConfig.from_flat(flat)


def output_dir(cfg: RunConfig, default_name: str) -> Path:
    """``NCF_OUTPUT_ROOT`` joined with ``output`` (absolute paths win)."""
    out = Path(settings.NCF_OUTPUT_ROOT) / (cfg.output or default_name)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_resolved(cfg: RunConfig, out: Path):
    lines = [f"{k}={v}" for k, v in cfg.flatten().items()]
    (out / RESOLVED_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_graph(cfg: RunConfig) -> InteractionGraph:
    if not cfg.data.links:
        raise ConfigError("no interaction file given; set data.links", key="data.links")
    if not Path(cfg.data.links).is_file():
        raise ConfigError(f"links file {cfg.data.links} not found", key="data.links")
    return ingest_links(
        cfg.data.links, cfg.data.num_users, cfg.data.num_items, cfg.data.features
    )


def load_holdout(cfg: RunConfig) -> Holdout:
    return split_holdout(load_graph(cfg), cfg.split)


def show_progress(ctx: click.Context) -> bool:
    quiet = (ctx.find_root().obj or {}).get("quiet", False)
    return not quiet and sys.stderr.isatty()


def parse_int_list(text: str, name: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got '{text}'", key=name) from None
    if not values:
        raise ConfigError("list is empty", key=name)
    return values
