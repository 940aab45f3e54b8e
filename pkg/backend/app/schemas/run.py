from typing import Any, Dict, Mapping, Optional

from pydantic import Field

from app.core.errors import ConfigError

from .split import SplitSpec
from .train import DataSpec, SynthSpec, TrainConfig


class RunConfig(TrainConfig):
    data: DataSpec = Field(default_factory=DataSpec)
    split: SplitSpec = Field(default_factory=SplitSpec)
    synth: SynthSpec = Field(default_factory=SynthSpec)
    output: Optional[str] = None

    @classmethod
    def from_flat(cls, flat: Mapping[str, Any]) -> "RunConfig":
        """Build from dotted ``section.key`` entries (``sampler.b=512``)."""
        return cls(**unflatten(flat))

    def train_config(self) -> TrainConfig:
        data = self.model_dump(include=set(TrainConfig.model_fields))
        return TrainConfig(**data)

    def flatten(self) -> Dict[str, str]:
        return flatten(self.model_dump())


def unflatten(flat: Mapping[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        if value is None or value == "":
            continue  # unset
        parts = key.strip().split(".")
        if not all(parts):
            raise ConfigError(f"malformed key '{key}'", key=key)
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"'{part}' is a value, not a section", key=key)
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f"'{key}' is a section, not a value", key=key)
        node[parts[-1]] = value
    return nested


def flatten(nested: Mapping[str, Any], prefix: str = "") -> Dict[str, str]:
    flat: Dict[str, str] = {}
    for key, value in nested.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, prefix=f"{name}."))
        else:
            flat[name] = "" if value is None else str(value)
    return dict(sorted(flat.items()))
