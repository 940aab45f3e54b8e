from pydantic import BaseModel, ConfigDict, ValidationError

from app.core.errors import ConfigError


def config_error_from(exc: ValidationError, prefix: str = "") -> ConfigError:
    """First validation problem as a ConfigError naming the dotted key."""
    err = exc.errors()[0]
    key = ".".join(str(part) for part in err.get("loc", ()) if part != "__root__")
    if prefix:
        key = f"{prefix}.{key}" if key else prefix
    msg = err.get("msg", "invalid value")
    if err.get("type") == "extra_forbidden":
        return ConfigError(f"unknown key '{key}'", key=key)
    if not key:
        return ConfigError(msg)
    return ConfigError(f"invalid value for '{key}': {msg}", key=key)


class Spec(BaseModel):
    """Base for every input spec: unknown keys rejected, errors as ConfigError."""

    model_config = ConfigDict(extra="forbid")

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as exc:
            raise config_error_from(exc) from None

    # nested sections validate in pydantic-core without this __init__, so
    # only the outermost call converts and the key keeps its section prefix
    __init__.__pydantic_base_init__ = True
