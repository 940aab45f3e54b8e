import logging
import sys

from .config import settings

_FORMAT = "[%(asctime)s] {%(filename)s:%(lineno)d} %(levelname)s - %(message)s"
_configured = False


def _configure_root():
    global _configured
    if _configured:
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT))
    root = logging.getLogger("app")
    root.addHandler(handler)
    root.setLevel(settings.NCF_LOG_LEVEL.upper())
    root.propagate = False
    _configured = True


def get_logger(name: str = "app") -> logging.Logger:
    """Logger under the ``app`` hierarchy with the shared stderr handler."""
    _configure_root()
    if not name.startswith("app"):
        name = f"app.{name}"
    return logging.getLogger(name)


def set_level(level: str):
    _configure_root()
    logging.getLogger("app").setLevel(level.upper())
