from .base import *  # noqa
from .split import *  # noqa
from .noise import *  # noqa
from .sampler import *  # noqa
from .loss import *  # noqa
from .model import *  # noqa
from .optimizer import *  # noqa
from .eval import *  # noqa
from .train import *  # noqa
from .run import *  # noqa
