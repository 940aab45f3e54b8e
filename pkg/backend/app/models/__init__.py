from .audit_record import *  # noqa
from .cost_row import *  # noqa
from .epoch_record import *  # noqa
from .gradcheck_row import *  # noqa
from .ledger_snapshot import *  # noqa
from .recall_row import *  # noqa
from .speedup_row import *  # noqa
from .timing_record import *  # noqa
