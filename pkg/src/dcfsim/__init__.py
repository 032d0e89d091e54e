"""dcfsim: deterministic discrete-event simulator of Wi-Fi DCF contention.

Three backoff policies behind one interface (binary exponential,
deterministic, token-ordered), a propagation/capture PHY model, scenario
generators and a CSV/JSON metrics pipeline.
"""

__version__ = "0.1.0"

from .backoff import (BackoffDraw, ContentionState, PolicyParams, beb_backoff,
                      db_backoff, iyt_backoff, iyt_on_tx_end, iyt_on_tx_start)
from .config import RunConfig, load_config
from .engine import Event, EventKind, Simulator
from .mac import MacTimings, Outcome, TxAttempt, TxopPlan, plan_txop
from .metrics import MetricRecord, SummaryStats, loss_percentage, summarize
from .phy import PathLossParams, RadioConfig, cca_busy, decodable, path_loss, rx_power, sinr
from .scenario import Deployment, ExperimentSpec, gen_grid, gen_overlap, gen_toy, validate
from .simulation import RunResult, Simulation, run_deployment
