"""Age-of-Information scheduling laboratory.

Slotted-time simulator for single-hop broadcast networks where sources emit
multi-packet updates over unreliable channels, together with the scheduling
policies, closed-form performance expressions, a no-switching-policy
optimizer, and an experiment harness with a CLI.
"""

from .analysis import (
    BoundReport,
    NsrpMoments,
    bound_report,
    lower_bound,
    nsrp_ewsaoi,
    nsrp_moments,
    optimal_srp,
    optimal_srp_ewsaoi,
    q_lb,
    rho_mw,
    rho_srp,
    srp_ewsaoi,
)
from .errors import ConfigurationError, InvariantError, OptimizerError
from .model import (
    Decision,
    DeliveryEvent,
    DeliveryKind,
    GenerationMode,
    IDLE,
    NetworkState,
    SourceParams,
    SourceState,
    advance_slot,
    init_state,
    transmit,
    weighted_aoi,
)
from .optimizer import OptimizerSettings, numeric_gradient, optimize_nsrp, project_simplex
from .policies import (
    FixedSchedule,
    Greedy,
    MaxWeight,
    Mwl1,
    MwIndex,
    Nsrp,
    PolicySpec,
    Srp,
    fixed_schedule_decide,
    greedy_decide,
    mw_decide,
    mw_default_config,
    mw_index,
    mwl1_decide,
    nsrp_decide,
    srp_decide,
    table1_schedules,
)
from .simulation import (
    Metrics,
    ReplicationSummary,
    SimConfig,
    reconstruct_prop1,
    run_episode,
    run_replications,
)

__version__ = "0.1.0"
