"""Active-inference simulation of 1D mouse point-and-click behaviour."""

from .agent import (
    AgentConfig,
    AgentPriors,
    TrialRecord,
    compensate_delay,
    reveal_target,
    run_trial,
)
from .beliefs import (
    DiscreteChannelModel,
    GaussianBelief,
    LogNormalBelief,
    NumericalDegeneracyError,
    UnscentedConfig,
    VIHyper,
    kl_gaussian,
    log_likelihood,
    sigma_points,
    ukf_predict,
    vi_update,
)
from .config import RunConfig, build_agent_config, build_task, config_hash, load_config
from .dynamics import (
    NoiseSpec,
    SystemParams,
    TaskSpec,
    observe,
    sample_observation,
    scale_task,
    step,
)
from .experiment import (
    EndpointStats,
    FittsFit,
    TargetSpec,
    endpoint_stats,
    fitts_fit,
    index_of_difficulty,
    movement_time,
    outlier_filter,
    reaction_time,
    run_grid,
    sweep,
    target_set,
)
from .planner import (
    PlannerConfig,
    PreferenceDistribution,
    information_gain,
    pragmatic_value,
    rollout,
    sample_plans,
    select_action,
)

__version__ = "0.1.0"
