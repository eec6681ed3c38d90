"""Contextual bandits for piecewise-stationary rewards.

Sliding-window change detection layered on linear UCB policies (per-arm and
shared-interaction variants), plus synthetic piecewise-stationary
environments, offline replay evaluation, and experiment orchestration.
"""

__version__ = "0.1.0"

from .errors import (
    BanditError,
    ConfigError,
    ContractError,
    ExperimentError,
    LogParseError,
    NumericError,
)
from .features import ContextEvent, arm_cross_features, cross_feature
from .ridge import RidgeState
from .hybrid import (
    HybridArmState,
    HybridGlobalState,
    confidence_terms,
    detach_arm,
    hybrid_observe,
    hybrid_solve,
)
from .detection import (
    SlidingWindow,
    estimation_threshold,
    noise_threshold,
    residual_statistic,
    split_window_statistic,
)
from .policies import (
    LinUCBDisjoint,
    LinUCBHybrid,
    LinUCBUniform,
    Policy,
    PSLinUCBDisjoint,
    PSLinUCBGlobalRestart,
    PSLinUCBHybrid,
    RandomPolicy,
    UCB1,
    theory_alpha,
    theory_explore_rate,
)
from .environment import (
    DisjointEnvironment,
    DisjointEnvSpec,
    HybridEnvironment,
    HybridEnvSpec,
    RunRecord,
    run_policy,
    sample_unit_ball,
)
from .replay import (
    LoggedEvent,
    ReplayResult,
    export_log,
    load_log,
    replay_evaluate,
    write_log,
)
from .seeding import label_entropy, stream_seed
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    POLICY_REGISTRY,
    PolicyAggregate,
    PolicySpec,
    SweepResult,
    SWEEP_AXES,
    build_env_spec,
    make_policy,
    run_experiment,
    run_sweep,
)

__all__ = [
    "__version__",
    "BanditError",
    "ConfigError",
    "ContractError",
    "ExperimentError",
    "LogParseError",
    "NumericError",
    "ContextEvent",
    "arm_cross_features",
    "cross_feature",
    "RidgeState",
    "HybridArmState",
    "HybridGlobalState",
    "confidence_terms",
    "detach_arm",
    "hybrid_observe",
    "hybrid_solve",
    "SlidingWindow",
    "estimation_threshold",
    "noise_threshold",
    "residual_statistic",
    "split_window_statistic",
    "Policy",
    "LinUCBDisjoint",
    "LinUCBHybrid",
    "LinUCBUniform",
    "PSLinUCBDisjoint",
    "PSLinUCBGlobalRestart",
    "PSLinUCBHybrid",
    "RandomPolicy",
    "UCB1",
    "theory_alpha",
    "theory_explore_rate",
    "DisjointEnvironment",
    "DisjointEnvSpec",
    "HybridEnvironment",
    "HybridEnvSpec",
    "RunRecord",
    "run_policy",
    "sample_unit_ball",
    "LoggedEvent",
    "ReplayResult",
    "export_log",
    "load_log",
    "replay_evaluate",
    "write_log",
    "label_entropy",
    "stream_seed",
    "ExperimentConfig",
    "ExperimentResult",
    "POLICY_REGISTRY",
    "PolicyAggregate",
    "PolicySpec",
    "SweepResult",
    "SWEEP_AXES",
    "build_env_spec",
    "make_policy",
    "run_experiment",
    "run_sweep",
]
