"""Desk-scale autonomous practicing.

A planar multi-element manipulation simulator, play-style demonstration
tooling, a demonstration-derived task graph for sequencing goals, and
goal-conditioned offline-to-online RL that practices tasks back to back with
only occasional external resets.
"""

from .env import (
    Action,
    ElementSpec,
    EnvConfig,
    GoalOfInterest,
    SimState,
    default_config,
    discretize,
    goal_catalog,
    reset,
    reward,
    snap_to_goal,
    step,
)
from .demos import (
    DemoCorpus,
    DemoStep,
    LabeledTransition,
    ingest,
    oracle_policy,
    save_demos,
    scripted_play,
    to_transitions,
    transition_heatmap,
)
from .graph import (
    GoalDensity,
    GoalPath,
    TaskGraph,
    build_graph,
    dijkstra,
    entropy,
    long_horizon_next,
    practice_goal_select,
)
from .rl import (
    PolicyParams,
    ReplayBuffer,
    TrainConfig,
    actor_update,
    advantage,
    bc_update,
    critic_update,
    init_params,
    load_checkpoint,
    policy_sample,
    pretrain,
    save_checkpoint,
)
from .practice import (
    BCHighLevel,
    PracticeConfig,
    PracticeLog,
    bc_high_level_train,
    practice,
    select_high_level,
)
from .bench import (
    EvalMetrics,
    LongHorizonTask,
    chain_mdp_experiment,
    eval_long_horizon,
    export_metrics,
    idealized_path_length,
    invert_all_tasks,
    reset_ablation,
)

__version__ = "0.1.0"
