"""Multiagent RL orchestration: joint environments with per-seat projected
views, composable learning/static agents, dynamic training interactions
(self-play, round-robin, adaptation, ad-hoc pairing, cross-play), and an
asynchronous experiment service."""

from .agents import (
    AgentRole,
    LearningAgent,
    PartnerPool,
    RolloutBuffer,
    StaticPolicyAgent,
    Transition,
    freeze,
    next_partner,
)
from .env import (
    EnvRegistry,
    JointEnv,
    JointEnvSpec,
    JointStep,
    ProjectedView,
    project,
)
from .envs_builtin import make_builtin, optimal_return
from .learners import (
    Hyperparams,
    MlpParams,
    TableParams,
    UpdateReport,
    action_distribution,
    init_params,
    param_hash,
    returns_and_advantages,
    update,
    value_estimate,
)
from .metrics import MetricLog, MetricRow
from .orchestrator import (
    CrossPlayMatrix,
    EvalResult,
    SessionStats,
    TrainingSession,
    cross_play,
    evaluate,
    run_episode,
)
from .persistence import load_policy, load_trajectory, save_policy, save_trajectory
from .spaces import SpaceSpec, validate

__version__ = "0.1.0"

__all__ = [
    "AgentRole",
    "CrossPlayMatrix",
    "EnvRegistry",
    "EvalResult",
    "Hyperparams",
    "JointEnv",
    "JointEnvSpec",
    "JointStep",
    "LearningAgent",
    "MetricLog",
    "MetricRow",
    "MlpParams",
    "PartnerPool",
    "ProjectedView",
    "RolloutBuffer",
    "SessionStats",
    "SpaceSpec",
    "StaticPolicyAgent",
    "TableParams",
    "TrainingSession",
    "Transition",
    "UpdateReport",
    "action_distribution",
    "cross_play",
    "evaluate",
    "freeze",
    "init_params",
    "load_policy",
    "load_trajectory",
    "make_builtin",
    "next_partner",
    "optimal_return",
    "param_hash",
    "project",
    "returns_and_advantages",
    "run_episode",
    "save_policy",
    "save_trajectory",
    "update",
    "validate",
    "value_estimate",
]
