"""Safety-cage supervised DDPG vehicle following."""

from ._core import (
    ConfigError,
    CorruptCheckpoint,
    DomainError,
    EnvConfig,
    Environment,
    NonFiniteError,
    Observation,
    ShapeError,
    UsageError,
    adversary_reward,
    arbitrate,
    config_text,
    evaluate,
    policy_action,
    reward_headway,
    reward_total,
    run_cli,
    th_braking,
    time_headway,
    time_to_collision,
    train,
    ttc_braking,
)

__all__ = [
    "ConfigError",
    "CorruptCheckpoint",
    "DomainError",
    "EnvConfig",
    "Environment",
    "NonFiniteError",
    "Observation",
    "ShapeError",
    "UsageError",
    "adversary_reward",
    "arbitrate",
    "config_text",
    "evaluate",
    "policy_action",
    "reward_headway",
    "reward_total",
    "run_cli",
    "th_braking",
    "time_headway",
    "time_to_collision",
    "train",
    "ttc_braking",
]
