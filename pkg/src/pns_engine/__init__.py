"""Reward orchestration for plausible-negative-sample synthesis.

The package scores model responses through a gated, auditable reward stack
(structural rules, an LLM judge, answer verification, a bucketed reward
model score, and a reasoning-quality aggregate), builds preference pairs
from the scored streams, and ships desk-scale trainers and a reverse-RL
simulator for studying the resulting incentives.
"""

from .config import (
    DEFAULT_BUCKETS,
    BackendConfig,
    ConfigError,
    EngineConfig,
    PnsConfig,
    RetryPolicy,
    SimulationConfig,
    load_config,
)
from .engine import StageFailure, score_response, structure_report
from .judges import (
    parse_cot_scores,
    parse_error_label,
    parse_judge_verdict,
)
from .metrics import pairwise_accuracy, wasserstein_1d
from .parsing import check_structure, extract_final_answer, parse_response
from .rewards import (
    check_breakdown,
    clip_bucket_normalize,
    compose_reward,
    cot_score,
    format_score,
    group_advantages,
    pns_reward,
    reward_bounds,
)
from .types import (
    ConstraintReport,
    CotScores,
    GroundTruth,
    JudgeVerdict,
    ParsedResponse,
    PreferencePair,
    RawResponse,
    RewardBreakdown,
)
from .verification import accuracy_score, answers_equivalent, normalize_answer

__version__ = "0.1.0"

__all__ = [
    "BackendConfig",
    "ConfigError",
    "ConstraintReport",
    "CotScores",
    "DEFAULT_BUCKETS",
    "EngineConfig",
    "GroundTruth",
    "JudgeVerdict",
    "ParsedResponse",
    "PnsConfig",
    "PreferencePair",
    "RawResponse",
    "RetryPolicy",
    "RewardBreakdown",
    "SimulationConfig",
    "StageFailure",
    "accuracy_score",
    "answers_equivalent",
    "check_breakdown",
    "check_structure",
    "clip_bucket_normalize",
    "compose_reward",
    "cot_score",
    "extract_final_answer",
    "format_score",
    "group_advantages",
    "load_config",
    "normalize_answer",
    "pairwise_accuracy",
    "parse_cot_scores",
    "parse_error_label",
    "parse_judge_verdict",
    "parse_response",
    "pns_reward",
    "reward_bounds",
    "score_response",
    "structure_report",
    "wasserstein_1d",
    "__version__",
]
