"""Reward composition: gating, bucketing, aggregation, group advantages.

The final scalar follows a three-case scheme. With the format gate open and
the answer wrong, the response is exactly the kind of plausible negative
being hunted, so it earns the base bounty plus weighted credit for reward
model score and reasoning quality. With the gate open but the answer right,
only the quality term survives (no bounty, no RM credit). With the gate
closed the reward is -1 regardless of anything else.
"""

from __future__ import annotations

import math

import numpy as np

from .config import PnsConfig
from .types import CotScores, RewardBreakdown


def format_score(r_rule: int, r_judge: int) -> int:
    """Product of the rule gate and the judge gate."""
    if r_rule not in (0, 1) or r_judge not in (0, 1):
        raise ValueError("format_score inputs must be binary")
    return r_rule * r_judge


def clip_bucket_normalize(raw: float, cfg: PnsConfig) -> float:
    """Clip to [s_min, s_max], snap to the nearest bucket, map to [0, 1].

    Ties (a clipped score equidistant from two boundaries) resolve to the
    boundary nearer zero, then to the smaller boundary. Normalization is
    (bucket - s_min) / (s_max - s_min), so the result spans [0, 1] exactly
    when the grid touches both ends.
    """
    if not math.isfinite(raw):
        raise ValueError("raw score must be finite")
    clipped = min(max(raw, cfg.s_min), cfg.s_max)
    bucket = min(cfg.buckets, key=lambda b: (abs(clipped - b), abs(b), b))
    return (bucket - cfg.s_min) / (cfg.s_max - cfg.s_min)


def cot_score(scores: CotScores) -> float:
    """Mean of the four 0..3 dimensions rescaled to [0, 1]: sum / 12."""
    return scores.total() / 12.0


def compose_reward(r_format: int, r_acc: int, rm_norm: float, r_cot: float,
                   cfg: PnsConfig) -> float:
    """The three-case scalar from already-computed components."""
    if r_format not in (0, 1) or r_acc not in (0, 1):
        raise ValueError("r_format and r_acc must be binary")
    if not 0.0 <= rm_norm <= 1.0:
        raise ValueError("rm_norm must lie in [0, 1]")
    if not 0.0 <= r_cot <= 1.0:
        raise ValueError("r_cot must lie in [0, 1]")
    if r_format == 0:
        return -1.0
    if r_acc == 0:
        return 1.0 + cfg.lambda_r * rm_norm + cfg.lambda_c * r_cot
    return cfg.lambda_c * r_cot


def pns_reward(breakdown: RewardBreakdown, cfg: PnsConfig) -> float:
    """Recompute the scalar from a breakdown's components."""
    return compose_reward(breakdown.r_format, breakdown.r_acc,
                          breakdown.rm_norm, breakdown.r_cot, cfg)


def reward_bounds(cfg: PnsConfig) -> tuple[float, float]:
    """Attainable range of the scalar: [-1, 1 + lambda_r + lambda_c]."""
    return (-1.0, 1.0 + cfg.lambda_r + cfg.lambda_c)


def check_breakdown(breakdown: RewardBreakdown, cfg: PnsConfig,
                    tol: float = 1e-12) -> None:
    """Assert a breakdown is internally consistent by recomputation.

    Checks the gate product, the quality aggregate, the normalized RM score
    (when the raw score is finite) and the final scalar. Raises ValueError
    with the first mismatch found.
    """
    if breakdown.r_format != breakdown.r_rule * breakdown.r_judge:
        raise ValueError("r_format does not equal r_rule * r_judge")
    expected_cot = sum(breakdown.cot_dims) / 12.0
    if abs(breakdown.r_cot - expected_cot) > tol:
        raise ValueError("r_cot does not match its dimensions")
    expected_norm = clip_bucket_normalize(breakdown.rm_raw, cfg)
    if abs(breakdown.rm_norm - expected_norm) > tol:
        raise ValueError("rm_norm does not match clip/bucket/normalize of rm_raw")
    expected = compose_reward(breakdown.r_format, breakdown.r_acc,
                              breakdown.rm_norm, breakdown.r_cot, cfg)
    if abs(breakdown.r_pns - expected) > tol:
        raise ValueError("r_pns does not match its components")
    lo, hi = reward_bounds(cfg)
    if not lo - tol <= breakdown.r_pns <= hi + tol:
        raise ValueError("r_pns escapes its attainable range")


def group_advantages(rewards: list[float] | np.ndarray, epsilon: float = 1e-8) -> np.ndarray:
    """Center and scale a group of rewards: (r - mean) / (pop std + eps).

    Groups need at least two members; a degenerate group (zero spread)
    yields all zeros up to the epsilon guard.
    """
    values = np.asarray(rewards, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("a reward group needs at least two members")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return (values - values.mean()) / (values.std() + epsilon)
