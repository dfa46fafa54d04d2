"""Configuration objects and TOML loading.

A config file has up to four tables::

    [reward]      # reward composition constants
    [backends]    # judge / reward-model endpoints or a mock table path
    [retry]       # transport retry policy
    [simulation]  # reverse-RL simulator settings

Every field has a default, so an empty file (or a missing table) yields the
stock configuration. Environment variables PNS_JUDGE_URL and PNS_RM_URL
override the corresponding backend URLs after the file is read.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

ENV_JUDGE_URL = "PNS_JUDGE_URL"
ENV_RM_URL = "PNS_RM_URL"

# Irregular score grid: dense near the extremes, coarse through the middle.
DEFAULT_BUCKETS = (-3.5, -3.0, -2.5, -2.0, -1.0, 0.0, 1.0, 2.0, 2.5, 3.0, 3.5)


class ConfigError(ValueError):
    """Raised when a config file is unreadable or internally inconsistent."""


@dataclass(frozen=True)
class PnsConfig:
    """Constants for reward composition and group normalization."""

    lambda_r: float = 0.5
    lambda_c: float = 0.5
    s_min: float = -3.5
    s_max: float = 3.5
    buckets: tuple[float, ...] = DEFAULT_BUCKETS
    group_size: int = 8
    answer_rel_tol: float = 1e-6
    advantage_epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.s_min >= self.s_max:
            raise ConfigError("s_min must be strictly below s_max")
        buckets = tuple(float(b) for b in self.buckets)
        if not buckets:
            raise ConfigError("bucket grid must be non-empty")
        if list(buckets) != sorted(set(buckets)):
            raise ConfigError("bucket grid must be strictly increasing")
        if buckets[0] < self.s_min or buckets[-1] > self.s_max:
            raise ConfigError("bucket grid must lie within [s_min, s_max]")
        object.__setattr__(self, "buckets", buckets)
        if self.lambda_r < 0 or self.lambda_c < 0:
            raise ConfigError("lambda weights must be non-negative")
        if self.group_size < 2:
            raise ConfigError("group_size must be at least 2")
        if self.answer_rel_tol < 0:
            raise ConfigError("answer_rel_tol must be non-negative")
        if self.advantage_epsilon <= 0:
            raise ConfigError("advantage_epsilon must be positive")


@dataclass(frozen=True)
class BackendConfig:
    """Where scores come from: HTTP endpoints or an offline mock table.

    Exactly one route must be resolvable when scoring starts: either
    ``mock_table`` points at a JSON mock spec, or both URLs are set (in the
    file or through the environment overrides).
    """

    judge_url: str = ""
    rm_url: str = ""
    mock_table: str = ""
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")


@dataclass(frozen=True)
class RetryPolicy:
    """Bounded exponential backoff for transport failures."""

    attempts: int = 3
    base_delay: float = 0.2

    def __post_init__(self) -> None:
        if self.attempts < 1:
            raise ConfigError("attempts must be at least 1")
        if self.base_delay < 0:
            raise ConfigError("base_delay must be non-negative")


@dataclass(frozen=True)
class SimulationConfig:
    """Reverse-RL simulator settings.

    ``clip_range`` is parsed and echoed in reports but is inert: the
    simulator optimizes a single softmax policy with plain REINFORCE, so
    there is no sampler/learner ratio to clip. It is kept so config files
    round-trip unchanged.
    """

    reward_regime: str = "pns"
    group_size: int = 8
    learning_rate: float = 0.5
    steps: int = 500
    seed: int = 0
    n_questions: int = 4
    clip_range: tuple[float, float] = (0.01, 0.99)

    def __post_init__(self) -> None:
        if self.reward_regime not in ("pns", "standard"):
            raise ConfigError("reward_regime must be 'pns' or 'standard'")
        if self.group_size < 2:
            raise ConfigError("group_size must be at least 2")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative")
        if self.n_questions < 1:
            raise ConfigError("n_questions must be at least 1")
        lo, hi = self.clip_range
        if not 0 <= lo < hi <= 1:
            raise ConfigError("clip_range must satisfy 0 <= low < high <= 1")
        object.__setattr__(self, "clip_range", (float(lo), float(hi)))


@dataclass(frozen=True)
class EngineConfig:
    """Everything a pipeline run needs, bundled."""

    reward: PnsConfig = field(default_factory=PnsConfig)
    backends: BackendConfig = field(default_factory=BackendConfig)
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)


def _build(cls, table: dict, path: str, name: str):
    known = set(cls.__dataclass_fields__)
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys in [{name}]: {sorted(unknown)}")
    coerced = dict(table)
    if "buckets" in coerced:
        coerced["buckets"] = tuple(coerced["buckets"])
    if "clip_range" in coerced:
        coerced["clip_range"] = tuple(coerced["clip_range"])
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid [{name}] table: {exc}") from exc


def load_config(path: str | None = None, env: dict[str, str] | None = None) -> EngineConfig:
    """Load an EngineConfig from a TOML file, applying env URL overrides.

    ``path=None`` yields pure defaults (still env-overridable). Unknown keys
    are rejected rather than ignored, so typos fail loudly.
    """
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    unknown = set(raw) - {"reward", "backends", "retry", "simulation"}
    if unknown:
        raise ConfigError(f"{path}: unknown config tables: {sorted(unknown)}")
    label = path or "<defaults>"
    cfg = EngineConfig(
        reward=_build(PnsConfig, raw.get("reward", {}), label, "reward"),
        backends=_build(BackendConfig, raw.get("backends", {}), label, "backends"),
        retry=_build(RetryPolicy, raw.get("retry", {}), label, "retry"),
        simulation=_build(SimulationConfig, raw.get("simulation", {}), label, "simulation"),
    )
    judge_url = env.get(ENV_JUDGE_URL, "").strip()
    rm_url = env.get(ENV_RM_URL, "").strip()
    if judge_url or rm_url:
        cfg = replace(
            cfg,
            backends=replace(
                cfg.backends,
                judge_url=judge_url or cfg.backends.judge_url,
                rm_url=rm_url or cfg.backends.rm_url,
            ),
        )
    return cfg
