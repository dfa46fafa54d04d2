"""Immutable value objects shared across the reward stack.

Everything here is a frozen dataclass validated at construction time, so a
value that exists is a value that is internally consistent. Downstream code
(reward composition, pairing, serialization) can rely on that and skip
re-validation.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


_BINARY = (0, 1)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class RawResponse:
    """A model response as emitted, before any parsing."""

    question_id: str
    text: str

    def __post_init__(self) -> None:
        _require(bool(self.question_id), "question_id must be non-empty")


@dataclass(frozen=True)
class ParsedResponse:
    """Structural decomposition of a response around the think tags.

    ``boxed_expressions`` holds ``(content, position)`` tuples in document
    order, where position is the character offset of the opening backslash.
    ``last_boxed_after_close`` is true iff the final boxed expression starts
    after the close tag; since positions are increasing this also means no
    boxed expression after the close tag exists when it is false.
    """

    think_open_count: int
    think_close_count: int
    think_body: str
    post_think: str
    boxed_expressions: tuple[tuple[str, int], ...]
    last_boxed_after_close: bool

    def __post_init__(self) -> None:
        _require(self.think_open_count >= 0, "think_open_count must be >= 0")
        _require(self.think_close_count >= 0, "think_close_count must be >= 0")
        positions = [pos for _, pos in self.boxed_expressions]
        _require(positions == sorted(positions), "boxed positions must be increasing")


@dataclass(frozen=True)
class ConstraintReport:
    """Outcome of the five structural rule checks plus their product."""

    c1: bool
    c2: bool
    c3: bool
    c4: bool
    c5: bool
    r_rule: int

    def __post_init__(self) -> None:
        expected = int(self.c1 and self.c2 and self.c3 and self.c4 and self.c5)
        _require(self.r_rule == expected, "r_rule must equal the product of c1..c5")

    def as_dict(self) -> dict[str, bool]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "r_rule"}


@dataclass(frozen=True)
class JudgeVerdict:
    """Strictly parsed judge reply: a verdict plus whether parsing succeeded."""

    verdict: str
    parse_ok: bool

    def __post_init__(self) -> None:
        _require(self.verdict in ("pass", "fail"), "verdict must be 'pass' or 'fail'")
        if not self.parse_ok:
            _require(self.verdict == "fail", "unparseable replies must carry verdict 'fail'")


@dataclass(frozen=True)
class CotScores:
    """Four reasoning-quality dimensions on a 0..3 integer scale.

    A failed parse forces all four dimensions to zero so that unusable judge
    output never contributes quality credit.
    """

    d1: int
    d2: int
    d3: int
    d4: int
    parse_ok: bool

    def __post_init__(self) -> None:
        for name in ("d1", "d2", "d3", "d4"):
            value = getattr(self, name)
            _require(isinstance(value, int) and not isinstance(value, bool), f"{name} must be an int")
            _require(0 <= value <= 3, f"{name} must lie in 0..3")
        if not self.parse_ok:
            _require(self.total() == 0, "failed parse must zero all dimensions")

    def total(self) -> int:
        return self.d1 + self.d2 + self.d3 + self.d4

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.d1, self.d2, self.d3, self.d4)


@dataclass(frozen=True)
class RewardBreakdown:
    """Every intermediate signal behind one scalar reward.

    The final reward is kept next to its ingredients so any consumer can
    recompute and audit it; `check_breakdown` in the rewards module does
    exactly that.
    """

    r_rule: int
    r_judge: int
    r_format: int
    r_acc: int
    rm_raw: float
    rm_norm: float
    cot_dims: tuple[int, int, int, int]
    r_cot: float
    r_pns: float

    def __post_init__(self) -> None:
        for name in ("r_rule", "r_judge", "r_format", "r_acc"):
            _require(getattr(self, name) in _BINARY, f"{name} must be 0 or 1")
        _require(self.r_format == self.r_rule * self.r_judge, "r_format must equal r_rule * r_judge")
        _require(0.0 <= self.rm_norm <= 1.0, "rm_norm must lie in [0, 1]")
        _require(len(self.cot_dims) == 4, "cot_dims must have four entries")
        for d in self.cot_dims:
            _require(isinstance(d, int) and not isinstance(d, bool) and 0 <= d <= 3, "cot dims must be ints in 0..3")
        _require(0.0 <= self.r_cot <= 1.0, "r_cot must lie in [0, 1]")

    def as_dict(self) -> dict:
        return {
            "r_rule": self.r_rule,
            "r_judge": self.r_judge,
            "r_format": self.r_format,
            "r_acc": self.r_acc,
            "rm_raw": self.rm_raw,
            "rm_norm": self.rm_norm,
            "cot_dims": list(self.cot_dims),
            "r_cot": self.r_cot,
            "r_pns": self.r_pns,
        }


@dataclass(frozen=True)
class GroundTruth:
    """Reference answer for one question. The answer text must be non-empty."""

    question_id: str
    answer: str

    def __post_init__(self) -> None:
        _require(bool(self.question_id), "question_id must be non-empty")
        _require(self.answer.strip() != "", "ground-truth answer must be non-empty")


@dataclass(frozen=True)
class PreferencePair:
    """A chosen/rejected response pair for one question.

    Sources are labels carried through from the record stream, e.g. the
    chosen side comes from the target model and the rejected side from the
    plausible-negative or rejection-sampling pools.
    """

    question_id: str
    prompt: str
    chosen: RawResponse
    rejected: RawResponse
    chosen_source: str
    rejected_source: str

    def __post_init__(self) -> None:
        _require(bool(self.question_id), "question_id must be non-empty")
        _require(
            self.chosen.question_id == self.question_id == self.rejected.question_id,
            "both sides of a pair must belong to the pair's question",
        )

    def as_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "prompt": self.prompt,
            "chosen": self.chosen.text,
            "rejected": self.rejected.text,
            "chosen_source": self.chosen_source,
            "rejected_source": self.rejected_source,
        }
