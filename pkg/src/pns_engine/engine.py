"""End-to-end scoring of one response into a full reward breakdown.

The engine always runs every stage (rule checks, format judge, answer
verification, quality judge, reward model) even when an early gate already
fixed the final scalar at -1. Scored records therefore always carry the
complete evidence, which keeps downstream analysis (e.g. comparing RM score
distributions across pools) unconditional on gating.
"""

from __future__ import annotations

from . import prompts
from .clients import JudgeClient, RmClient, TransportError, score_with_rm
from .config import PnsConfig
from .judges import parse_cot_scores, parse_judge_verdict
from .parsing import check_structure, parse_response
from .rewards import clip_bucket_normalize, compose_reward, cot_score, format_score
from .types import ConstraintReport, GroundTruth, RewardBreakdown
from .verification import accuracy_score

FORMAT_JUDGE_ROLE = "format-judge"
COT_JUDGE_ROLE = "cot-judge"
ERROR_JUDGE_ROLE = "error-judge"
RM_ROLE = "rm"

STAGE_FORMAT_JUDGE = "format-judge"
STAGE_COT_JUDGE = "cot-judge"
STAGE_RM = "rm"


class StageFailure(RuntimeError):
    """A backend stage failed after retries; carries the stage name."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"{stage}: {error}")
        self.stage = stage
        self.error = error


def _guarded(stage: str, fn):
    try:
        return fn()
    except TransportError as exc:
        raise StageFailure(stage, exc) from exc


def score_response(prompt: str, response: str, truth: GroundTruth,
                   judge: JudgeClient, rm: RmClient,
                   cfg: PnsConfig | None = None) -> RewardBreakdown:
    """Score one response against its question and reference answer."""
    cfg = cfg or PnsConfig()

    report = check_structure(parse_response(response))
    r_rule = report.r_rule

    judge_prompt = prompts.render_format_judge_prompt(response)
    judge_reply = _guarded(STAGE_FORMAT_JUDGE,
                           lambda: judge.complete(FORMAT_JUDGE_ROLE, judge_prompt))
    verdict = parse_judge_verdict(judge_reply)
    r_judge = int(verdict.verdict == "pass")

    r_acc = accuracy_score(response, truth, rel_tol=cfg.answer_rel_tol)

    cot_prompt = prompts.render_cot_judge_prompt(prompt, response)
    cot_reply = _guarded(STAGE_COT_JUDGE,
                         lambda: judge.complete(COT_JUDGE_ROLE, cot_prompt))
    dims = parse_cot_scores(cot_reply)

    rm_raw = _guarded(STAGE_RM, lambda: score_with_rm(rm, prompt, response))
    rm_norm = clip_bucket_normalize(rm_raw, cfg)

    r_format = format_score(r_rule, r_judge)
    r_cot = cot_score(dims)
    r_pns = compose_reward(r_format, r_acc, rm_norm, r_cot, cfg)

    return RewardBreakdown(
        r_rule=r_rule,
        r_judge=r_judge,
        r_format=r_format,
        r_acc=r_acc,
        rm_raw=float(rm_raw),
        rm_norm=rm_norm,
        cot_dims=dims.as_tuple(),
        r_cot=r_cot,
        r_pns=r_pns,
    )


def structure_report(response: str) -> ConstraintReport:
    """Rule-gate detail for one response, no backends involved."""
    return check_structure(parse_response(response))
