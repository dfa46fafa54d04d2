"""Desk-scale reverse-RL simulator over synthetic response templates.

Each question owns a small menu of canned responses (templates) covering
the three behavior classes: format-compliant with a wrong answer,
format-compliant with the right answer, and format-broken. A softmax policy
per question picks templates; groups are scored through the real prompt ->
judge -> parser -> reward path (with table mocks standing in for the
backends), advantages are group-normalized, and plain REINFORCE moves the
logits. Under the inverted-accuracy regime the policy should pile mass on
plausible wrong answers; under the standard regime, on correct ones.

The configured clip range is echoed but never applied: with a single policy
sampling and learning in lockstep there is no importance ratio to clip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clients import TableJudgeMock, TableRmMock
from .config import PnsConfig, SimulationConfig
from .engine import COT_JUDGE_ROLE, FORMAT_JUDGE_ROLE, score_response
from .judges import build_cot_reply, build_judge_reply
from .parsing import check_structure, parse_response
from .prompts import render_cot_judge_prompt, render_format_judge_prompt
from .rewards import compose_reward, group_advantages
from .types import GroundTruth, RewardBreakdown
from .verification import accuracy_score

CLASS_COMPLIANT_INCORRECT = "compliant_incorrect"
CLASS_COMPLIANT_CORRECT = "compliant_correct"
CLASS_NONCOMPLIANT = "noncompliant"


@dataclass(frozen=True)
class ResponseTemplate:
    """One canned response with its declared behavior and mock scores."""

    template_id: str
    emitted_text: str
    format_compliant: bool
    correct: bool
    rm_raw: float
    cot_dims: tuple[int, int, int, int]

    @property
    def behavior_class(self) -> str:
        if not self.format_compliant:
            return CLASS_NONCOMPLIANT
        return CLASS_COMPLIANT_CORRECT if self.correct else CLASS_COMPLIANT_INCORRECT


@dataclass(frozen=True)
class SimQuestion:
    """A question plus its template menu, validated on construction.

    Every template's declared flags must match what the real parser and
    verifier say about its text, and emitted texts must be unique so mock
    tables key cleanly.
    """

    question_id: str
    prompt: str
    ground_truth: str
    templates: tuple[ResponseTemplate, ...]

    def __post_init__(self) -> None:
        if len(self.templates) < 2:
            raise ValueError("a question needs at least two templates")
        ids = [t.template_id for t in self.templates]
        if len(set(ids)) != len(ids):
            raise ValueError(f"{self.question_id}: duplicate template ids")
        texts = [t.emitted_text for t in self.templates]
        if len(set(texts)) != len(texts):
            raise ValueError(f"{self.question_id}: duplicate emitted texts")
        truth = GroundTruth(self.question_id, self.ground_truth)
        for t in self.templates:
            r_rule = check_structure(parse_response(t.emitted_text)).r_rule
            if bool(r_rule) != t.format_compliant:
                raise ValueError(
                    f"{self.question_id}/{t.template_id}: format_compliant flag "
                    f"disagrees with the rule checks"
                )
            if bool(accuracy_score(t.emitted_text, truth)) != t.correct:
                raise ValueError(
                    f"{self.question_id}/{t.template_id}: correct flag disagrees "
                    f"with the answer verifier"
                )


def _compliant_text(work: str, answer: str) -> str:
    return f"<think>{work}</think> The final answer is \\boxed{{{answer}}}."


def _question_templates(qid: str, a: int, b: int) -> tuple[str, str, tuple[ResponseTemplate, ...]]:
    prompt = f"Compute {a} + {b}."
    right = a + b
    wrong = right + 3
    wrong2 = right - 2
    work_ok = f"We need {a} + {b}. Adding units digits first, {a} + {b} = {right}. Check: {right} - {b} = {a}."
    work_wrong = (
        f"We need {a} + {b}. By the pairing identity, {a} + {b} = {a} + {b + 3} - 3 + 3 = {wrong}. "
        f"Check: {wrong} - {b} = {a + 3}, consistent with the shifted form."
    )
    work_wrong2 = (
        f"Rounding {a} to the nearest ten and compensating, {a} + {b} = {wrong2 + 2} - 2 = {wrong2}."
    )
    templates = (
        ResponseTemplate(
            template_id="plausible-wrong-a",
            emitted_text=_compliant_text(work_wrong, str(wrong)),
            format_compliant=True,
            correct=False,
            rm_raw=2.6,
            cot_dims=(3, 3, 3, 2),
        ),
        ResponseTemplate(
            template_id="plausible-wrong-b",
            emitted_text=_compliant_text(work_wrong2, str(wrong2)),
            format_compliant=True,
            correct=False,
            rm_raw=2.2,
            cot_dims=(3, 2, 3, 3),
        ),
        ResponseTemplate(
            template_id="correct-a",
            emitted_text=_compliant_text(work_ok, str(right)),
            format_compliant=True,
            correct=True,
            rm_raw=2.8,
            cot_dims=(3, 3, 3, 3),
        ),
        ResponseTemplate(
            template_id="correct-b",
            emitted_text=_compliant_text(work_ok + " Double-checked.", str(right)),
            format_compliant=True,
            correct=True,
            rm_raw=2.4,
            cot_dims=(3, 3, 2, 3),
        ),
        ResponseTemplate(
            template_id="no-think",
            emitted_text=f"The answer is \\boxed{{{right}}}.",
            format_compliant=False,
            correct=False,
            rm_raw=-2.5,
            cot_dims=(1, 1, 0, 2),
        ),
        ResponseTemplate(
            template_id="empty-think",
            emitted_text=f"<think>   </think> \\boxed{{{wrong}}}.",
            format_compliant=False,
            correct=False,
            rm_raw=-3.2,
            cot_dims=(0, 0, 1, 0),
        ),
    )
    return prompt, str(right), templates


def default_question_bank(n_questions: int = 4) -> tuple[SimQuestion, ...]:
    """Small arithmetic bank; every question carries all behavior classes."""
    seeds = [(12, 7), (25, 14), (31, 9), (48, 27), (53, 36), (64, 19), (72, 45), (81, 12)]
    if n_questions < 1 or n_questions > len(seeds):
        raise ValueError(f"n_questions must lie in 1..{len(seeds)}")
    bank = []
    for i in range(n_questions):
        a, b = seeds[i]
        qid = f"q{i + 1}"
        prompt, truth, templates = _question_templates(qid, a, b)
        bank.append(SimQuestion(qid, prompt, truth, templates))
    return tuple(bank)


def build_template_mocks(bank) -> tuple[TableJudgeMock, TableRmMock]:
    """Exact-key mocks covering every template; any gap fails loudly.

    The judge passes a template iff it is format-compliant, quality scores
    come from the template's declared dimensions, and the reward model
    returns the declared raw score. Keys are full rendered prompts, so the
    real renderer -> client -> parser path is exercised.
    """
    judge_table: dict[tuple[str, str], str] = {}
    rm_table: dict[tuple[str, str], float] = {}
    for q in bank:
        for t in q.templates:
            judge_key = (FORMAT_JUDGE_ROLE, render_format_judge_prompt(t.emitted_text))
            judge_table[judge_key] = build_judge_reply("pass" if t.format_compliant else "fail")
            cot_key = (COT_JUDGE_ROLE, render_cot_judge_prompt(q.prompt, t.emitted_text))
            judge_table[cot_key] = build_cot_reply(*t.cot_dims)
            rm_table[(q.prompt, t.emitted_text)] = t.rm_raw
    return TableJudgeMock(judge_table), TableRmMock(rm_table)


@dataclass(frozen=True)
class TemplatePolicy:
    """Per-question softmax logits over the template menu."""

    logits: dict[str, np.ndarray]

    def probs(self, question_id: str) -> np.ndarray:
        z = self.logits[question_id]
        e = np.exp(z - z.max())
        return e / e.sum()

    @staticmethod
    def uniform(bank) -> "TemplatePolicy":
        return TemplatePolicy({q.question_id: np.zeros(len(q.templates)) for q in bank})


def rollout_group(policy: TemplatePolicy, question: SimQuestion, group_size: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Sample template indices for one question under the current policy."""
    probs = policy.probs(question.question_id)
    return rng.choice(len(question.templates), size=group_size, p=probs)


def score_rollout(question: SimQuestion, indices, judge: TableJudgeMock,
                  rm: TableRmMock, cfg: PnsConfig) -> list[RewardBreakdown]:
    """Score sampled templates through the full engine path."""
    truth = GroundTruth(question.question_id, question.ground_truth)
    out = []
    for idx in indices:
        t = question.templates[int(idx)]
        out.append(score_response(question.prompt, t.emitted_text, truth, judge, rm, cfg))
    return out


def regime_reward(breakdown: RewardBreakdown, cfg: PnsConfig, regime: str) -> float:
    """Scalar reward under the chosen regime.

    "pns" pays the bounty on format-compliant wrong answers; "standard" is
    its mirror, paying the bounty on format-compliant correct answers.
    """
    if regime == "pns":
        return breakdown.r_pns
    if regime == "standard":
        return compose_reward(breakdown.r_format, 1 - breakdown.r_acc,
                              breakdown.rm_norm, breakdown.r_cot, cfg)
    raise ValueError(f"unknown reward regime: {regime!r}")


def reinforce_step(logits: np.ndarray, indices, advantages, lr: float) -> np.ndarray:
    """One REINFORCE ascent step on softmax logits, recentered to mean zero.

    The score function for a categorical softmax is (onehot - probs); the
    update averages advantage-weighted score functions over the group.
    Recentering removes the softmax gauge freedom so logits stay bounded.
    """
    z = np.asarray(logits, dtype=float)
    e = np.exp(z - z.max())
    probs = e / e.sum()
    grad = np.zeros_like(z)
    for idx, adv in zip(indices, advantages):
        grad -= adv * probs
        grad[int(idx)] += adv
    grad /= len(indices)
    updated = z + lr * grad
    return updated - updated.mean()


def _mass_row(policy: TemplatePolicy, bank) -> tuple[dict[str, float], float]:
    masses = {CLASS_COMPLIANT_INCORRECT: 0.0, CLASS_COMPLIANT_CORRECT: 0.0,
              CLASS_NONCOMPLIANT: 0.0}
    worst_sum_err = 0.0
    for q in bank:
        p = policy.probs(q.question_id)
        worst_sum_err = max(worst_sum_err, abs(float(p.sum()) - 1.0))
        for t, pi in zip(q.templates, p):
            masses[t.behavior_class] += float(pi)
    n = len(bank)
    return {k: v / n for k, v in masses.items()}, worst_sum_err


@dataclass(frozen=True)
class SimulationResult:
    """Trajectory rows plus the final policy, both JSON-serializable."""

    regime: str
    trajectory: list[dict]
    final_policy: dict[str, list[float]]

    def final_masses(self) -> dict[str, float]:
        row = self.trajectory[-1]
        return {k: row[k] for k in
                (CLASS_COMPLIANT_INCORRECT, CLASS_COMPLIANT_CORRECT, CLASS_NONCOMPLIANT)}


def run_simulation(bank, sim_cfg: SimulationConfig,
                   reward_cfg: PnsConfig | None = None) -> SimulationResult:
    """Run the REINFORCE loop and return the full trajectory.

    Row 0 describes the uniform initial policy; row t the policy after t
    updates, along with the mean reward of the group sampled at that step.
    Fully deterministic given the seed.
    """
    reward_cfg = reward_cfg or PnsConfig()
    judge, rm = build_template_mocks(bank)
    rng = np.random.default_rng(sim_cfg.seed)
    policy = TemplatePolicy.uniform(bank)

    masses, sum_err = _mass_row(policy, bank)
    trajectory = [{"step": 0, **masses, "prob_sum_error": sum_err, "mean_reward": None}]

    for step in range(1, sim_cfg.steps + 1):
        step_rewards = []
        new_logits = dict(policy.logits)
        for q in bank:
            indices = rollout_group(policy, q, sim_cfg.group_size, rng)
            breakdowns = score_rollout(q, indices, judge, rm, reward_cfg)
            rewards = [regime_reward(b, reward_cfg, sim_cfg.reward_regime)
                       for b in breakdowns]
            step_rewards.extend(rewards)
            advantages = group_advantages(rewards, reward_cfg.advantage_epsilon)
            new_logits[q.question_id] = reinforce_step(
                new_logits[q.question_id], indices, advantages, sim_cfg.learning_rate
            )
        policy = TemplatePolicy(new_logits)
        masses, sum_err = _mass_row(policy, bank)
        trajectory.append({
            "step": step, **masses,
            "prob_sum_error": sum_err,
            "mean_reward": float(np.mean(step_rewards)),
        })

    final_policy = {q.question_id: [float(p) for p in policy.probs(q.question_id)]
                    for q in bank}
    return SimulationResult(regime=sim_cfg.reward_regime, trajectory=trajectory,
                            final_policy=final_policy)
