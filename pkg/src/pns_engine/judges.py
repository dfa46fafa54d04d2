"""Strict parsing of judge replies, plus helpers that build valid replies.

Replies that deviate from the contract in any way (zero or multiple final
blocks, extra JSON keys, non-integer scores, booleans, unknown labels) are
rejected rather than repaired: a reward signal built on guesswork is worse
than one that abstains. Failed parses degrade to the zero-credit value of
each signal (verdict "fail", all-zero quality scores).
"""

from __future__ import annotations

import json
import re

from .types import CotScores, JudgeVerdict

_FINAL_BLOCK = re.compile(r"<final>(.*?)</final>", re.DOTALL)

COT_DIMENSION_KEYS = (
    "Reasoning validity",
    "Reasoning-conclusion consistency",
    "Instruction following",
    "Repetition issues and unnecessary language mixing",
)

# Closed label set for error classification. The final alias covers a
# variant spelling of the answer-parsing label that the classifier prompt
# uses; both map to the same failure mode.
ERROR_SUBCATEGORIES = frozenset(
    {
        "Problem Misunderstanding",
        "Conceptual Misunderstanding",
        "Factual Error",
        "Theorem Error",
        "Definition Error",
        "Strategy Error",
        "Reasoning Error",
        "Premise Error",
        "Consistency Error",
        "Numerical Error",
        "Formula Error",
        "Parameter Error",
        "Unit Error",
        "Syntax Error",
        "Function Error",
        "Data Type Error",
        "Symbol Error",
        "Formatting Error",
        "Boundary Omission",
        "Reflection Error",
        "Summary Error",
        "Hallucination",
        "Redundancy",
        "Incorrect Ground Truth",
        "Answer Parsing Error",
        "Correct Answer Parsing Error",
    }
)


def _single_final_json(reply: str) -> dict | None:
    """The one JSON object inside the one <final> block, else None."""
    blocks = _FINAL_BLOCK.findall(reply)
    if len(blocks) != 1:
        return None
    try:
        obj = json.loads(blocks[0])
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict):
        return None
    return obj


def parse_judge_verdict(reply: str) -> JudgeVerdict:
    """Strictly parse a format-judge reply.

    Valid: exactly one final block containing a JSON object whose single
    key is "verdict" with value "pass" or "fail". Anything else yields
    (verdict="fail", parse_ok=False).
    """
    obj = _single_final_json(reply)
    if obj is None or set(obj) != {"verdict"}:
        return JudgeVerdict(verdict="fail", parse_ok=False)
    verdict = obj["verdict"]
    if verdict not in ("pass", "fail"):
        return JudgeVerdict(verdict="fail", parse_ok=False)
    return JudgeVerdict(verdict=verdict, parse_ok=True)


def parse_cot_scores(reply: str) -> CotScores:
    """Strictly parse a quality-judge reply into four 0..3 integers.

    The JSON object must carry exactly the four dimension keys, each an
    integer (bool is not an integer here) within range. Failure zeroes all
    dimensions.
    """
    failed = CotScores(0, 0, 0, 0, parse_ok=False)
    obj = _single_final_json(reply)
    if obj is None or set(obj) != set(COT_DIMENSION_KEYS):
        return failed
    values = []
    for key in COT_DIMENSION_KEYS:
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= 3:
            return failed
        values.append(v)
    return CotScores(values[0], values[1], values[2], values[3], parse_ok=True)


def parse_error_label(reply: str) -> tuple[str, str] | None:
    """Parse an error-classification reply into (sub_category, analysis).

    The entire reply, stripped, must be one raw JSON object with exactly the
    keys "sub_category" and "analysis", and the label must belong to the
    closed taxonomy. Returns None otherwise.
    """
    text = reply.strip()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict) or set(obj) != {"sub_category", "analysis"}:
        return None
    sub_category, analysis = obj["sub_category"], obj["analysis"]
    if not isinstance(sub_category, str) or not isinstance(analysis, str):
        return None
    if sub_category not in ERROR_SUBCATEGORIES:
        return None
    return sub_category, analysis


def build_judge_reply(verdict: str, analysis: str = "Brief analysis.") -> str:
    """A reply the strict verdict parser accepts."""
    if verdict not in ("pass", "fail"):
        raise ValueError("verdict must be 'pass' or 'fail'")
    return f"{analysis}\n<final>\n{json.dumps({'verdict': verdict})}\n</final>"


def build_cot_reply(d1: int, d2: int, d3: int, d4: int) -> str:
    """A reply the strict quality parser accepts."""
    payload = dict(zip(COT_DIMENSION_KEYS, (d1, d2, d3, d4)))
    for v in payload.values():
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= 3:
            raise ValueError("dimension scores must be ints in 0..3")
    return "<final>\n" + json.dumps(payload, indent=2) + "\n</final>"


def build_error_reply(sub_category: str, analysis: str) -> str:
    """A reply the strict error-label parser accepts."""
    if sub_category not in ERROR_SUBCATEGORIES:
        raise ValueError(f"unknown sub_category: {sub_category!r}")
    return json.dumps({"sub_category": sub_category, "analysis": analysis})
