"""Structural parsing of model responses.

A well-formed response looks like::

    <think> reasoning ... </think> visible answer ... \\boxed{42}

Parsing is purely lexical: tags are exact literal matches wherever they
occur (including inside code fences), boxed expressions are read with brace
counting, and nothing here interprets math. The five rule checks gate the
format reward; each is reported independently so failures are explainable.
"""

from __future__ import annotations

import string

from .types import ConstraintReport, ParsedResponse

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"
_BOXED = "\\boxed{"

# ASCII whitespace only; unicode spaces count as content.
_ASCII_WS = string.whitespace


def _find_boxed(text: str) -> tuple[tuple[str, int], ...]:
    """All \\boxed{...} spans with brace-depth matching.

    Returns (content, position) per expression, position being the offset of
    the backslash. An unterminated expression (braces never balance) is
    dropped; scanning resumes after its opening marker so later complete
    expressions are still found.
    """
    found = []
    start = 0
    while True:
        idx = text.find(_BOXED, start)
        if idx < 0:
            break
        depth = 1
        pos = idx + len(_BOXED)
        while pos < len(text) and depth > 0:
            ch = text[pos]
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
            pos += 1
        if depth == 0:
            found.append((text[idx + len(_BOXED):pos - 1], idx))
        start = idx + len(_BOXED)
    return tuple(found)


def parse_response(text: str) -> ParsedResponse:
    """Decompose a response around the first open tag and its close tag.

    ``think_body`` and ``post_think`` are only meaningful when exactly one
    open and one close tag exist in order; with other counts they fall back
    to empty strings and the rule checks do the rejecting.
    """
    open_count = text.count(THINK_OPEN)
    close_count = text.count(THINK_CLOSE)
    open_idx = text.find(THINK_OPEN)
    if open_idx >= 0:
        close_idx = text.find(THINK_CLOSE, open_idx + len(THINK_OPEN))
    else:
        close_idx = text.find(THINK_CLOSE)
    think_body = ""
    post_think = ""
    if open_idx >= 0 and close_idx >= 0:
        think_body = text[open_idx + len(THINK_OPEN):close_idx]
    if close_idx >= 0:
        post_think = text[close_idx + len(THINK_CLOSE):]
    boxed = _find_boxed(text)
    last_after_close = bool(boxed) and close_idx >= 0 and boxed[-1][1] > close_idx
    return ParsedResponse(
        think_open_count=open_count,
        think_close_count=close_count,
        think_body=think_body,
        post_think=post_think,
        boxed_expressions=boxed,
        last_boxed_after_close=last_after_close,
    )


def check_structure(parsed: ParsedResponse) -> ConstraintReport:
    """Apply the five structural rules and take their product.

    c1: exactly one open and one close tag.
    c2: think body is non-empty after ASCII-whitespace trimming.
    c3: text after the close tag is non-empty after trimming.
    c4: the last boxed expression sits after the close tag.
    c5: that last boxed expression has non-empty content.
    """
    c1 = parsed.think_open_count == 1 and parsed.think_close_count == 1
    c2 = parsed.think_body.strip(_ASCII_WS) != ""
    c3 = parsed.post_think.strip(_ASCII_WS) != ""
    c4 = parsed.last_boxed_after_close
    c5 = bool(parsed.boxed_expressions) and parsed.boxed_expressions[-1][0].strip(_ASCII_WS) != ""
    return ConstraintReport(c1=c1, c2=c2, c3=c3, c4=c4, c5=c5,
                            r_rule=int(c1 and c2 and c3 and c4 and c5))


def extract_final_answer(parsed: ParsedResponse) -> str | None:
    """Content of the last boxed expression after the close tag, else None.

    Positions are increasing, so if the last boxed expression is not after
    the close tag, none are.
    """
    if parsed.last_boxed_after_close:
        return parsed.boxed_expressions[-1][0]
    return None
