"""Final-answer normalization and equivalence.

Scope is deliberately narrow: trim wrappers, canonicalize the common
numeric shapes (integer, decimal, \\frac{a}{b}, plain a/b) through exact
rational arithmetic, and otherwise compare cleaned text. Full CAS-style
equivalence is out of scope; callers needing it can swap in their own
verifier.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .parsing import extract_final_answer, parse_response
from .types import GroundTruth

_WS_RUN = re.compile(r"[ \t\n\r\f\v]+")
_STYLE_WRAPPER = re.compile(r"\\(?:text|textbf|textit|texttt|mathrm|mathbf|mathit)\{(.*)\}\Z", re.DOTALL)
_INTEGER = re.compile(r"[+-]?\d+\Z")
_DECIMAL = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+)\Z")
_FRAC = re.compile(r"\\frac\{([+-]?\d+)\}\{([+-]?\d+)\}\Z")
# Plain a/b keeps normalize idempotent: canonical rationals render as "p/q".
_RATIO = re.compile(r"([+-]?\d+)\s*/\s*([+-]?\d+)\Z")


def _strip_dollars(s: str) -> str:
    if len(s) >= 2 and s.startswith("$") and s.endswith("$"):
        return s[1:-1].strip()
    return s


def _strip_style(s: str) -> str:
    m = _STYLE_WRAPPER.fullmatch(s)
    if m is None:
        return s
    inner = m.group(1)
    # Only unwrap when the braces actually balance at depth zero, so
    # "\text{a} + \text{b}" is not mangled.
    depth = 0
    for ch in inner:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                return s
    return inner.strip() if depth == 0 else s


def _as_fraction(s: str) -> Fraction | None:
    if _INTEGER.fullmatch(s) or _DECIMAL.fullmatch(s):
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError):
            return None
    m = _FRAC.fullmatch(s) or _RATIO.fullmatch(s)
    if m is not None:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            return None
        return Fraction(num, den)
    return None


def normalize_answer(raw: str) -> str:
    """Canonical text form of an answer.

    Trims ASCII whitespace, strips one layer of $...$ and one layer of a
    text-styling macro, collapses internal whitespace runs, then rewrites
    integers, decimals, and \\frac{a}{b} as reduced rationals (str of
    Fraction, e.g. "1/2" or "42"). Anything else passes through cleaned.
    """
    s = raw.strip()
    s = _strip_dollars(s)
    s = _strip_style(s)
    s = _WS_RUN.sub(" ", s).strip()
    value = _as_fraction(s)
    if value is not None:
        return str(value)
    return s


def answers_equivalent(a: str, b: str, rel_tol: float = 1e-6) -> bool:
    """True when canonical forms match, or both are numeric and close.

    Numeric closeness: |x - y| <= rel_tol * max(1, |x|, |y|). Symmetric and
    reflexive by construction.
    """
    ca, cb = normalize_answer(a), normalize_answer(b)
    if ca == cb:
        return True
    fa, fb = _as_fraction(ca), _as_fraction(cb)
    if fa is None or fb is None:
        return False
    x, y = float(fa), float(fb)
    return abs(x - y) <= rel_tol * max(1.0, abs(x), abs(y))


def accuracy_score(response_text: str, truth: GroundTruth, rel_tol: float = 1e-6) -> int:
    """1 iff the response's extracted final answer matches the reference.

    A response with no extractable final answer scores 0 regardless of what
    its prose says.
    """
    extracted = extract_final_answer(parse_response(response_text))
    if extracted is None:
        return 0
    return int(answers_equivalent(extracted, truth.answer, rel_tol=rel_tol))
