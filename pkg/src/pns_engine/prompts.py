"""Prompt fixtures and literal slot rendering.

The four prompt texts ship as package data and are treated as frozen
fixtures: loading returns the file bytes decoded as UTF-8, unchanged.
Rendering splits a fixture at its named slot markers (each must occur
exactly once, checked at load) and joins the pieces with the provided
values verbatim. No escaping, no str.format: braces, backslashes, and tags
inside values pass through byte-for-byte.
"""

from __future__ import annotations

from importlib import resources

_DATA_DIR = "prompt_text"

SYSTEM_PROMPT_FILE = "system_prompt.txt"
FORMAT_JUDGE_FILE = "format_judge_prompt.txt"
COT_JUDGE_FILE = "cot_judge_prompt.txt"
ERROR_FILE = "error_prompt.txt"


class PromptFixtureError(RuntimeError):
    """A fixture is missing a slot marker or repeats one."""


def load_fixture(name: str) -> str:
    return resources.files("pns_engine").joinpath(_DATA_DIR, name).read_text(encoding="utf-8")


class _Template:
    """A fixture pre-split at its slot markers, in order of appearance."""

    def __init__(self, name: str, slots: tuple[str, ...]):
        text = load_fixture(name)
        self.name = name
        self.slots = slots
        for slot in slots:
            marker = "{" + slot + "}"
            if text.count(marker) != 1:
                raise PromptFixtureError(f"{name}: slot {marker} must occur exactly once")
        positions = sorted((text.index("{" + s + "}"), s) for s in slots)
        self.order = tuple(s for _, s in positions)
        parts = []
        rest = text
        for slot in self.order:
            before, _, rest = rest.partition("{" + slot + "}")
            parts.append(before)
        parts.append(rest)
        self.parts = parts

    def render(self, values: dict[str, str]) -> str:
        out = [self.parts[0]]
        for i, slot in enumerate(self.order):
            out.append(values[slot])
            out.append(self.parts[i + 1])
        return "".join(out)


_cache: dict[str, _Template] = {}


def _template(name: str, slots: tuple[str, ...]) -> _Template:
    if name not in _cache:
        _cache[name] = _Template(name, slots)
    return _cache[name]


def system_prompt() -> str:
    """The fixed system prompt; it has no slots."""
    return load_fixture(SYSTEM_PROMPT_FILE)


def render_format_judge_prompt(response: str) -> str:
    return _template(FORMAT_JUDGE_FILE, ("response",)).render({"response": response})


def render_cot_judge_prompt(prompt: str, response: str) -> str:
    return _template(COT_JUDGE_FILE, ("prompt", "response")).render(
        {"prompt": prompt, "response": response}
    )


def render_error_prompt(question: str, groundtruth: str, model_reasoning: str) -> str:
    return _template(ERROR_FILE, ("question", "groundtruth", "model_reasoning")).render(
        {"question": question, "groundtruth": groundtruth, "model_reasoning": model_reasoning}
    )
