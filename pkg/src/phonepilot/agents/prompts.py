"""Prompt template loading and the shared text renderings of memory state.

Templates ship as versioned data files with ``$placeholder`` slots; every
placeholder must be supplied, so a stale template fails loudly.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from string import Template

from ..memory import ActionRecord, ErrorRecord, Shortcut, Tip, format_shortcut_record
from ..actions import format_action

NONE_TEXT = "(none)"


@lru_cache(maxsize=None)
def load_template(name: str) -> Template:
    text = (
        resources.files("phonepilot")
        .joinpath("data", "prompts", f"{name}.txt")
        .read_text("utf-8")
    )
    return Template(text)


def render(name: str, **values: str) -> str:
    return load_template(name).substitute(**values)


def or_none(value: str) -> str:
    return value if value.strip() else NONE_TEXT


def render_tips(tips: list[Tip]) -> str:
    if not tips:
        return NONE_TEXT
    return "\n".join(f"{tip.id}. {tip.text}" for tip in tips)


def render_shortcuts(shortcuts: list[Shortcut]) -> str:
    if not shortcuts:
        return NONE_TEXT
    return "\n\n".join(
        format_shortcut_record(s, include_provenance=False) for s in shortcuts
    )


def render_action_record(record: ActionRecord) -> str:
    line = f"- step {record.step_index}: {format_action(record.action)} -> {record.outcome.value}"
    if record.expectation:
        line += f" | expected: {record.expectation}"
    return line


def render_action_history(records: list[ActionRecord]) -> str:
    if not records:
        return NONE_TEXT
    return "\n".join(render_action_record(r) for r in records)


def render_error_record(record: ErrorRecord) -> str:
    line = f"- step {record.step_index}: {record.description}"
    if record.suspected_cause:
        line += f" | cause: {record.suspected_cause}"
    if record.suggested_fix:
        line += f" | fix: {record.suggested_fix}"
    return line


def render_error_history(records: list[ErrorRecord]) -> str:
    if not records:
        return NONE_TEXT
    return "\n".join(render_error_record(r) for r in records)


def render_future_tasks(queries: list[str]) -> str:
    return "\n".join(f"- {q}" for q in queries)
