"""Labeled-section response grammar shared by all reasoning agents.

Every agent answers in plain text with fixed uppercase section labels at
line starts (``PLAN:``, ``ACTION:``, ...).  The grammar is unambiguous:
a section runs until the next known label.  ``parse_x(format_x(value))``
is the identity for machine-generated values.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import ResponseParseError
from ..memory import Outcome

_LABEL_RE = re.compile(r"^([A-Z][A-Z_]*):(.*)$")
_NUMBERED_RE = re.compile(r"^\d+\.\s+(\S.*)$")


def parse_sections(
    text: str, required: tuple[str, ...], optional: tuple[str, ...] = ()
) -> dict[str, str]:
    known = set(required) | set(optional)
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in text.splitlines():
        match = _LABEL_RE.match(line)
        if match and match.group(1) in known:
            name = match.group(1)
            if name in sections:
                raise ResponseParseError(f"duplicate section {name}", section=name)
            sections[name] = [match.group(2).lstrip()]
            current = name
        elif current is not None:
            sections[current].append(line)
    for name in required:
        if name not in sections:
            raise ResponseParseError(f"response is missing section {name}", section=name)
    return {name: "\n".join(lines).rstrip() for name, lines in sections.items()}


def format_sections(pairs: list[tuple[str, str]]) -> str:
    return "\n".join(f"{name}: {value}" for name, value in pairs)


# -- typed outputs per agent -------------------------------------------------


@dataclass(frozen=True)
class ManagerOutput:
    plan: str
    subgoal: str


def format_manager(output: ManagerOutput) -> str:
    return format_sections([("PLAN", output.plan), ("SUBGOAL", output.subgoal)])


def parse_manager(text: str) -> ManagerOutput:
    sections = parse_sections(text, required=("PLAN", "SUBGOAL"))
    return ManagerOutput(plan=sections["PLAN"], subgoal=sections["SUBGOAL"])


@dataclass(frozen=True)
class OperatorOutput:
    thought: str
    action_text: str
    expectation: str


def format_operator(output: OperatorOutput) -> str:
    return format_sections(
        [
            ("THOUGHT", output.thought),
            ("ACTION", output.action_text),
            ("EXPECTATION", output.expectation),
        ]
    )


def parse_operator(text: str) -> OperatorOutput:
    sections = parse_sections(text, required=("THOUGHT", "ACTION", "EXPECTATION"))
    action_text = sections["ACTION"].strip()
    if "\n" in action_text:
        raise ResponseParseError("ACTION must be a single line", section="ACTION")
    return OperatorOutput(
        thought=sections["THOUGHT"],
        action_text=action_text,
        expectation=sections["EXPECTATION"],
    )


@dataclass(frozen=True)
class ReflectionOutput:
    outcome: Outcome
    progress: str | None = None
    error_description: str | None = None
    error_cause: str | None = None
    error_fix: str | None = None


def format_reflection(output: ReflectionOutput) -> str:
    pairs = [("OUTCOME", output.outcome.value)]
    if output.outcome is Outcome.A:
        pairs.append(("PROGRESS", output.progress or ""))
    else:
        pairs.append(("ERROR_DESCRIPTION", output.error_description or ""))
        pairs.append(("ERROR_CAUSE", output.error_cause or ""))
        pairs.append(("ERROR_FIX", output.error_fix or ""))
    return format_sections(pairs)


def parse_reflection(text: str) -> ReflectionOutput:
    sections = parse_sections(
        text,
        required=("OUTCOME",),
        optional=("PROGRESS", "ERROR_DESCRIPTION", "ERROR_CAUSE", "ERROR_FIX"),
    )
    raw = sections["OUTCOME"].strip()
    if raw not in ("A", "B", "C"):
        raise ResponseParseError(
            f"OUTCOME must be A, B or C, got {raw!r}", section="OUTCOME"
        )
    outcome = Outcome(raw)
    if outcome is Outcome.A:
        if "PROGRESS" not in sections:
            raise ResponseParseError(
                "outcome A requires a PROGRESS section", section="PROGRESS"
            )
        return ReflectionOutput(outcome=outcome, progress=sections["PROGRESS"])
    for name in ("ERROR_DESCRIPTION", "ERROR_CAUSE", "ERROR_FIX"):
        if name not in sections:
            raise ResponseParseError(
                f"failed outcomes require an {name} section", section=name
            )
    if not sections["ERROR_DESCRIPTION"].strip():
        raise ResponseParseError("ERROR_DESCRIPTION must be non-empty", section="ERROR_DESCRIPTION")
    return ReflectionOutput(
        outcome=outcome,
        error_description=sections["ERROR_DESCRIPTION"],
        error_cause=sections["ERROR_CAUSE"],
        error_fix=sections["ERROR_FIX"],
    )


@dataclass(frozen=True)
class NotesOutput:
    notes: str


def format_notes(output: NotesOutput) -> str:
    return format_sections([("NOTES", output.notes)])


def parse_notes(text: str) -> NotesOutput:
    return NotesOutput(notes=parse_sections(text, required=("NOTES",))["NOTES"])


@dataclass(frozen=True)
class TipsOutput:
    tips: tuple[str, ...]


def format_tips(output: TipsOutput) -> str:
    if not output.tips:
        return "TIPS: none"
    body = "\n".join(f"{i}. {tip}" for i, tip in enumerate(output.tips, start=1))
    return f"TIPS:\n{body}"


def parse_tips(text: str) -> TipsOutput:
    section = parse_sections(text, required=("TIPS",))["TIPS"]
    if section.strip().lower() in ("", "none"):
        return TipsOutput(tips=())
    tips = []
    for line in section.splitlines():
        line = line.strip()
        if not line:
            continue
        match = _NUMBERED_RE.match(line)
        if not match:
            raise ResponseParseError(
                f"tips must be numbered lines, got {line!r}", section="TIPS"
            )
        tips.append(match.group(1))
    return TipsOutput(tips=tuple(tips))


@dataclass(frozen=True)
class ShortcutProposals:
    proposals: tuple[dict, ...]


def format_shortcut_proposals(output: ShortcutProposals) -> str:
    return format_sections([("SHORTCUTS", json.dumps(list(output.proposals)))])


def parse_shortcut_proposals(text: str) -> ShortcutProposals:
    section = parse_sections(text, required=("SHORTCUTS",))["SHORTCUTS"].strip()
    if section.lower() in ("", "none"):
        return ShortcutProposals(proposals=())
    try:
        data = json.loads(section)
    except json.JSONDecodeError as exc:
        raise ResponseParseError(
            f"SHORTCUTS must hold a JSON array: {exc}", section="SHORTCUTS"
        ) from exc
    if not isinstance(data, list) or not all(isinstance(p, dict) for p in data):
        raise ResponseParseError(
            "SHORTCUTS must be a JSON array of objects", section="SHORTCUTS"
        )
    return ShortcutProposals(proposals=tuple(data))


@dataclass(frozen=True)
class TipSelection:
    ids: tuple[int, ...]


def format_tip_selection(output: TipSelection) -> str:
    value = ", ".join(str(i) for i in output.ids) if output.ids else "none"
    return format_sections([("SELECTED_TIPS", value)])


def parse_tip_selection(text: str) -> TipSelection:
    section = parse_sections(text, required=("SELECTED_TIPS",))["SELECTED_TIPS"].strip()
    if section.lower() in ("", "none"):
        return TipSelection(ids=())
    try:
        ids = tuple(int(token.strip()) for token in section.split(",") if token.strip())
    except ValueError as exc:
        raise ResponseParseError(
            f"SELECTED_TIPS must be comma-separated numbers: {section!r}",
            section="SELECTED_TIPS",
        ) from exc
    return TipSelection(ids=ids)


@dataclass(frozen=True)
class ShortcutSelection:
    names: tuple[str, ...]


def format_shortcut_selection(output: ShortcutSelection) -> str:
    value = ", ".join(output.names) if output.names else "none"
    return format_sections([("SELECTED_SHORTCUTS", value)])


def parse_shortcut_selection(text: str) -> ShortcutSelection:
    section = parse_sections(text, required=("SELECTED_SHORTCUTS",))[
        "SELECTED_SHORTCUTS"
    ].strip()
    if section.lower() in ("", "none"):
        return ShortcutSelection(names=())
    names = tuple(token.strip() for token in section.split(",") if token.strip())
    return ShortcutSelection(names=names)
