"""Working and long-term memory types plus the on-disk memory file grammar.

The long-term memory file is a single human-readable text file with two
sections.  Shortcuts are keyed records; tips are a numbered list.  Each
entry carries a provenance token, ``seed`` or ``task:<task-id>``::

    format: memory/1

    [shortcuts]

    name: Tap_Type_and_Enter
    description: Tap a text box, type the given text, and press enter.
    precondition: The current screen shows a text input box.
    arguments: x, y, text
    operations:
      Tap(x, y)
      Type(text)
      Enter()
    provenance: seed

    [tips]

    1. (seed) Use the search box at the top of the page for lookups.

``save``/``load`` round-trip byte-identically: loading a saved file and
saving it again reproduces the same bytes.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

from .actions import Action, OperationTemplate, format_template, parse_template
from .errors import ActionParseError, MemoryFormatError

SEED_PROVENANCE = "seed"
_PROVENANCE_RE = re.compile(r"^(seed|task:\S+)$")


def task_provenance(task_id: str) -> str:
    return f"task:{task_id}"


def _check_provenance(value: str, where: str) -> str:
    if not _PROVENANCE_RE.match(value):
        raise MemoryFormatError(
            f"{where}: provenance must be 'seed' or 'task:<id>', got {value!r}",
            field="provenance",
        )
    return value


def _single_line(value: str) -> str:
    """Collapse whitespace runs so the value is safe on one grammar line."""
    return " ".join(value.split())


@dataclass(frozen=True)
class TaskQuery:
    """One benchmark task: an id, the instruction text, and a scenario tag."""

    id: str
    text: str
    scenario: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("task query text must be non-empty")


@dataclass(frozen=True)
class Tip:
    """A numbered natural-language guidance entry.

    Text is whitespace-normalized to one line so values round-trip the
    file grammar losslessly.
    """

    id: int
    text: str
    provenance: str = SEED_PROVENANCE

    def __post_init__(self) -> None:
        object.__setattr__(self, "text", _single_line(self.text))
        if not self.text:
            raise ValueError("tip text must be non-empty")


@dataclass(frozen=True)
class Shortcut:
    """A named macro: atomic operation templates behind a precondition."""

    name: str
    description: str
    precondition: str
    arguments: tuple[str, ...]
    operations: tuple[OperationTemplate, ...]
    provenance: str = SEED_PROVENANCE

    def __post_init__(self) -> None:
        object.__setattr__(self, "description", _single_line(self.description))
        object.__setattr__(self, "precondition", _single_line(self.precondition))


class Outcome(enum.Enum):
    """Action reflector verdicts."""

    A = "A"  # successful or partially successful
    B = "B"  # failed: landed on a wrong page
    C = "C"  # failed: produced no change

    @property
    def is_error(self) -> bool:
        return self is not Outcome.A


@dataclass(frozen=True)
class ActionRecord:
    step_index: int
    action: Action
    outcome: Outcome
    expectation: str = ""


@dataclass(frozen=True)
class ErrorRecord:
    step_index: int
    description: str
    suspected_cause: str = ""
    suggested_fix: str = ""

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise ValueError("error description must be non-empty")


def trailing_error_run(outcomes: list[Outcome]) -> int:
    """Length of the trailing run of failed outcomes (B or C)."""
    run = 0
    for outcome in reversed(outcomes):
        if not outcome.is_error:
            break
        run += 1
    return run


@dataclass
class WorkingMemory:
    """Per-task mutable state; confined to a single task run."""

    plan: str = ""
    subgoal: str = ""
    progress: str = ""
    notes: str = ""
    escalation_flag: bool = False
    action_history: list[ActionRecord] = field(default_factory=list)
    error_history: list[ErrorRecord] = field(default_factory=list)

    def outcomes(self) -> list[Outcome]:
        return [record.outcome for record in self.action_history]

    def record(
        self,
        action_record: ActionRecord,
        error_record: ErrorRecord | None,
        k_escalation: int,
    ) -> None:
        """Append a step outcome and refresh the escalation flag.

        Histories are append-only; the flag is true exactly when the
        trailing run of failed outcomes reaches ``k_escalation``.
        """
        if action_record.outcome.is_error and error_record is None:
            raise ValueError("failed outcomes require an error record")
        if not action_record.outcome.is_error and error_record is not None:
            raise ValueError("successful outcomes must not carry an error record")
        self.action_history.append(action_record)
        if error_record is not None:
            self.error_history.append(error_record)
        self.escalation_flag = trailing_error_run(self.outcomes()) >= k_escalation


def history_window(
    memory: WorkingMemory, m: int
) -> tuple[list[ActionRecord], list[ErrorRecord]]:
    """Return the latest ``m`` action and error records, order preserved."""
    if m < 1:
        raise ValueError("history window must be at least 1")
    return memory.action_history[-m:], memory.error_history[-m:]


@dataclass
class LongTermMemory:
    """Persistent cross-task store of tips and shortcuts."""

    shortcuts: dict[str, Shortcut] = field(default_factory=dict)
    tips: list[Tip] = field(default_factory=list)

    def add_shortcut(self, shortcut: Shortcut) -> None:
        if shortcut.name in self.shortcuts:
            raise ValueError(f"shortcut name {shortcut.name!r} already present")
        self.shortcuts[shortcut.name] = shortcut

    def replace_tips(self, tips: list[Tip]) -> None:
        """Install a full replacement tip list, renumbered densely from 1."""
        self.tips = [
            Tip(id=i, text=tip.text, provenance=tip.provenance)
            for i, tip in enumerate(tips, start=1)
        ]

    def shortcut_argument_names(self) -> dict[str, tuple[str, ...]]:
        return {name: sc.arguments for name, sc in self.shortcuts.items()}


# ---------------------------------------------------------------------------
# File grammar
# ---------------------------------------------------------------------------

_FORMAT_LINE = "format: memory/1"
_SHORTCUT_KEYS = ("name", "description", "precondition", "arguments", "operations", "provenance")
_TIP_RE = re.compile(r"^(\d+)\.\s+\(([^)]+)\)\s+(\S.*)$")


def _format_shortcut(shortcut: Shortcut) -> list[str]:
    lines = [
        f"name: {shortcut.name}",
        f"description: {_single_line(shortcut.description)}",
        f"precondition: {_single_line(shortcut.precondition)}",
        "arguments: " + ", ".join(shortcut.arguments) if shortcut.arguments else "arguments:",
        "operations:",
    ]
    lines.extend(f"  {format_template(t)}" for t in shortcut.operations)
    lines.append(f"provenance: {shortcut.provenance}")
    return lines


def format_shortcut_record(shortcut: Shortcut, include_provenance: bool = True) -> str:
    lines = _format_shortcut(shortcut)
    if not include_provenance:
        lines = lines[:-1]
    return "\n".join(lines)


def dumps_memory(memory: LongTermMemory) -> str:
    out: list[str] = [_FORMAT_LINE, "", "[shortcuts]"]
    for shortcut in memory.shortcuts.values():
        out.append("")
        out.extend(_format_shortcut(shortcut))
    out.extend(["", "[tips]", ""])
    for tip in memory.tips:
        out.append(f"{tip.id}. ({tip.provenance}) {_single_line(tip.text)}")
    return "\n".join(out) + "\n"


def save_memory(memory: LongTermMemory, path: str | Path) -> None:
    Path(path).write_text(dumps_memory(memory), encoding="utf-8")


def _parse_shortcut_block(fields: dict[str, str], ops: list[str]) -> Shortcut:
    name = fields.get("name", "")
    for key in ("name", "description", "precondition", "provenance"):
        if key not in fields:
            raise MemoryFormatError(
                f"shortcut {name or '<unnamed>'}: missing key {key!r}", field=key
            )
    if "arguments" not in fields:
        raise MemoryFormatError(f"shortcut {name}: missing key 'arguments'", field="arguments")
    raw_args = fields["arguments"].strip()
    arguments = tuple(a.strip() for a in raw_args.split(",") if a.strip()) if raw_args else ()
    templates = []
    for line in ops:
        try:
            templates.append(parse_template(line))
        except ActionParseError as exc:
            raise MemoryFormatError(
                f"shortcut {name}: bad operation template {line!r}: {exc}",
                field="operations",
            ) from exc
    return Shortcut(
        name=name,
        description=fields["description"],
        precondition=fields["precondition"],
        arguments=arguments,
        operations=tuple(templates),
        provenance=_check_provenance(fields["provenance"], f"shortcut {name}"),
    )


def loads_memory(text: str) -> LongTermMemory:
    lines = text.splitlines()
    idx = 0
    while idx < len(lines) and (not lines[idx].strip() or lines[idx].lstrip().startswith("#")):
        idx += 1
    if idx >= len(lines) or lines[idx].strip() != _FORMAT_LINE:
        raise MemoryFormatError(
            f"expected header {_FORMAT_LINE!r} on the first line", field="format"
        )
    idx += 1

    memory = LongTermMemory()
    section: str | None = None
    fields: dict[str, str] = {}
    ops: list[str] = []
    in_ops = False
    tip_numbers: list[int] = []

    def flush_shortcut() -> None:
        nonlocal fields, ops, in_ops
        if not fields and not ops:
            return
        shortcut = _parse_shortcut_block(fields, ops)
        if shortcut.name in memory.shortcuts:
            raise MemoryFormatError(
                f"duplicate shortcut name {shortcut.name!r}", field="name"
            )
        memory.shortcuts[shortcut.name] = shortcut
        fields, ops, in_ops = {}, [], False

    for raw in lines[idx:]:
        stripped = raw.strip()
        if stripped.startswith("#"):
            continue
        if stripped in ("[shortcuts]", "[tips]"):
            flush_shortcut()
            section = stripped[1:-1]
            continue
        if not stripped:
            if section == "shortcuts":
                flush_shortcut()
            continue
        if section == "shortcuts":
            if raw.startswith("  ") and in_ops:
                ops.append(stripped)
                continue
            in_ops = False
            key, sep, value = raw.partition(":")
            key = key.strip()
            if not sep or key not in _SHORTCUT_KEYS:
                raise MemoryFormatError(
                    f"unexpected line in [shortcuts]: {raw!r}", field=key or None
                )
            if key in fields or (key == "operations" and ops):
                raise MemoryFormatError(
                    f"shortcut {fields.get('name', '<unnamed>')}: duplicate key {key!r}",
                    field=key,
                )
            if key == "operations":
                if value.strip():
                    raise MemoryFormatError(
                        "operations templates belong on indented lines", field="operations"
                    )
                fields[key] = ""
                in_ops = True
            else:
                fields[key] = value.strip()
        elif section == "tips":
            match = _TIP_RE.match(stripped)
            if not match:
                raise MemoryFormatError(f"bad tip line: {stripped!r}", field="tips")
            number = int(match.group(1))
            provenance = _check_provenance(match.group(2), f"tip {number}")
            memory.tips.append(Tip(id=number, text=match.group(3), provenance=provenance))
            tip_numbers.append(number)
        else:
            raise MemoryFormatError(f"content before any section: {raw!r}")

    flush_shortcut()
    if tip_numbers != list(range(1, len(tip_numbers) + 1)):
        raise MemoryFormatError(
            "tip ids must be dense and start at 1", field="tips"
        )
    return memory


def load_memory(path: str | Path) -> LongTermMemory:
    """Load and fully validate a long-term memory file.

    Every shortcut must pass schema validation; a file that decodes but
    holds an invalid shortcut is rejected.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"memory file not found: {path}")
    memory = loads_memory(path.read_text(encoding="utf-8"))
    from .shortcuts import validate_shortcut  # local import, avoids a cycle

    for shortcut in memory.shortcuts.values():
        validate_shortcut(shortcut)
    return memory
