"""Shortcut macro engine: schema validation, argument binding, the
precondition gate, and expansion against a device session.

Validation is purely static.  A shortcut can be schema-valid yet
semantically insufficient (for example a switch-and-search macro that
forgets the tap which enters the target app); that class of defect is
not detectable here and surfaces at run time as a failed outcome.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .actions import (
    ATOMIC_OPS,
    RESERVED_ACTION_NAMES,
    AtomicOperation,
    SlotRef,
    _build_atomic,
)
from .device.base import DeviceSession, ScreenState
from .errors import BindingError, DeviceError, ShortcutValidationError
from .memory import Shortcut
from .perception import PerceptionResult

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

# Precondition phrases that imply a text input box must be on screen.
_TEXT_FIELD_HINTS = ("text input", "input box", "search bar", "search box", "text field", "text box")


def validate_shortcut(candidate: Shortcut) -> Shortcut:
    """Check every static schema rule; raises with a distinct rule code.

    Rule codes: ``invalid_name``, ``name_collision``, ``missing_precondition``,
    ``empty_sequence``, ``duplicate_argument``, ``unknown_operation``,
    ``arity_mismatch``, ``literal_kind``, ``unknown_slot_reference``,
    ``conflicting_kinds``, ``unused_argument``.
    """
    if not _IDENT_RE.match(candidate.name):
        raise ShortcutValidationError(
            "invalid_name", f"shortcut name {candidate.name!r} is not a valid identifier"
        )
    if candidate.name in RESERVED_ACTION_NAMES:
        raise ShortcutValidationError(
            "name_collision", f"shortcut name {candidate.name!r} collides with an atomic operation"
        )
    if not candidate.precondition.strip():
        raise ShortcutValidationError(
            "missing_precondition", f"shortcut {candidate.name} has no precondition"
        )
    if not candidate.operations:
        raise ShortcutValidationError(
            "empty_sequence", f"shortcut {candidate.name} has an empty operation sequence"
        )
    seen_args = set()
    for arg in candidate.arguments:
        if not _IDENT_RE.match(arg):
            raise ShortcutValidationError(
                "invalid_name", f"shortcut {candidate.name}: bad argument name {arg!r}"
            )
        if arg in seen_args:
            raise ShortcutValidationError(
                "duplicate_argument", f"shortcut {candidate.name}: argument {arg!r} declared twice"
            )
        seen_args.add(arg)

    used: set[str] = set()
    slot_kinds: dict[str, str] = {}
    for template in candidate.operations:
        if template.op not in ATOMIC_OPS:
            raise ShortcutValidationError(
                "unknown_operation",
                f"shortcut {candidate.name}: {template.op!r} is not an atomic operation",
            )
        _, arg_names, arg_kinds = ATOMIC_OPS[template.op]
        if len(template.args) != len(arg_names):
            raise ShortcutValidationError(
                "arity_mismatch",
                f"shortcut {candidate.name}: {template.op} takes {len(arg_names)} "
                f"argument(s), template has {len(template.args)}",
            )
        for value, kind in zip(template.args, arg_kinds):
            if isinstance(value, SlotRef):
                if value.name not in seen_args:
                    raise ShortcutValidationError(
                        "unknown_slot_reference",
                        f"shortcut {candidate.name}: slot {value.name!r} is not a declared argument",
                    )
                used.add(value.name)
                previous = slot_kinds.setdefault(value.name, kind)
                if previous != kind:
                    raise ShortcutValidationError(
                        "conflicting_kinds",
                        f"shortcut {candidate.name}: argument {value.name!r} is used both "
                        f"as {previous} and as {kind}",
                    )
            else:
                ok = isinstance(value, (int, float)) if kind == "number" else isinstance(value, str)
                if not ok:
                    raise ShortcutValidationError(
                        "literal_kind",
                        f"shortcut {candidate.name}: literal {value!r} does not fit a {kind} slot "
                        f"of {template.op}",
                    )
    unused = [a for a in candidate.arguments if a not in used]
    if unused:
        raise ShortcutValidationError(
            "unused_argument",
            f"shortcut {candidate.name}: declared argument(s) never referenced: "
            + ", ".join(unused),
        )
    return candidate


def argument_kinds(shortcut: Shortcut) -> dict[str, str]:
    """Expected value kind per argument, inferred from the slots using it."""
    kinds: dict[str, str] = {}
    for template in shortcut.operations:
        _, _, arg_kinds = ATOMIC_OPS[template.op]
        for value, kind in zip(template.args, arg_kinds):
            if isinstance(value, SlotRef):
                kinds.setdefault(value.name, kind)
    return kinds


def bind_arguments(
    shortcut: Shortcut, values: Mapping[str, int | float | str]
) -> list[AtomicOperation]:
    """Substitute argument values into the templates.

    ``values`` must cover exactly the declared arguments with the right
    kinds; there are no defaults.
    """
    declared = set(shortcut.arguments)
    for name in values:
        if name not in declared:
            raise BindingError(name, f"shortcut {shortcut.name} has no argument {name!r}")
    for name in shortcut.arguments:
        if name not in values:
            raise BindingError(name, f"missing value for argument {name!r}")
    kinds = argument_kinds(shortcut)
    for name, kind in kinds.items():
        value = values[name]
        ok = isinstance(value, (int, float)) if kind == "number" else isinstance(value, str)
        if not ok:
            raise BindingError(
                name, f"argument {name!r} must be a {kind}, got {type(value).__name__}"
            )
    operations: list[AtomicOperation] = []
    for template in shortcut.operations:
        resolved = [
            values[v.name] if isinstance(v, SlotRef) else v for v in template.args
        ]
        operations.append(_build_atomic(template.op, resolved))
    return operations


@dataclass(frozen=True)
class GateDecision:
    allowed: bool
    reason: str | None = None


def gate_precondition(
    shortcut: Shortcut,
    perception: PerceptionResult,
    subgoal: str,
    strict: bool = False,
) -> GateDecision:
    """Decide whether the shortcut may fire in the current state.

    The default (model-mediated) gate allows: the operator's response has
    already asserted the precondition.  The strict heuristic gate is a
    deterministic oracle for tests: it denies when the precondition talks
    about a text input box and perception shows no text field.
    """
    if not strict:
        return GateDecision(allowed=True)
    precondition = shortcut.precondition.lower()
    needs_field = any(hint in precondition for hint in _TEXT_FIELD_HINTS)
    if needs_field and not perception.has_text_field():
        return GateDecision(
            allowed=False,
            reason=(
                f"precondition of {shortcut.name} requires a text input box "
                "but no text field is on the current screen"
            ),
        )
    return GateDecision(allowed=True)


@dataclass
class ShortcutExecution:
    """Result of expanding a bound sequence against a device.

    ``trace`` starts with the pre-execution screen and gains one entry per
    executed operation; on failure ``failure_index`` is the offset of the
    operation that raised, and the trace ends at the last reached screen.
    The whole expansion counts as a single decision iteration.
    """

    trace: list[ScreenState]
    failure_index: int | None = None
    error: str | None = None
    decision_iterations: int = 1

    @property
    def final_state(self) -> ScreenState:
        return self.trace[-1]

    @property
    def ok(self) -> bool:
        return self.failure_index is None


def execute_shortcut(
    session: DeviceSession, operations: Sequence[AtomicOperation]
) -> ShortcutExecution:
    """Run the bound sequence without intermediate agent calls."""
    if not operations:
        raise ValueError("bound operation sequence must be non-empty")
    trace = [session.capture()]
    for index, op in enumerate(operations):
        try:
            trace.append(session.execute(op))
        except DeviceError as exc:
            return ShortcutExecution(trace=trace, failure_index=index, error=str(exc))
    return ShortcutExecution(trace=trace)
