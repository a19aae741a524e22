"""Cross-task memory agents: the two experience reflectors that update
tips and propose shortcuts at task end, and the two experience retrievers
that select relevant entries when the memory grows large.

Shortcut proposals pass schema validation before admission; rejects are
logged with their rule, never silently dropped.  Retrievers can only
select existing entries: unknown ids or names are dropped with a warning.
"""

from __future__ import annotations

import logging

from ..errors import ResponseParseError, ShortcutValidationError
from ..gateway import Gateway, simple_request
from ..memory import (
    ActionRecord,
    ErrorRecord,
    LongTermMemory,
    Shortcut,
    TaskQuery,
    Tip,
    task_provenance,
)
from ..actions import ActionParseError, parse_template
from ..shortcuts import validate_shortcut
from . import grammar, prompts

log = logging.getLogger(__name__)

TIP_REFLECTOR = "tip_reflector"
SHORTCUT_REFLECTOR = "shortcut_reflector"
TIP_RETRIEVER = "tip_retriever"
SHORTCUT_RETRIEVER = "shortcut_retriever"

_PROPOSAL_KEYS = ("name", "description", "precondition", "arguments", "operations")


def _future_block(future_tasks: list[str]) -> str:
    if not future_tasks:
        return ""
    return prompts.render("future_block", future_tasks=prompts.render_future_tasks(future_tasks))


def evolve_tips(
    gateway: Gateway,
    query: TaskQuery,
    final_plan: str,
    final_progress: str,
    action_history: list[ActionRecord],
    error_history: list[ErrorRecord],
    future_tasks: list[str],
    tips: list[Tip],
) -> list[Tip]:
    """Full-replacement tip update; provenance survives for kept texts."""
    text = prompts.render(
        "tip_reflector",
        query=query.text,
        plan=prompts.or_none(final_plan),
        progress=prompts.or_none(final_progress),
        action_history=prompts.render_action_history(action_history),
        error_history=prompts.render_error_history(error_history),
        future_block=_future_block(future_tasks),
        tips=prompts.render_tips(tips),
    )
    response = gateway.complete(simple_request(TIP_REFLECTOR, text))
    output = grammar.parse_tips(response)
    known = {tip.text: tip.provenance for tip in tips}
    return [
        Tip(id=i, text=tip_text, provenance=known.get(" ".join(tip_text.split()), task_provenance(query.id)))
        for i, tip_text in enumerate(output.tips, start=1)
    ]


def _proposal_to_shortcut(proposal: dict, provenance: str) -> Shortcut:
    missing = [key for key in _PROPOSAL_KEYS if key not in proposal]
    if missing:
        raise ShortcutValidationError(
            "bad_proposal", f"proposal missing key(s): {', '.join(missing)}"
        )
    arguments = proposal["arguments"]
    operations = proposal["operations"]
    if not isinstance(arguments, list) or not all(isinstance(a, str) for a in arguments):
        raise ShortcutValidationError("bad_proposal", "arguments must be a list of names")
    if not isinstance(operations, list) or not all(isinstance(o, str) for o in operations):
        raise ShortcutValidationError("bad_proposal", "operations must be a list of call templates")
    if not isinstance(proposal["name"], str):
        raise ShortcutValidationError("bad_proposal", "name must be a string")
    templates = []
    for template_text in operations:
        try:
            templates.append(parse_template(template_text))
        except ActionParseError as exc:
            raise ShortcutValidationError(
                "template_syntax", f"bad operation template {template_text!r}: {exc}"
            ) from exc
    return Shortcut(
        name=proposal["name"],
        description=str(proposal["description"]),
        precondition=str(proposal["precondition"]),
        arguments=tuple(arguments),
        operations=tuple(templates),
        provenance=provenance,
    )


def evolve_shortcuts(
    gateway: Gateway,
    query: TaskQuery,
    final_plan: str,
    final_progress: str,
    action_history: list[ActionRecord],
    error_history: list[ErrorRecord],
    future_tasks: list[str],
    memory: LongTermMemory,
) -> tuple[list[Shortcut], list[tuple[str, str, str]]]:
    """Propose-and-admit new shortcuts.

    Returns (admitted, rejected) where each rejection is
    ``(name, rule, message)``.  The memory itself is not touched here.
    """
    text = prompts.render(
        "shortcut_reflector",
        query=query.text,
        plan=prompts.or_none(final_plan),
        progress=prompts.or_none(final_progress),
        action_history=prompts.render_action_history(action_history),
        error_history=prompts.render_error_history(error_history),
        future_block=_future_block(future_tasks),
        shortcuts=prompts.render_shortcuts(list(memory.shortcuts.values())),
    )
    response = gateway.complete(simple_request(SHORTCUT_REFLECTOR, text))
    output = grammar.parse_shortcut_proposals(response)

    admitted: list[Shortcut] = []
    rejected: list[tuple[str, str, str]] = []
    provenance = task_provenance(query.id)
    admitted_names = set()
    for proposal in output.proposals:
        name = str(proposal.get("name", "<unnamed>"))
        try:
            shortcut = _proposal_to_shortcut(proposal, provenance)
            validate_shortcut(shortcut)
        except ShortcutValidationError as exc:
            rejected.append((name, exc.rule, str(exc)))
            log.warning("rejected shortcut proposal %r: %s (%s)", name, exc, exc.rule)
            continue
        if shortcut.name in memory.shortcuts or shortcut.name in admitted_names:
            rejected.append((name, "duplicate_name", f"shortcut {name!r} already exists"))
            log.warning("rejected shortcut proposal %r: name already in memory", name)
            continue
        admitted_names.add(shortcut.name)
        admitted.append(shortcut)
    if output.proposals and not admitted:
        log.warning(
            "all %d shortcut proposals for task %s were invalid; memory unchanged",
            len(output.proposals),
            query.id,
        )
    return admitted, rejected


def retrieve_tips(gateway: Gateway, query: TaskQuery, tips: list[Tip]) -> list[Tip]:
    """Select a relevant subset; output is always a subset of the input."""
    text = prompts.render("tip_retriever", query=query.text, tips=prompts.render_tips(tips))
    response = gateway.complete(simple_request(TIP_RETRIEVER, text))
    selection = grammar.parse_tip_selection(response)
    by_id = {tip.id: tip for tip in tips}
    selected = []
    for tip_id in selection.ids:
        if tip_id in by_id:
            selected.append(by_id[tip_id])
        else:
            log.warning("tip retriever selected unknown tip id %d; dropped", tip_id)
    return selected


def retrieve_shortcuts(
    gateway: Gateway, query: TaskQuery, shortcuts: list[Shortcut]
) -> list[Shortcut]:
    text = prompts.render(
        "shortcut_retriever",
        query=query.text,
        shortcuts=prompts.render_shortcuts(shortcuts),
    )
    response = gateway.complete(simple_request(SHORTCUT_RETRIEVER, text))
    selection = grammar.parse_shortcut_selection(response)
    by_name = {s.name: s for s in shortcuts}
    selected = []
    for name in selection.names:
        if name in by_name:
            selected.append(by_name[name])
        else:
            log.warning("shortcut retriever selected unknown shortcut %r; dropped", name)
    return selected
