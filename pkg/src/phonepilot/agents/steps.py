"""The four in-loop reasoning agents: manager, operator, action reflector,
and notetaker.  Each is a thin deterministic shell: build a prompt from
working state, call the model gateway, and parse the labeled-section
response.

The manager deliberately never sees the fine-grained perception list; the
operator always does, along with the latest ``m`` history records.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..actions import Action, parse_action
from ..device.base import ScreenState
from ..gateway import Gateway, simple_request
from ..memory import (
    ActionRecord,
    ErrorRecord,
    Outcome,
    Shortcut,
    TaskQuery,
    Tip,
    WorkingMemory,
    history_window,
)
from ..perception import PerceptionResult
from . import grammar, prompts

MANAGER = "manager"
OPERATOR = "operator"
ACTION_REFLECTOR = "action_reflector"
NOTETAKER = "notetaker"


def manager_step(
    gateway: Gateway,
    query: TaskQuery,
    screen: ScreenState,
    wm: WorkingMemory,
    shortcuts: list[Shortcut],
    escalation_errors: list[ErrorRecord] | None,
    k_escalation: int,
) -> grammar.ManagerOutput:
    """Update the plan and pick the next subgoal.

    ``escalation_errors`` must be exactly the trailing ``k`` error records
    and must be present iff the escalation flag was raised.
    """
    if escalation_errors is not None:
        escalation_block = prompts.render(
            "manager_escalation",
            errors=prompts.render_error_history(escalation_errors),
            k=str(k_escalation),
        )
    else:
        escalation_block = ""
    text = prompts.render(
        "manager",
        query=query.text,
        shortcuts=prompts.render_shortcuts(shortcuts),
        prior_plan=prompts.or_none(wm.plan),
        prior_subgoal=prompts.or_none(wm.subgoal),
        progress=prompts.or_none(wm.progress),
        notes=prompts.or_none(wm.notes),
        escalation_block=escalation_block,
    )
    response = gateway.complete(simple_request(MANAGER, text, images=[screen.image]))
    return grammar.parse_manager(response)


@dataclass(frozen=True)
class OperatorDecision:
    action: Action
    thought: str
    expectation: str


def operator_step(
    gateway: Gateway,
    query: TaskQuery,
    screen: ScreenState,
    perception: PerceptionResult,
    plan: str,
    subgoal: str,
    wm: WorkingMemory,
    m_history_window: int,
    tips: list[Tip],
    shortcuts: list[Shortcut],
) -> OperatorDecision:
    """Decide the next concrete action (atomic, shortcut call, or Stop)."""
    actions, errors = history_window(wm, m_history_window)
    text = prompts.render(
        "operator",
        query=query.text,
        plan=prompts.or_none(plan),
        subgoal=prompts.or_none(subgoal),
        progress=prompts.or_none(wm.progress),
        notes=prompts.or_none(wm.notes),
        perception=perception.render_text(),
        tips=prompts.render_tips(tips),
        shortcuts=prompts.render_shortcuts(shortcuts),
        m=str(m_history_window),
        action_history=prompts.render_action_history(actions),
        error_history=prompts.render_error_history(errors),
    )
    response = gateway.complete(simple_request(OPERATOR, text, images=[screen.image]))
    output = grammar.parse_operator(response)
    action = parse_action(
        output.action_text,
        shortcut_args={s.name: s.arguments for s in shortcuts},
    )
    return OperatorDecision(
        action=action, thought=output.thought, expectation=output.expectation
    )


def reflect_action(
    gateway: Gateway,
    query: TaskQuery,
    before: ScreenState,
    before_perception: PerceptionResult,
    after: ScreenState,
    after_perception: PerceptionResult,
    action: Action,
    expectation: str,
    subgoal: str,
    prior_progress: str,
    step_index: int,
) -> tuple[ActionRecord, ErrorRecord | None, str]:
    """Classify the action outcome; returns the records and the progress.

    Progress only advances on outcome A; failed outcomes keep the prior
    progress and add an error record instead.
    """
    from ..actions import format_action

    text = prompts.render(
        "reflector",
        query=query.text,
        subgoal=prompts.or_none(subgoal),
        progress=prompts.or_none(prior_progress),
        action=format_action(action),
        expectation=prompts.or_none(expectation),
        before_perception=before_perception.render_text(),
        after_perception=after_perception.render_text(),
    )
    response = gateway.complete(
        simple_request(ACTION_REFLECTOR, text, images=[before.image, after.image])
    )
    output = grammar.parse_reflection(response)
    record = ActionRecord(
        step_index=step_index,
        action=action,
        outcome=output.outcome,
        expectation=expectation,
    )
    if output.outcome is Outcome.A:
        return record, None, output.progress or prior_progress
    error = ErrorRecord(
        step_index=step_index,
        description=output.error_description or "",
        suspected_cause=output.error_cause or "",
        suggested_fix=output.error_fix or "",
    )
    return record, error, prior_progress


def take_notes(
    gateway: Gateway,
    query: TaskQuery,
    after: ScreenState,
    after_perception: PerceptionResult,
    plan: str,
    subgoal: str,
    progress: str,
    prior_notes: str,
) -> str:
    """Aggregate task-relevant information from the post-action screen."""
    text = prompts.render(
        "notetaker",
        query=query.text,
        plan=prompts.or_none(plan),
        subgoal=prompts.or_none(subgoal),
        progress=prompts.or_none(progress),
        perception=after_perception.render_text(),
        notes=prompts.or_none(prior_notes),
    )
    response = gateway.complete(simple_request(NOTETAKER, text, images=[after.image]))
    return grammar.parse_notes(response).notes
