"""The per-task agent loop and the cross-task evolution protocol.

One decision step runs: capture -> perceive -> manager (with the trailing
error records iff the escalation flag is up) -> operator -> precondition
gate for shortcut calls -> execute -> capture + perceive -> reflect ->
notetake.  The loop ends on the operator's explicit Stop action or on one
of the termination conditions, checked in fixed priority order:
parse/other error, iteration cap, consecutive-error cap, repeated-action
cap (identical variant and arguments; swipes and backs exempt).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .actions import (
    Action,
    ActionParseError,
    ShortcutInvocation,
    Stop,
    format_action,
    is_repeat_exempt,
)
from .agents import (
    evolve_shortcuts,
    evolve_tips,
    manager_step,
    operator_step,
    reflect_action,
    retrieve_shortcuts,
    retrieve_tips,
    take_notes,
)
from .config import OrchestratorConfig
from .device.base import DeviceSession, ScreenState
from .errors import (
    BindingError,
    DeviceError,
    PerceptionError,
    ResponseParseError,
    TransportError,
)
from .gateway import Gateway, ModelBackend
from .memory import (
    ActionRecord,
    ErrorRecord,
    LongTermMemory,
    Outcome,
    TaskQuery,
    WorkingMemory,
    dumps_memory,
    save_memory,
)
from .perception import PerceptionResult
from .shortcuts import bind_arguments, execute_shortcut, gate_precondition
from .trajectory import ExitReason, StepRecord, Trajectory, TrajectoryWriter

log = logging.getLogger(__name__)

ParseFailure = (ResponseParseError, ActionParseError, BindingError)


@dataclass
class Scenario:
    """An ordered task sequence sharing one long-term memory."""

    name: str
    tasks: list[TaskQuery]


@dataclass
class ScenarioResult:
    trajectories: list[Trajectory]
    memory: LongTermMemory
    task_dirs: list[Path] = field(default_factory=list)


def trailing_repeat_run(records: Sequence[ActionRecord]) -> int:
    """Length of the trailing run of identical actions, 0 for exempt ops."""
    if not records:
        return 0
    last = records[-1].action
    if is_repeat_exempt(last):
        return 0
    run = 0
    for record in reversed(records):
        if record.action != last:
            break
        run += 1
    return run


def check_termination(
    records: Sequence[ActionRecord],
    parse_error: bool,
    step_count: int,
    config: OrchestratorConfig,
) -> ExitReason | None:
    """Evaluate the exit conditions in fixed priority order."""
    if parse_error:
        return ExitReason.OTHER_ERROR
    if step_count >= config.max_iterations:
        return ExitReason.MAX_ITERATIONS
    trailing_errors = 0
    for record in reversed(records):
        if not record.outcome.is_error:
            break
        trailing_errors += 1
    if trailing_errors >= config.max_consecutive_errors:
        return ExitReason.MAX_CONSECUTIVE_ERRORS
    if trailing_repeat_run(records) > config.max_repeated_actions:
        return ExitReason.MAX_REPEATED_ACTIONS
    return None


def _perception_to_dict(perception: PerceptionResult) -> list[dict]:
    return [
        {
            "kind": e.kind,
            "content": e.content,
            "center": list(e.center),
            "box": list(e.box),
        }
        for e in perception.elements
    ]


class _TaskRun:
    """State for one task execution; keeps run_task readable."""

    def __init__(
        self,
        query: TaskQuery,
        config: OrchestratorConfig,
        device: DeviceSession,
        perceptor,
        gateway: Gateway,
        memory: LongTermMemory,
        writer: TrajectoryWriter | None,
    ):
        self.query = query
        self.config = config
        self.device = device
        self.perceptor = perceptor
        self.gateway = gateway
        self.memory = memory
        self.writer = writer
        self.wm = WorkingMemory()
        self.trajectory = Trajectory(task_id=query.id)

    def screen_ref(self, screen: ScreenState) -> str:
        return self.writer.save_screen(screen) if self.writer else ""

    def perceive_with_retry(self, screen: ScreenState) -> PerceptionResult:
        """Remote perception gets one retry; failure bubbles to the caller."""
        try:
            return self.perceptor.perceive(screen)
        except PerceptionError as exc:
            log.warning("perception failed, retrying once: %s", exc)
            return self.perceptor.perceive(screen)

    def memory_views(self) -> tuple[list, list]:
        """Full memory below the retrieval thresholds, selections above."""
        tips = self.memory.tips
        if len(tips) > self.config.retrieval_tip_threshold:
            tips = retrieve_tips(self.gateway, self.query, tips)
        shortcuts = list(self.memory.shortcuts.values())
        if len(shortcuts) > self.config.retrieval_shortcut_threshold:
            shortcuts = retrieve_shortcuts(self.gateway, self.query, shortcuts)
        return tips, shortcuts


def run_task(
    query: TaskQuery,
    config: OrchestratorConfig,
    device: DeviceSession,
    perceptor,
    backend: ModelBackend | Gateway,
    memory: LongTermMemory,
    out_dir: Path | None = None,
    evolve: bool = False,
    future_tasks: Sequence[str] = (),
    scenario: str = "",
) -> Trajectory:
    """Run the full agent loop for one task and persist its trajectory."""
    gateway = backend if isinstance(backend, Gateway) else Gateway(backend)
    writer = TrajectoryWriter(out_dir) if out_dir is not None else None
    if writer is not None:
        gateway.set_audit_dir(writer.model_call_dir)
    memory_before = dumps_memory(memory)
    if writer is not None:
        writer.save_memory_snapshot("before", memory_before)

    run = _TaskRun(query, config, device, perceptor, gateway, memory, writer)
    started = time.perf_counter()
    tips_view, shortcuts_view = run.memory_views()

    screen = device.capture()
    screen_ref = run.screen_ref(screen)
    trajectory = run.trajectory
    evolution_summary: dict | None = None

    def finish(reason: ExitReason, detail: str) -> None:
        trajectory.exit_reason = reason
        trajectory.exit_detail = detail

    while trajectory.exit_reason is None:
        step_started = time.perf_counter()
        step_index = trajectory.step_count
        try:
            perception = run.perceive_with_retry(screen)
        except PerceptionError as exc:
            _record_perception_failure(run, step_index, screen, screen_ref, str(exc))
            trajectory.step_timings.append(time.perf_counter() - step_started)
            reason = check_termination(
                run.wm.action_history, False, trajectory.step_count, config
            )
            if reason is not None:
                finish(reason, "perception kept failing")
            continue

        escalation = (
            run.wm.error_history[-config.k_escalation:] if run.wm.escalation_flag else None
        )
        try:
            manager_out = manager_step(
                gateway, query, screen, run.wm, shortcuts_view, escalation, config.k_escalation
            )
            run.wm.plan, run.wm.subgoal = manager_out.plan, manager_out.subgoal
            decision = operator_step(
                gateway,
                query,
                screen,
                perception,
                run.wm.plan,
                run.wm.subgoal,
                run.wm,
                config.m_history_window,
                tips_view,
                shortcuts_view,
            )
        except ParseFailure as exc:
            finish(check_termination([], True, 0, config), f"agent response unusable: {exc}")
            break
        except TransportError as exc:
            finish(ExitReason.OTHER_ERROR, f"model transport failure: {exc}")
            break

        if isinstance(decision.action, Stop):
            record = StepRecord(
                index=step_index,
                pre_screen=screen_ref,
                perception=_perception_to_dict(perception),
                plan=run.wm.plan,
                subgoal=run.wm.subgoal,
                action=format_action(decision.action),
                expectation=decision.expectation,
                post_screen=screen_ref,
                outcome=None,
                error=None,
                notes=run.wm.notes,
                progress=run.wm.progress,
            )
            trajectory.steps.append(record)
            if writer:
                writer.save_step(record)
            trajectory.step_timings.append(time.perf_counter() - step_started)
            finish(ExitReason.SELF_REPORTED_SUCCESS, decision.action.message)
            break

        try:
            outcome_override, post_screen, trace_refs, failure_index = _execute_decision(
                run, decision.action, perception, screen
            )
        except ParseFailure as exc:
            finish(check_termination([], True, 0, config), f"action not executable: {exc}")
            break
        except DeviceError as exc:
            finish(ExitReason.OTHER_ERROR, f"device failure: {exc}")
            break

        post_ref = run.screen_ref(post_screen)
        if outcome_override is not None:
            action_record, error_record, progress = outcome_override(step_index)
        else:
            try:
                post_perception = run.perceive_with_retry(post_screen)
            except PerceptionError as exc:
                post_perception = PerceptionResult()
                log.warning("post-action perception failed twice: %s", exc)
            try:
                action_record, error_record, progress = reflect_action(
                    gateway,
                    query,
                    screen,
                    perception,
                    post_screen,
                    post_perception,
                    decision.action,
                    decision.expectation,
                    run.wm.subgoal,
                    run.wm.progress,
                    step_index,
                )
                run.wm.progress = progress
                run.wm.notes = take_notes(
                    gateway,
                    query,
                    post_screen,
                    post_perception,
                    run.wm.plan,
                    run.wm.subgoal,
                    run.wm.progress,
                    run.wm.notes,
                )
            except ParseFailure as exc:
                finish(check_termination([], True, 0, config), f"agent response unusable: {exc}")
                break
        run.wm.record(action_record, error_record, config.k_escalation)

        record = StepRecord(
            index=step_index,
            pre_screen=screen_ref,
            perception=_perception_to_dict(perception),
            plan=run.wm.plan,
            subgoal=run.wm.subgoal,
            action=format_action(decision.action),
            expectation=decision.expectation,
            post_screen=post_ref,
            outcome=action_record.outcome.value,
            error=(
                {
                    "description": error_record.description,
                    "suspected_cause": error_record.suspected_cause,
                    "suggested_fix": error_record.suggested_fix,
                }
                if error_record
                else None
            ),
            notes=run.wm.notes,
            progress=run.wm.progress,
            shortcut_trace=trace_refs,
            shortcut_failure_index=failure_index,
            gate_denied=outcome_override is not None,
        )
        trajectory.steps.append(record)
        if writer:
            writer.save_step(record)
        trajectory.step_timings.append(time.perf_counter() - step_started)

        screen, screen_ref = post_screen, post_ref
        reason = check_termination(
            run.wm.action_history, False, trajectory.step_count, config
        )
        if reason is not None:
            finish(reason, f"termination condition: {reason.value}")

    if evolve:
        evolution_summary = _run_evolution(run, list(future_tasks))

    memory_after = dumps_memory(memory)
    if writer is not None:
        writer.save_memory_snapshot("after", memory_after)
        writer.save_manifest(
            trajectory, config, scenario or query.scenario, memory_before, memory_after,
            evolution_summary,
        )
        writer.save_timings(trajectory, time.perf_counter() - started)
    return trajectory


def _record_perception_failure(
    run: _TaskRun, step_index: int, screen: ScreenState, screen_ref: str, detail: str
) -> None:
    """A step that could not even perceive counts as a no-change failure."""
    from .actions import Wait

    record = ActionRecord(
        step_index=step_index, action=Wait(), outcome=Outcome.C, expectation=""
    )
    error = ErrorRecord(
        step_index=step_index,
        description=f"perception unavailable: {detail}",
        suspected_cause="perception service failure",
        suggested_fix="wait and retry once the service recovers",
    )
    run.wm.record(record, error, run.config.k_escalation)
    step = StepRecord(
        index=step_index,
        pre_screen=screen_ref,
        perception=[],
        plan=run.wm.plan,
        subgoal=run.wm.subgoal,
        action=format_action(record.action),
        expectation="",
        post_screen=screen_ref,
        outcome=Outcome.C.value,
        error={
            "description": error.description,
            "suspected_cause": error.suspected_cause,
            "suggested_fix": error.suggested_fix,
        },
        notes=run.wm.notes,
        progress=run.wm.progress,
    )
    run.trajectory.steps.append(step)
    if run.writer:
        run.writer.save_step(step)


def _execute_decision(
    run: _TaskRun, action: Action, perception: PerceptionResult, screen: ScreenState
) -> tuple[Callable | None, ScreenState, list[str], int | None]:
    """Execute an atomic action or an (optionally gated) shortcut.

    Returns (outcome_override, post_screen, trace_refs, failure_index).
    ``outcome_override`` is set when the gate denied the invocation: the
    step is recorded as a no-change failure without touching the device.
    """
    if not isinstance(action, ShortcutInvocation):
        return None, run.device.execute(action), [], None

    shortcut = run.memory.shortcuts[action.name]
    decision = gate_precondition(
        shortcut, perception, run.wm.subgoal, strict=run.config.strict_precondition_gate
    )
    if not decision.allowed:
        log.warning("precondition gate denied %s: %s", action.name, decision.reason)

        def denied(step_index: int) -> tuple[ActionRecord, ErrorRecord, str]:
            record = ActionRecord(
                step_index=step_index, action=action, outcome=Outcome.C, expectation=""
            )
            error = ErrorRecord(
                step_index=step_index,
                description=decision.reason or "precondition not satisfied",
                suspected_cause="the current screen does not satisfy the shortcut precondition",
                suggested_fix="reach the required state before invoking the shortcut",
            )
            return record, error, run.wm.progress

        return denied, screen, [], None

    bound = bind_arguments(shortcut, action.value_map())
    result = execute_shortcut(run.device, bound)
    trace_refs = [run.screen_ref(s) for s in result.trace[1:-1]]
    if not result.ok:
        log.warning(
            "shortcut %s failed at operation %d: %s",
            action.name,
            result.failure_index,
            result.error,
        )
    return None, result.final_state, trace_refs, result.failure_index


def _run_evolution(run: _TaskRun, future_tasks: list[str]) -> dict:
    """Run both experience reflectors at task end; failures only warn."""
    summary = {
        "enabled": True,
        "tips_before": len(run.memory.tips),
        "tips_after": len(run.memory.tips),
        "admitted_shortcuts": [],
        "rejected_shortcuts": [],
    }
    try:
        new_tips = evolve_tips(
            run.gateway,
            run.query,
            run.wm.plan,
            run.wm.progress,
            run.wm.action_history,
            run.wm.error_history,
            future_tasks,
            run.memory.tips,
        )
        run.memory.replace_tips(new_tips)
        summary["tips_after"] = len(run.memory.tips)
    except ParseFailure as exc:
        log.warning("tip evolution failed for task %s: %s", run.query.id, exc)
    try:
        admitted, rejected = evolve_shortcuts(
            run.gateway,
            run.query,
            run.wm.plan,
            run.wm.progress,
            run.wm.action_history,
            run.wm.error_history,
            future_tasks,
            run.memory,
        )
        for shortcut in admitted:
            run.memory.add_shortcut(shortcut)
        summary["admitted_shortcuts"] = [s.name for s in admitted]
        summary["rejected_shortcuts"] = [[name, rule] for name, rule, _ in rejected]
    except ParseFailure as exc:
        log.warning("shortcut evolution failed for task %s: %s", run.query.id, exc)
    return summary


def run_scenario(
    scenario: Scenario,
    config: OrchestratorConfig,
    device_factory: Callable[[], DeviceSession],
    perceptor,
    backend: ModelBackend,
    memory: LongTermMemory,
    evolve: bool,
    out_dir: Path | None = None,
    memory_path: Path | None = None,
) -> ScenarioResult:
    """Run the ordered tasks against one shared long-term memory.

    With evolution on, the experience reflectors run after each task with
    the remaining task queries, and the memory file is rewritten between
    tasks.  With evolution off the memory is never written.
    """
    result = ScenarioResult(trajectories=[], memory=memory)
    for index, task in enumerate(scenario.tasks):
        task_dir = (out_dir / task.id) if out_dir is not None else None
        future = [t.text for t in scenario.tasks[index + 1:]]
        trajectory = run_task(
            task,
            config,
            device_factory(),
            perceptor,
            Gateway(backend),
            memory,
            out_dir=task_dir,
            evolve=evolve,
            future_tasks=future,
            scenario=scenario.name,
        )
        result.trajectories.append(trajectory)
        if task_dir is not None:
            result.task_dirs.append(task_dir)
        if evolve and memory_path is not None:
            save_memory(memory, memory_path)
    return result
