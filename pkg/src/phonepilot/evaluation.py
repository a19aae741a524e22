"""Benchmark machinery: rubric sheets, human annotation records, the four
metrics, and satisfaction-vs-steps curve data.

Rubric fulfillment and per-step judgments use 1-based step numbers (step 1
is the first executed action); ``fulfilled_at_step`` means the rubric was
satisfied at that step and stays satisfied.  Satisfaction Score is the
fulfilled fraction; Action/Reflection Accuracy are correct fractions over
annotated steps (reflection skips steps without a verdict); Termination
Error rate is the fraction of tasks whose exit was anything other than a
self-reported success.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import AnnotationFormatError, DegenerateFitError, UndefinedMetricError
from .trajectory import ExitReason, Trajectory

RUBRIC_KINDS = ("milestone", "satisfaction_criterion")


@dataclass(frozen=True)
class RubricItem:
    id: int
    text: str
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in RUBRIC_KINDS:
            raise AnnotationFormatError(f"unknown rubric kind {self.kind!r}")
        if not self.text.strip():
            raise AnnotationFormatError("rubric text must be non-empty")


@dataclass
class RubricSheet:
    task_id: str
    items: list[RubricItem]

    def __post_init__(self) -> None:
        if not self.items:
            raise AnnotationFormatError(f"rubric sheet {self.task_id} has no items")
        if [item.id for item in self.items] != list(range(1, len(self.items) + 1)):
            raise AnnotationFormatError(
                f"rubric ids in {self.task_id} must be dense from 1"
            )


@dataclass(frozen=True)
class StepJudgment:
    step: int  # 1-based
    action_correct: bool
    reflection_correct: bool | None  # None when no reflector verdict exists


@dataclass
class AnnotationRecord:
    task_id: str
    fulfilled: dict[int, int | None]  # rubric id -> fulfilling step (1-based)
    steps: list[StepJudgment] = field(default_factory=list)
    exit_reason: str | None = None

    def validate_against(self, rubrics: RubricSheet) -> None:
        rubric_ids = {item.id for item in rubrics.items}
        unknown = set(self.fulfilled) - rubric_ids
        if unknown:
            raise AnnotationFormatError(
                f"annotation for {self.task_id} references unknown rubric ids "
                f"{sorted(unknown)}"
            )
        missing = rubric_ids - set(self.fulfilled)
        if missing:
            raise AnnotationFormatError(
                f"annotation for {self.task_id} does not cover rubric ids {sorted(missing)}"
            )
        step_count = len(self.steps)
        for rubric_id, at_step in self.fulfilled.items():
            if at_step is None:
                continue
            if not (1 <= at_step <= step_count):
                raise AnnotationFormatError(
                    f"rubric {rubric_id} fulfilled at step {at_step}, outside 1..{step_count}"
                )


# -- file formats -------------------------------------------------------------

def save_rubrics(rubrics: RubricSheet, path: Path) -> None:
    data = {
        "format": "rubrics/1",
        "task_id": rubrics.task_id,
        "items": [
            {"id": i.id, "text": i.text, "kind": i.kind} for i in rubrics.items
        ],
    }
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_rubrics(path: Path) -> RubricSheet:
    data = _read_json(path, "rubrics/1")
    try:
        items = [RubricItem(**item) for item in data["items"]]
        return RubricSheet(task_id=data["task_id"], items=items)
    except (KeyError, TypeError) as exc:
        raise AnnotationFormatError(f"{path}: malformed rubric file: {exc}") from exc


def save_annotation(annotation: AnnotationRecord, path: Path) -> None:
    data = {
        "format": "annotation/1",
        "task_id": annotation.task_id,
        "exit_reason": annotation.exit_reason,
        "fulfilled": {str(k): v for k, v in annotation.fulfilled.items()},
        "steps": [
            {
                "step": s.step,
                "action_correct": s.action_correct,
                "reflection_correct": s.reflection_correct,
            }
            for s in annotation.steps
        ],
    }
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_annotation(path: Path) -> AnnotationRecord:
    data = _read_json(path, "annotation/1")
    try:
        return AnnotationRecord(
            task_id=data["task_id"],
            fulfilled={int(k): v for k, v in data["fulfilled"].items()},
            steps=[StepJudgment(**s) for s in data["steps"]],
            exit_reason=data.get("exit_reason"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise AnnotationFormatError(f"{path}: malformed annotation file: {exc}") from exc


def _read_json(path: Path, expected_format: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AnnotationFormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != expected_format:
        raise AnnotationFormatError(f"{path}: expected a {expected_format} file")
    return data


# -- metrics --------------------------------------------------------------------

def satisfaction_score(rubrics: RubricSheet, annotation: AnnotationRecord) -> float:
    annotation.validate_against(rubrics)
    fulfilled = sum(1 for v in annotation.fulfilled.values() if v is not None)
    return fulfilled / len(rubrics.items)


def action_accuracy(annotation: AnnotationRecord) -> float:
    if not annotation.steps:
        raise UndefinedMetricError(
            f"action accuracy undefined for {annotation.task_id}: no annotated steps"
        )
    correct = sum(1 for s in annotation.steps if s.action_correct)
    return correct / len(annotation.steps)


def reflection_accuracy(annotation: AnnotationRecord) -> float:
    applicable = [s for s in annotation.steps if s.reflection_correct is not None]
    if not applicable:
        raise UndefinedMetricError(
            f"reflection accuracy undefined for {annotation.task_id}: "
            "no step has a reflector verdict"
        )
    correct = sum(1 for s in applicable if s.reflection_correct)
    return correct / len(applicable)


def termination_error_rate(
    trajectories: Iterable[Trajectory | ExitReason | str],
) -> float:
    reasons = []
    for item in trajectories:
        if isinstance(item, Trajectory):
            reasons.append(item.exit_reason)
        elif isinstance(item, str):
            reasons.append(ExitReason(item))
        else:
            reasons.append(item)
    if not reasons:
        raise UndefinedMetricError("termination error rate needs at least one task")
    errored = sum(1 for r in reasons if r.is_termination_error)
    return errored / len(reasons)


def sss_curve(
    rubrics: RubricSheet, annotation: AnnotationRecord, step_count: int
) -> list[tuple[float, float]]:
    """Cumulative satisfaction at each step, steps normalized onto (0, 1].

    Point ``i`` (for i = 1..step_count) is ``(i / step_count, fraction of
    rubrics fulfilled at a step <= i)``; the final point equals the
    Satisfaction Score.  An empty trajectory yields an empty curve.
    """
    annotation.validate_against(rubrics)
    if step_count == 0:
        return []
    total = len(rubrics.items)
    fulfilled_steps = [v for v in annotation.fulfilled.values() if v is not None]
    return [
        (i / step_count, sum(1 for s in fulfilled_steps if s <= i) / total)
        for i in range(1, step_count + 1)
    ]


def sss_regression(
    curves: Sequence[Sequence[tuple[float, float]]],
) -> tuple[float, float]:
    """Ordinary least squares over all points pooled across curves."""
    points = [p for curve in curves for p in curve]
    if len(points) < 2:
        raise DegenerateFitError("regression needs at least two pooled points")
    n = len(points)
    mean_x = sum(x for x, _ in points) / n
    mean_y = sum(y for _, y in points) / n
    sxx = sum((x - mean_x) ** 2 for x, _ in points)
    if sxx == 0.0:
        raise DegenerateFitError("regression is degenerate: all x values identical")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in points)
    slope = sxy / sxx
    return slope, mean_y - slope * mean_x
