from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phonepilot.errors import (
    AnnotationFormatError,
    DegenerateFitError,
    UndefinedMetricError,
)
from phonepilot.evaluation import (
    AnnotationRecord,
    RubricItem,
    RubricSheet,
    StepJudgment,
    action_accuracy,
    load_annotation,
    load_rubrics,
    reflection_accuracy,
    satisfaction_score,
    save_annotation,
    save_rubrics,
    sss_curve,
    sss_regression,
    termination_error_rate,
)
from phonepilot.trajectory import ExitReason


def sheet(n: int, task_id: str = "t") -> RubricSheet:
    return RubricSheet(
        task_id=task_id,
        items=[
            RubricItem(
                id=i,
                text=f"rubric {i}",
                kind="milestone" if i % 2 else "satisfaction_criterion",
            )
            for i in range(1, n + 1)
        ],
    )


def annotation(
    fulfilled: dict[int, int | None],
    steps: int = 5,
    correct_actions: int | None = None,
    task_id: str = "t",
) -> AnnotationRecord:
    judgments = [
        StepJudgment(
            step=i,
            action_correct=(correct_actions is None or i <= correct_actions),
            reflection_correct=True,
        )
        for i in range(1, steps + 1)
    ]
    return AnnotationRecord(task_id=task_id, fulfilled=fulfilled, steps=judgments)


# -- satisfaction score ---------------------------------------------------------

def test_satisfaction_eight_of_ten():
    fulfilled = {i: (i if i <= 8 else None) for i in range(1, 11)}
    assert satisfaction_score(sheet(10), annotation(fulfilled, steps=10)) == 0.8


def test_satisfaction_none_fulfilled():
    fulfilled = {i: None for i in range(1, 5)}
    assert satisfaction_score(sheet(4), annotation(fulfilled)) == 0.0


def test_satisfaction_all_of_nine_fulfilled():
    fulfilled = {i: min(i, 5) for i in range(1, 10)}
    assert satisfaction_score(sheet(9), annotation(fulfilled)) == 1.0


def test_satisfaction_rejects_unknown_rubric_ids():
    fulfilled = {1: 1, 2: None, 9: 3}
    with pytest.raises(AnnotationFormatError, match="unknown rubric ids"):
        satisfaction_score(sheet(2), annotation(fulfilled))


def test_satisfaction_requires_covering_the_sheet():
    with pytest.raises(AnnotationFormatError, match="does not cover"):
        satisfaction_score(sheet(3), annotation({1: 1}))


def test_fulfillment_outside_trajectory_rejected():
    with pytest.raises(AnnotationFormatError, match="outside"):
        satisfaction_score(sheet(1), annotation({1: 7}, steps=5))


# -- action / reflection accuracy --------------------------------------------------

def test_action_accuracy_direct():
    record = annotation({1: 1}, steps=20, correct_actions=17)
    assert action_accuracy(record) == 0.85


def test_action_accuracy_undefined_without_steps():
    record = AnnotationRecord(task_id="t", fulfilled={}, steps=[])
    with pytest.raises(UndefinedMetricError):
        action_accuracy(record)


def test_reflection_accuracy_skips_na():
    steps = [
        StepJudgment(step=1, action_correct=True, reflection_correct=True),
        StepJudgment(step=2, action_correct=True, reflection_correct=True),
        StepJudgment(step=3, action_correct=True, reflection_correct=True),
        StepJudgment(step=4, action_correct=True, reflection_correct=False),
        StepJudgment(step=5, action_correct=True, reflection_correct=None),
    ]
    record = AnnotationRecord(task_id="t", fulfilled={}, steps=steps)
    assert reflection_accuracy(record) == 0.75


def test_reflection_accuracy_undefined_when_all_na():
    steps = [StepJudgment(step=1, action_correct=True, reflection_correct=None)]
    record = AnnotationRecord(task_id="t", fulfilled={}, steps=steps)
    with pytest.raises(UndefinedMetricError):
        reflection_accuracy(record)


# -- termination error rate ----------------------------------------------------------

def test_termination_error_rate_three_of_twentyfive():
    reasons = [ExitReason.SELF_REPORTED_SUCCESS] * 22 + [
        ExitReason.MAX_ITERATIONS,
        ExitReason.MAX_CONSECUTIVE_ERRORS,
        ExitReason.OTHER_ERROR,
    ]
    assert termination_error_rate(reasons) == pytest.approx(0.12)


def test_termination_error_rate_all_clean():
    assert termination_error_rate([ExitReason.SELF_REPORTED_SUCCESS] * 4) == 0.0


def test_termination_error_rate_all_capped():
    assert termination_error_rate([ExitReason.MAX_ITERATIONS] * 3) == 1.0


def test_termination_error_rate_accepts_strings():
    assert termination_error_rate(["self_reported_success", "max_iterations"]) == 0.5


def test_termination_error_rate_needs_tasks():
    with pytest.raises(UndefinedMetricError):
        termination_error_rate([])


# -- SSS curve -------------------------------------------------------------------------

def test_sss_curve_hand_enumerated_example():
    rubrics = sheet(4)
    record = annotation({1: 2, 2: 4, 3: None, 4: None}, steps=5)
    curve = sss_curve(rubrics, record, 5)
    assert curve == [(0.2, 0.0), (0.4, 0.25), (0.6, 0.25), (0.8, 0.5), (1.0, 0.5)]


def test_sss_curve_flat_zero():
    rubrics = sheet(3)
    record = annotation({1: None, 2: None, 3: None}, steps=4)
    curve = sss_curve(rubrics, record, 4)
    assert curve == [(0.25, 0.0), (0.5, 0.0), (0.75, 0.0), (1.0, 0.0)]


def test_sss_curve_all_fulfilled_at_step_one():
    rubrics = sheet(2)
    record = annotation({1: 1, 2: 1}, steps=4)
    curve = sss_curve(rubrics, record, 4)
    assert all(y == 1.0 for _, y in curve)
    assert curve[0] == (0.25, 1.0)


def test_sss_curve_empty_trajectory():
    record = AnnotationRecord(task_id="t", fulfilled={1: None}, steps=[])
    assert sss_curve(sheet(1), record, 0) == []


@given(
    total=st.integers(min_value=1, max_value=8),
    steps=st.integers(min_value=1, max_value=12),
    data=st.data(),
)
def test_sss_curve_monotone_and_ends_at_ss(total, steps, data):
    fulfilled = {
        i: data.draw(
            st.one_of(st.none(), st.integers(min_value=1, max_value=steps)),
            label=f"rubric{i}",
        )
        for i in range(1, total + 1)
    }
    rubrics = sheet(total)
    record = annotation(fulfilled, steps=steps)
    curve = sss_curve(rubrics, record, steps)
    ys = [y for _, y in curve]
    assert all(a <= b for a, b in zip(ys, ys[1:]))
    assert curve[-1][1] == satisfaction_score(rubrics, record)
    assert curve[-1][0] == 1.0


def test_metrics_invariant_under_rubric_reordering():
    fulfilled = {1: 2, 2: None, 3: 1, 4: 4}
    rubrics = sheet(4)
    record = annotation(fulfilled, steps=5)
    baseline = satisfaction_score(rubrics, record)
    reordered = RubricSheet(
        task_id="t",
        items=[
            RubricItem(id=i, text=f"rubric {5 - i}", kind="milestone")
            for i in range(1, 5)
        ],
    )
    permuted = annotation({1: 4, 2: 1, 3: None, 4: 2}, steps=5)
    assert satisfaction_score(reordered, permuted) == baseline


# -- regression ---------------------------------------------------------------------------

def test_regression_two_points():
    slope, intercept = sss_regression([[(0.0, 0.0), (1.0, 1.0)]])
    assert slope == pytest.approx(1.0) and intercept == pytest.approx(0.0)


def test_regression_constant_y():
    slope, intercept = sss_regression([[(0.0, 0.5), (0.5, 0.5), (1.0, 0.5)]])
    assert slope == pytest.approx(0.0) and intercept == pytest.approx(0.5)


def test_regression_matches_numpy_polyfit_oracle():
    rng = random.Random(5)
    curves = []
    for _ in range(4):
        curve = [(rng.random(), rng.random()) for _ in range(rng.randint(2, 9))]
        curves.append(curve)
    slope, intercept = sss_regression(curves)
    points = [p for c in curves for p in c]
    expected = np.polyfit([x for x, _ in points], [y for _, y in points], 1)
    assert slope == pytest.approx(expected[0], abs=1e-9)
    assert intercept == pytest.approx(expected[1], abs=1e-9)


def test_regression_degenerate_cases():
    with pytest.raises(DegenerateFitError):
        sss_regression([[(0.5, 0.1)]])
    with pytest.raises(DegenerateFitError):
        sss_regression([[(0.5, 0.1), (0.5, 0.9)]])


# -- brute force oracle over randomized annotations ------------------------------------------

def test_metrics_match_brute_force_oracle():
    rng = random.Random(42)
    for trial in range(20):
        total = rng.randint(1, 9)
        steps = rng.randint(1, 12)
        rubrics = sheet(total, task_id=f"task{trial}")
        fulfilled = {
            i: (rng.randint(1, steps) if rng.random() < 0.6 else None)
            for i in range(1, total + 1)
        }
        judgments = [
            StepJudgment(
                step=i,
                action_correct=rng.random() < 0.8,
                reflection_correct=rng.choice([True, False, None]),
            )
            for i in range(1, steps + 1)
        ]
        record = AnnotationRecord(
            task_id=f"task{trial}", fulfilled=fulfilled, steps=judgments
        )

        # oracle: direct counting with exact rationals
        ss_oracle = Fraction(
            sum(1 for v in fulfilled.values() if v is not None), total
        )
        assert satisfaction_score(rubrics, record) == ss_oracle

        aa_oracle = Fraction(
            sum(1 for j in judgments if j.action_correct), len(judgments)
        )
        assert action_accuracy(record) == aa_oracle

        applicable = [j for j in judgments if j.reflection_correct is not None]
        if applicable:
            ra_oracle = Fraction(
                sum(1 for j in applicable if j.reflection_correct), len(applicable)
            )
            assert reflection_accuracy(record) == ra_oracle

        curve = sss_curve(rubrics, record, steps)
        for i in range(1, steps + 1):
            expected = Fraction(
                sum(1 for v in fulfilled.values() if v is not None and v <= i), total
            )
            assert curve[i - 1] == (i / steps, expected)


# -- file round trips ---------------------------------------------------------------------------

def test_rubric_file_round_trip(tmp_path):
    rubrics = sheet(3, task_id="demo")
    path = tmp_path / "demo.rubrics.json"
    save_rubrics(rubrics, path)
    assert load_rubrics(path) == rubrics
    save_rubrics(load_rubrics(path), tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_annotation_file_round_trip(tmp_path):
    record = AnnotationRecord(
        task_id="demo",
        fulfilled={1: 2, 2: None},
        steps=[
            StepJudgment(step=1, action_correct=True, reflection_correct=None),
            StepJudgment(step=2, action_correct=False, reflection_correct=True),
        ],
        exit_reason="self_reported_success",
    )
    path = tmp_path / "demo.annotation.json"
    save_annotation(record, path)
    assert load_annotation(path) == record


def test_rubric_sheet_requires_dense_ids():
    with pytest.raises(AnnotationFormatError, match="dense"):
        RubricSheet(
            task_id="t",
            items=[RubricItem(id=2, text="x", kind="milestone")],
        )


def test_rubric_rejects_unknown_kind():
    with pytest.raises(AnnotationFormatError):
        RubricItem(id=1, text="x", kind="vibe")


def test_load_rejects_wrong_format(tmp_path):
    path = tmp_path / "x.json"
    path.write_text('{"format": "other/9"}')
    with pytest.raises(AnnotationFormatError, match="expected"):
        load_rubrics(path)
