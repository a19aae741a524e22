"""Metric reports and figure rendering.

The report path emits machine-readable JSON, a delimited CSV, a plain
table, and matplotlib figures rendered straight to files (headless Agg
backend; nothing opens a window).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import DegenerateFitError, UndefinedMetricError
from .evaluation import (
    AnnotationRecord,
    RubricSheet,
    action_accuracy,
    reflection_accuracy,
    satisfaction_score,
    sss_curve,
    sss_regression,
    termination_error_rate,
)


@dataclass
class TaskMetrics:
    task_id: str
    satisfaction: float
    action_accuracy: float | None
    reflection_accuracy: float | None
    exit_reason: str | None


@dataclass
class MetricsReport:
    tasks: list[TaskMetrics]
    satisfaction: float
    action_accuracy: float | None
    reflection_accuracy: float | None
    termination_error: float

    def to_dict(self) -> dict:
        return {
            "aggregate": {
                "satisfaction_score": self.satisfaction,
                "action_accuracy": self.action_accuracy,
                "reflection_accuracy": self.reflection_accuracy,
                "termination_error_rate": self.termination_error,
            },
            "tasks": [
                {
                    "task_id": t.task_id,
                    "satisfaction_score": t.satisfaction,
                    "action_accuracy": t.action_accuracy,
                    "reflection_accuracy": t.reflection_accuracy,
                    "exit_reason": t.exit_reason,
                }
                for t in self.tasks
            ],
        }


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def compute_report(
    pairs: list[tuple[RubricSheet, AnnotationRecord]],
) -> MetricsReport:
    """Per-task metrics plus macro-averages over the task set."""
    tasks = []
    for rubrics, annotation in pairs:
        try:
            aa = action_accuracy(annotation)
        except UndefinedMetricError:
            aa = None
        try:
            ra = reflection_accuracy(annotation)
        except UndefinedMetricError:
            ra = None
        tasks.append(
            TaskMetrics(
                task_id=annotation.task_id,
                satisfaction=satisfaction_score(rubrics, annotation),
                action_accuracy=aa,
                reflection_accuracy=ra,
                exit_reason=annotation.exit_reason,
            )
        )
    exit_reasons = [t.exit_reason for t in tasks if t.exit_reason is not None]
    return MetricsReport(
        tasks=tasks,
        satisfaction=_mean([t.satisfaction for t in tasks]),
        action_accuracy=_mean([t.action_accuracy for t in tasks if t.action_accuracy is not None]),
        reflection_accuracy=_mean(
            [t.reflection_accuracy for t in tasks if t.reflection_accuracy is not None]
        ),
        termination_error=termination_error_rate(exit_reasons) if exit_reasons else 0.0,
    )


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def render_table(report: MetricsReport) -> str:
    header = f"{'task':<24} {'SS':>6} {'AA':>6} {'RA':>6}  exit"
    lines = [header, "-" * len(header)]
    for t in report.tasks:
        lines.append(
            f"{t.task_id:<24} {_fmt(t.satisfaction):>6} {_fmt(t.action_accuracy):>6} "
            f"{_fmt(t.reflection_accuracy):>6}  {t.exit_reason or 'n/a'}"
        )
    lines.append("-" * len(header))
    lines.append(
        f"{'aggregate':<24} {_fmt(report.satisfaction):>6} {_fmt(report.action_accuracy):>6} "
        f"{_fmt(report.reflection_accuracy):>6}  TE={_fmt(report.termination_error)}"
    )
    return "\n".join(lines)


def write_metrics_outputs(report: MetricsReport, out_dir: Path) -> list[Path]:
    """Emit metrics.json, metrics.csv, metrics.txt, and metrics.png."""
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "metrics.json"
    json_path.write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    csv_path = out_dir / "metrics.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["task_id", "satisfaction_score", "action_accuracy", "reflection_accuracy", "exit_reason"]
        )
        for t in report.tasks:
            writer.writerow(
                [t.task_id, t.satisfaction, t.action_accuracy, t.reflection_accuracy, t.exit_reason]
            )
    txt_path = out_dir / "metrics.txt"
    txt_path.write_text(render_table(report) + "\n", encoding="utf-8")
    png_path = out_dir / "metrics.png"
    _render_metrics_figure(report, png_path)
    return [json_path, csv_path, txt_path, png_path]


def _render_metrics_figure(report: MetricsReport, path: Path) -> None:
    labels, values = [], []
    for label, value in (
        ("SS", report.satisfaction),
        ("AA", report.action_accuracy),
        ("RA", report.reflection_accuracy),
        ("TE", report.termination_error),
    ):
        if value is not None:
            labels.append(label)
            values.append(value)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar(labels, values, color=["#4267b2", "#6c8ebf", "#9fb3d9", "#d68130"][: len(labels)])
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("fraction")
    ax.set_title("benchmark metrics")
    for bar, value in zip(bars, values):
        ax.annotate(
            f"{value:.2f}",
            (bar.get_x() + bar.get_width() / 2, value),
            ha="center", va="bottom", fontsize=8,
        )
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_sss_outputs(
    curves: dict[str, list[tuple[str, list[tuple[float, float]]]]],
    data_path: Path,
    figure_path: Path | None,
) -> tuple[Path, Path | None]:
    """Write curve points as delimited data (columns x, y, model tag) and,
    unless disabled, a figure with the per-tag poly-lines and regression
    lines."""
    data_path.parent.mkdir(parents=True, exist_ok=True)
    with data_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "y", "model"])
        for tag, tagged_curves in curves.items():
            for _task_id, curve in tagged_curves:
                for x, y in curve:
                    writer.writerow([x, y, tag])
    if figure_path is None:
        return data_path, None

    fig, ax = plt.subplots(figsize=(5.5, 4))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, (tag, tagged_curves) in enumerate(curves.items()):
        color = colors[i % len(colors)]
        for j, (_task_id, curve) in enumerate(tagged_curves):
            xs = [0.0] + [p[0] for p in curve]
            ys = [0.0] + [p[1] for p in curve]
            ax.plot(xs, ys, color=color, alpha=0.35, linewidth=1,
                    label=tag if j == 0 else None)
        try:
            slope, intercept = sss_regression([c for _, c in tagged_curves])
        except DegenerateFitError:
            continue
        ax.plot(
            [0, 1], [intercept, intercept + slope],
            color=color, linewidth=2, linestyle="--",
        )
    ax.set_xlabel("normalized steps")
    ax.set_ylabel("satisfaction score")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.05)
    ax.set_title("satisfaction vs. steps")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)
    return data_path, figure_path


def curve_for(
    rubrics: RubricSheet, annotation: AnnotationRecord
) -> list[tuple[float, float]]:
    return sss_curve(rubrics, annotation, len(annotation.steps))
