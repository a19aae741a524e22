"""Trajectory records and their on-disk layout.

One directory per task::

    <task dir>/
      manifest.json        run summary: exit reason, config, memory hashes
      steps/step_000.json  one record per decision step
      screenshots/         every captured screen, screen_000.png onward
      model_calls/         request/response audit log (written by the gateway)
      memory_before.txt    long-term memory snapshots around the task
      memory_after.txt
      timings.json         wall-clock durations; the only nondeterministic file

Everything except ``timings.json`` is byte-deterministic under the
scripted backend and the simulator, which is what makes golden-file
comparison of whole trajectory directories possible.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .config import OrchestratorConfig
from .device.base import ScreenState


class ExitReason(enum.Enum):
    SELF_REPORTED_SUCCESS = "self_reported_success"
    MAX_ITERATIONS = "max_iterations"
    MAX_CONSECUTIVE_ERRORS = "max_consecutive_errors"
    MAX_REPEATED_ACTIONS = "max_repeated_actions"
    OTHER_ERROR = "other_error"

    @property
    def is_termination_error(self) -> bool:
        return self is not ExitReason.SELF_REPORTED_SUCCESS


@dataclass
class StepRecord:
    index: int
    pre_screen: str
    perception: list[dict]
    plan: str
    subgoal: str
    action: str
    expectation: str
    post_screen: str
    outcome: str | None  # A/B/C; None for the stop step
    error: dict | None
    notes: str
    progress: str
    shortcut_trace: list[str] = field(default_factory=list)
    shortcut_failure_index: int | None = None
    gate_denied: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    task_id: str
    steps: list[StepRecord] = field(default_factory=list)
    exit_reason: ExitReason | None = None
    exit_detail: str = ""
    step_timings: list[float] = field(default_factory=list)

    @property
    def step_count(self) -> int:
        return len(self.steps)


def _dump_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def memory_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class TrajectoryWriter:
    """Persists one task's trajectory as it unfolds."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "steps").mkdir(exist_ok=True)
        (self.root / "screenshots").mkdir(exist_ok=True)
        self._screen_count = 0
        self._screen_refs: dict[str, str] = {}

    @property
    def model_call_dir(self) -> Path:
        return self.root / "model_calls"

    def save_screen(self, screen: ScreenState) -> str:
        """Write the screenshot and return its task-relative path.

        Byte-identical screens share one file, so a no-change step's pre
        and post references point at the same screenshot.
        """
        data = screen.image_bytes()
        key = hashlib.sha256(data).hexdigest()
        if key in self._screen_refs:
            return self._screen_refs[key]
        ref = f"screenshots/screen_{self._screen_count:03d}.png"
        (self.root / ref).write_bytes(data)
        self._screen_count += 1
        self._screen_refs[key] = ref
        return ref

    def save_step(self, record: StepRecord) -> None:
        _dump_json(self.root / "steps" / f"step_{record.index:03d}.json", record.to_dict())

    def save_memory_snapshot(self, label: str, text: str) -> None:
        (self.root / f"memory_{label}.txt").write_text(text, encoding="utf-8")

    def save_manifest(
        self,
        trajectory: Trajectory,
        config: OrchestratorConfig,
        scenario: str,
        memory_before: str,
        memory_after: str,
        evolution: dict | None,
    ) -> None:
        manifest = {
            "format": "trajectory/1",
            "task_id": trajectory.task_id,
            "scenario": scenario,
            "exit_reason": trajectory.exit_reason.value if trajectory.exit_reason else None,
            "exit_detail": trajectory.exit_detail,
            "steps": trajectory.step_count,
            "config": asdict(config),
            "memory_sha256_before": memory_digest(memory_before),
            "memory_sha256_after": memory_digest(memory_after),
            "evolution": evolution,
        }
        _dump_json(self.root / "manifest.json", manifest)

    def save_timings(self, trajectory: Trajectory, total_seconds: float) -> None:
        _dump_json(
            self.root / "timings.json",
            {
                "per_step_seconds": trajectory.step_timings,
                "total_seconds": total_seconds,
            },
        )


def load_trajectory(root: Path) -> Trajectory:
    """Rehydrate a trajectory from its directory (for scoring and review)."""
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    steps = []
    for path in sorted((root / "steps").glob("step_*.json")):
        steps.append(StepRecord(**json.loads(path.read_text(encoding="utf-8"))))
    return Trajectory(
        task_id=manifest["task_id"],
        steps=steps,
        exit_reason=ExitReason(manifest["exit_reason"]),
        exit_detail=manifest.get("exit_detail", ""),
    )
