"""Orchestrator configuration with file loading and flag precedence."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any


@dataclass(frozen=True)
class OrchestratorConfig:
    """Loop limits and memory-window sizes.

    Defaults: escalate to the manager after 2 consecutive failures, show
    agents the latest 5 history records, cap a task at 40 iterations,
    3 consecutive errors, and 3 identical repeated actions.
    """

    k_escalation: int = 2
    m_history_window: int = 5
    max_iterations: int = 40
    max_consecutive_errors: int = 3
    max_repeated_actions: int = 3
    # Experience retrievers run only when the memory outgrows these.
    retrieval_tip_threshold: int = 20
    retrieval_shortcut_threshold: int = 10
    # Deterministic precondition gate for shortcut invocations (test oracle);
    # off means the model-mediated check of the operator prompt is trusted.
    strict_precondition_gate: bool = False

    def __post_init__(self) -> None:
        for name in (
            "k_escalation",
            "m_history_window",
            "max_iterations",
            "max_consecutive_errors",
            "max_repeated_actions",
            "retrieval_tip_threshold",
            "retrieval_shortcut_threshold",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.k_escalation > self.max_consecutive_errors:
            raise ValueError("k_escalation must not exceed max_consecutive_errors")


_FIELD_NAMES = {f.name for f in fields(OrchestratorConfig)}


def load_config(path: str | Path) -> OrchestratorConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return OrchestratorConfig(**data)


def apply_overrides(config: OrchestratorConfig, overrides: dict[str, Any]) -> OrchestratorConfig:
    """Apply non-None overrides (CLI flags beat config file values)."""
    effective = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **effective) if effective else config
