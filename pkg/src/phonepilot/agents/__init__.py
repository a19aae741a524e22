"""Reasoning agents: prompt construction and response parsing around the
model gateway."""

from .evolution import (
    evolve_shortcuts,
    evolve_tips,
    retrieve_shortcuts,
    retrieve_tips,
)
from .steps import (
    OperatorDecision,
    manager_step,
    operator_step,
    reflect_action,
    take_notes,
)

__all__ = [
    "OperatorDecision",
    "evolve_shortcuts",
    "evolve_tips",
    "manager_step",
    "operator_step",
    "reflect_action",
    "retrieve_shortcuts",
    "retrieve_tips",
    "take_notes",
]
