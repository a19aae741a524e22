"""Screen state container and the device session protocol."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

from ..actions import AtomicOperation


@dataclass(frozen=True)
class ScreenState:
    """A captured phone screen.

    ``image`` is either PNG bytes (simulator) or a file path (pulled from a
    real device).  ``sim_truth`` is the structured element list and is only
    present for simulator captures.
    """

    step_index: int
    image: bytes | Path
    width: int
    height: int
    sim_truth: dict | None = None

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("screen dimensions must be positive")
        if self.step_index < 0:
            raise ValueError("step index must be non-negative")

    def image_bytes(self) -> bytes:
        if isinstance(self.image, Path):
            return self.image.read_bytes()
        return self.image


@runtime_checkable
class DeviceSession(Protocol):
    """One serialized stream of operations against a single device."""

    width: int
    height: int

    def execute(self, op: AtomicOperation) -> ScreenState: ...

    def capture(self) -> ScreenState: ...
