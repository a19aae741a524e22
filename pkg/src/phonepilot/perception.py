"""Fine-grained screen perception: element lists with coordinates.

Two backends: the simulator backend reads ground truth off the captured
screen state (optionally corrupted by a seeded noise model so
misperception failure modes can be tested deterministically), and the
remote backend calls four HTTP services (OCR detection, OCR recognition,
icon grounding, icon captioning) and merges their results.

Remote wire format (all POST, JSON bodies, JSON responses):

* detect:    ``{"image": "<base64 png>"}`` -> ``{"boxes": [[l,t,r,b], ...]}``
* recognize: ``{"image": ..., "boxes": [...]}`` -> ``{"texts": ["...", ...]}``
* ground:    ``{"image": ...}`` -> ``{"boxes": [[l,t,r,b], ...]}``
* caption:   ``{"image": ..., "boxes": [...]}`` -> ``{"captions": ["...", ...]}``
"""

from __future__ import annotations

import base64
import hashlib
import json
import random
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .device.base import ScreenState
from .errors import PerceptionError

# Simulator element kinds that read as text vs as icons.
_TEXT_KINDS = ("static_text", "text_field", "list_item")
_ICON_KINDS = ("button", "icon")

_SCRAMBLE_WORDS = ("lorem", "ipsum", "dolor", "sit", "amet", "blurred", "glyph")


@dataclass(frozen=True)
class PerceivedElement:
    kind: str  # "text" | "icon"
    content: str
    center: tuple[int, int]
    box: tuple[int, int, int, int]
    # Ground-truth element kind when known (simulator only); lets the
    # strict precondition gate check for text fields.
    source_kind: str | None = None


@dataclass
class PerceptionResult:
    elements: list[PerceivedElement] = field(default_factory=list)

    def render_text(self) -> str:
        lines = [
            f"- {e.kind} {e.content!r} at {e.center}" for e in self.elements
        ]
        return "\n".join(lines) if lines else "(no elements detected)"

    def has_text_field(self) -> bool:
        return any(e.source_kind == "text_field" for e in self.elements)


def _sorted_by_origin(elements: list[PerceivedElement]) -> list[PerceivedElement]:
    return sorted(elements, key=lambda e: (e.box[1], e.box[0]))


class SimulatedPerceptor:
    """Ground-truth perception over simulator captures.

    With a nonzero drop or substitution rate the output is corrupted
    deterministically: the RNG is seeded from the configured seed and the
    screen content, so the same (state, seed) pair always perceives the
    same way.
    """

    def __init__(self, drop_rate: float = 0.0, substitute_rate: float = 0.0, seed: int = 0):
        if not (0.0 <= drop_rate <= 1.0 and 0.0 <= substitute_rate <= 1.0):
            raise ValueError("noise rates must be within [0, 1]")
        self.drop_rate = drop_rate
        self.substitute_rate = substitute_rate
        self.seed = seed

    def _rng_for(self, state: ScreenState) -> random.Random:
        digest = hashlib.sha256(
            json.dumps(state.sim_truth, sort_keys=True).encode("utf-8")
            + str(self.seed).encode("utf-8")
        ).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def perceive(self, state: ScreenState) -> PerceptionResult:
        if state.sim_truth is None:
            raise PerceptionError("simulator perception needs sim_truth on the state")
        rng = self._rng_for(state)
        elements: list[PerceivedElement] = []
        for entry in state.sim_truth["elements"]:
            if (self.drop_rate and rng.random() < self.drop_rate):
                continue
            left, top, right, bottom = entry["box"]
            if entry["kind"] in _TEXT_KINDS:
                kind = "text"
                content = entry["content"] or entry["label"]
            else:
                kind = "icon"
                content = entry["label"]
            if self.substitute_rate and rng.random() < self.substitute_rate:
                content = rng.choice(_SCRAMBLE_WORDS)
            elements.append(
                PerceivedElement(
                    kind=kind,
                    content=content,
                    center=((left + right) // 2, (top + bottom) // 2),
                    box=(left, top, right, bottom),
                    source_kind=entry["kind"],
                )
            )
        return PerceptionResult(elements=_sorted_by_origin(elements))


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    request = urllib.request.Request(
        url,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return json.loads(response.read().decode("utf-8"))
    except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
        raise PerceptionError(f"perception service at {url} failed: {exc}") from exc


class RemotePerceptor:
    """Client for the four-stage OCR/grounding/captioning service pipeline."""

    def __init__(
        self,
        detect_url: str,
        recognize_url: str,
        ground_url: str,
        caption_url: str,
        timeout: float = 30.0,
    ):
        self.detect_url = detect_url
        self.recognize_url = recognize_url
        self.ground_url = ground_url
        self.caption_url = caption_url
        self.timeout = timeout

    def perceive(self, state: ScreenState) -> PerceptionResult:
        image = base64.b64encode(state.image_bytes()).decode("ascii")
        text_boxes = _post_json(self.detect_url, {"image": image}, self.timeout).get("boxes", [])
        texts: list[str] = []
        if text_boxes:
            texts = _post_json(
                self.recognize_url, {"image": image, "boxes": text_boxes}, self.timeout
            ).get("texts", [])
        icon_boxes = _post_json(self.ground_url, {"image": image}, self.timeout).get("boxes", [])
        captions: list[str] = []
        if icon_boxes:
            captions = _post_json(
                self.caption_url, {"image": image, "boxes": icon_boxes}, self.timeout
            ).get("captions", [])
        if len(texts) != len(text_boxes) or len(captions) != len(icon_boxes):
            raise PerceptionError("perception services returned misaligned results")

        def build(kind: str, box: list, content: str) -> PerceivedElement:
            left, top, right, bottom = (int(v) for v in box)
            return PerceivedElement(
                kind=kind,
                content=content,
                center=((left + right) // 2, (top + bottom) // 2),
                box=(left, top, right, bottom),
            )

        # Overlapping text and icon boxes both survive the merge.
        elements = [build("text", box, text) for box, text in zip(text_boxes, texts)]
        elements += [build("icon", box, cap) for box, cap in zip(icon_boxes, captions)]
        return PerceptionResult(elements=_sorted_by_origin(elements))
