"""Deterministic simulated-phone description: apps, pages, elements,
transitions, and pop-up injection rules.

Graphs are human-authored JSON files::

    {
      "screen": {"width": 360, "height": 640},
      "apps": {
        "Shop": {
          "entry": "main",
          "pages": {
            "main": {"elements": [
              {"id": "search_box", "kind": "text_field",
               "label": "Search products", "box": [20, 40, 340, 80]}
            ]},
            "results": {"elements": [...]}
          },
          "transitions": [
            {"from": "main", "tap": "deals", "to": "deals"},
            {"from": "main", "submit": "search_box", "query": "oled tv",
             "to": "results"},
            {"from": "main", "submit": "search_box", "to": "no_results"},
            {"from": "results", "swipe": "up", "to": "results_2"},
            {"from": "results", "back": true, "to": "main"},
            {"from": "loading", "wait": true, "to": "loaded"}
          ]
        }
      },
      "popups": [
        {"page": "Feed/main", "at_op": 3, "overlay": "Feed/ad",
         "dismiss": "close_x"}
      ]
    }

Pages are addressed as ``App/page``.  ``home`` and ``switcher`` are
built-in pages that exist on every graph.  A ``submit`` transition fires
when enter is pressed in the named field; an optional ``query`` restricts
it to an exact field content, and the query-free form is the fallback.
An element may declare ``"clears": "<field id>"`` so that tapping it
empties that field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import AppGraphError

ELEMENT_KINDS = ("button", "text_field", "list_item", "icon", "static_text")

HOME_PAGE = "home"
SWITCHER_PAGE = "switcher"
BUILTIN_PAGES = (HOME_PAGE, SWITCHER_PAGE)

SWIPE_DIRECTIONS = ("up", "down", "left", "right")

Box = tuple[int, int, int, int]

# Trigger tuples keying the transition function.
TapTrigger = tuple[str, str]  # ("tap", element_id)
Trigger = tuple


def tap_trigger(element_id: str) -> Trigger:
    return ("tap", element_id)


def submit_trigger(element_id: str, query: str | None = None) -> Trigger:
    return ("submit", element_id, query)


def swipe_trigger(direction: str) -> Trigger:
    return ("swipe", direction)


BACK_TRIGGER: Trigger = ("back",)
WAIT_TRIGGER: Trigger = ("wait",)


@dataclass(frozen=True)
class Element:
    id: str
    kind: str
    label: str
    box: Box
    content: str = ""
    clears: str | None = None


@dataclass(frozen=True)
class Page:
    id: str  # "App/page"
    app: str
    name: str
    elements: tuple[Element, ...]

    def find(self, element_id: str) -> Element | None:
        for element in self.elements:
            if element.id == element_id:
                return element
        return None


@dataclass(frozen=True)
class PopupRule:
    page: str
    at_op: int
    overlay: str
    dismiss: str


@dataclass
class AppGraph:
    width: int
    height: int
    entries: dict[str, str] = field(default_factory=dict)  # app -> entry page id
    pages: dict[str, Page] = field(default_factory=dict)
    transitions: dict[str, dict[Trigger, str]] = field(default_factory=dict)
    popup_rules: list[PopupRule] = field(default_factory=list)

    @property
    def apps(self) -> list[str]:
        return list(self.entries)

    def target(self, page_id: str, trigger: Trigger) -> str | None:
        return self.transitions.get(page_id, {}).get(trigger)

    def home_elements(self) -> tuple[Element, ...]:
        """Generated home-screen icons, one per app, on a 3-column grid."""
        cell = (self.width - 40) // 3
        size = min(cell - 10, 90)
        elements = []
        for i, app in enumerate(self.entries):
            left = 20 + (i % 3) * cell
            top = 40 + (i // 3) * (size + 20)
            elements.append(
                Element(id=app, kind="icon", label=app, box=(left, top, left + size, top + size))
            )
        return tuple(elements)

    def switcher_elements(self, open_apps: list[str]) -> tuple[Element, ...]:
        """Generated app-switcher rows for the currently opened apps."""
        elements = []
        for i, app in enumerate(open_apps):
            top = 40 + i * 70
            elements.append(
                Element(
                    id=app, kind="list_item", label=app, box=(20, top, self.width - 20, top + 60)
                )
            )
        return tuple(elements)


def _check_box(box: object, where: str, width: int, height: int) -> Box:
    if (
        not isinstance(box, (list, tuple))
        or len(box) != 4
        or not all(isinstance(v, int) for v in box)
    ):
        raise AppGraphError(f"{where}: box must be [left, top, right, bottom] integers")
    left, top, right, bottom = box
    if not (0 <= left < right <= width and 0 <= top < bottom <= height):
        raise AppGraphError(f"{where}: box {box} outside the {width}x{height} screen")
    return (left, top, right, bottom)


def _parse_element(data: dict, where: str, width: int, height: int) -> Element:
    for key in ("id", "kind", "label", "box"):
        if key not in data:
            raise AppGraphError(f"{where}: element missing {key!r}")
    if data["kind"] not in ELEMENT_KINDS:
        raise AppGraphError(f"{where}: unknown element kind {data['kind']!r}")
    return Element(
        id=data["id"],
        kind=data["kind"],
        label=data["label"],
        box=_check_box(data["box"], f"{where}/{data['id']}", width, height),
        content=data.get("content", ""),
        clears=data.get("clears"),
    )


def _parse_trigger(spec: dict, where: str) -> Trigger:
    kinds = [k for k in ("tap", "submit", "swipe", "back", "wait") if k in spec]
    if len(kinds) != 1:
        raise AppGraphError(f"{where}: transition needs exactly one trigger kind")
    kind = kinds[0]
    if kind == "tap":
        return tap_trigger(spec["tap"])
    if kind == "submit":
        return submit_trigger(spec["submit"], spec.get("query"))
    if kind == "swipe":
        if spec["swipe"] not in SWIPE_DIRECTIONS:
            raise AppGraphError(f"{where}: bad swipe direction {spec['swipe']!r}")
        return swipe_trigger(spec["swipe"])
    return BACK_TRIGGER if kind == "back" else WAIT_TRIGGER


def parse_graph(data: dict) -> AppGraph:
    screen = data.get("screen")
    if not isinstance(screen, dict) or "width" not in screen or "height" not in screen:
        raise AppGraphError("graph needs a screen object with width and height")
    width, height = screen["width"], screen["height"]
    if width <= 0 or height <= 0:
        raise AppGraphError("screen dimensions must be positive")

    graph = AppGraph(width=width, height=height)
    apps = data.get("apps")
    if not isinstance(apps, dict) or not apps:
        raise AppGraphError("graph needs a non-empty apps object")

    for app_name, app in apps.items():
        pages = app.get("pages")
        if not isinstance(pages, dict) or not pages:
            raise AppGraphError(f"app {app_name!r} needs pages")
        for page_name, page in pages.items():
            page_id = f"{app_name}/{page_name}"
            if page_name in BUILTIN_PAGES and "/" not in page_name:
                pass  # app-local names never clash with builtin ids
            elements = tuple(
                _parse_element(e, page_id, width, height) for e in page.get("elements", [])
            )
            seen = set()
            for element in elements:
                if element.id in seen:
                    raise AppGraphError(f"{page_id}: duplicate element id {element.id!r}")
                seen.add(element.id)
            graph.pages[page_id] = Page(
                id=page_id, app=app_name, name=page_name, elements=elements
            )
        entry = app.get("entry", next(iter(pages)))
        if entry not in pages:
            raise AppGraphError(f"app {app_name!r}: entry page {entry!r} does not exist")
        graph.entries[app_name] = f"{app_name}/{entry}"

    for app_name, app in apps.items():
        for spec in app.get("transitions", []):
            source = f"{app_name}/{spec.get('from', '')}"
            target = spec.get("to", "")
            target_id = target if "/" in target else f"{app_name}/{target}"
            where = f"transition {source} -> {target_id}"
            if source not in graph.pages:
                raise AppGraphError(f"{where}: source page does not exist")
            if target_id not in graph.pages:
                raise AppGraphError(f"{where}: target page does not exist")
            trigger = _parse_trigger(spec, where)
            if trigger[0] in ("tap", "submit"):
                if graph.pages[source].find(trigger[1]) is None:
                    raise AppGraphError(
                        f"{where}: element {trigger[1]!r} not on source page"
                    )
            page_transitions = graph.transitions.setdefault(source, {})
            if trigger in page_transitions:
                raise AppGraphError(f"{where}: duplicate trigger {trigger} on {source}")
            page_transitions[trigger] = target_id

    for spec in data.get("popups", []):
        for key in ("page", "at_op", "overlay", "dismiss"):
            if key not in spec:
                raise AppGraphError(f"popup rule missing {key!r}")
        rule = PopupRule(
            page=spec["page"], at_op=spec["at_op"], overlay=spec["overlay"], dismiss=spec["dismiss"]
        )
        if rule.page not in graph.pages:
            raise AppGraphError(f"popup rule: page {rule.page!r} does not exist")
        if rule.overlay not in graph.pages:
            raise AppGraphError(f"popup rule: overlay {rule.overlay!r} does not exist")
        if graph.pages[rule.overlay].find(rule.dismiss) is None:
            raise AppGraphError(
                f"popup rule: dismiss element {rule.dismiss!r} not on {rule.overlay!r}"
            )
        if rule.at_op < 1:
            raise AppGraphError("popup rule: at_op must be at least 1")
        graph.popup_rules.append(rule)

    return graph


def load_graph(path: str | Path) -> AppGraph:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AppGraphError(f"{path}: invalid JSON: {exc}") from exc
    return parse_graph(data)
