"""Deterministic simulated phone driven by an app graph.

Execution semantics:

* ``Tap`` resolves to the topmost element whose box contains the point
  (later-declared elements sit on top); taps on empty space change
  nothing.  Tapping a text field focuses it; tapping an element with a
  ``clears`` attribute empties the named field.
* ``Type`` appends to the focused field without clearing it; ``Enter``
  fires the field's submit transition, preferring an exact query match
  over the generic fallback.
* ``Swipe`` is classified into up/down/left/right by the dominant axis.
* ``Back`` follows a declared back transition when present, otherwise
  pops the navigation history.  ``Home`` and ``Switch_App`` go to the
  built-in pages; ``Open_App`` only works from those two pages.
* ``Wait`` resolves a pending page via its wait transition.

Invalid gestures never raise; they are no-change outcomes.  Coordinates
outside the screen are invalid operations and raise ``DeviceError``.
"""

from __future__ import annotations

from ..actions import (
    AtomicOperation,
    Back,
    Enter,
    Home,
    OpenApp,
    Swipe,
    SwitchApp,
    Tap,
    TypeText,
    Wait,
)
from ..errors import DeviceError
from .appgraph import (
    BACK_TRIGGER,
    HOME_PAGE,
    SWITCHER_PAGE,
    WAIT_TRIGGER,
    AppGraph,
    Element,
    submit_trigger,
    swipe_trigger,
    tap_trigger,
)
from .base import ScreenState
from .render import render_screen


def classify_swipe(op: Swipe) -> str:
    """Dominant-axis direction of the gesture; ties resolve vertically."""
    dx = op.x2 - op.x1
    dy = op.y2 - op.y1
    if abs(dx) > abs(dy):
        return "right" if dx > 0 else "left"
    return "down" if dy > 0 else "up"


class SimulatedDevice:
    """A single simulator session; state is fully local to the instance."""

    def __init__(self, graph: AppGraph):
        self.graph = graph
        self.width = graph.width
        self.height = graph.height
        self.op_count = 0
        self.current_page = HOME_PAGE
        self.overlay: str | None = None
        self.overlay_dismiss: str | None = None
        self.nav_stack: list[str] = []
        self.open_apps: list[str] = []
        self.last_page: dict[str, str] = {}  # app -> last visited page id
        self.field_contents: dict[tuple[str, str], str] = {}
        self.focused: tuple[str, str] | None = None  # (page_id, element_id)
        self._fired_popups: set[int] = set()

    # -- view helpers -------------------------------------------------

    def _visible_page_id(self) -> str:
        return self.overlay if self.overlay is not None else self.current_page

    def _page_elements(self, page_id: str) -> tuple[Element, ...]:
        if page_id == HOME_PAGE:
            return self.graph.home_elements()
        if page_id == SWITCHER_PAGE:
            return self.graph.switcher_elements(self.open_apps)
        return self.graph.pages[page_id].elements

    def _live_content(self, page_id: str, element: Element) -> str:
        return self.field_contents.get((page_id, element.id), element.content)

    def _hit_test(self, x: float, y: float) -> Element | None:
        page_id = self._visible_page_id()
        for element in reversed(self._page_elements(page_id)):
            left, top, right, bottom = element.box
            if left <= x <= right and top <= y <= bottom:
                return element
        return None

    # -- navigation ---------------------------------------------------

    def _navigate(self, target: str) -> None:
        previous = self._visible_page_id()
        self.overlay = None
        self.overlay_dismiss = None
        self.focused = None
        if target != previous:
            self.nav_stack.append(previous)
        self.current_page = target
        if target not in (HOME_PAGE, SWITCHER_PAGE):
            app = self.graph.pages[target].app
            self.last_page[app] = target
            if app not in self.open_apps:
                self.open_apps.append(app)

    def _graph_target(self, trigger) -> str | None:
        return self.graph.target(self._visible_page_id(), trigger)

    # -- operation semantics -------------------------------------------

    def _check_bounds(self, op: AtomicOperation) -> None:
        if isinstance(op, Tap):
            points = [(op.x, op.y)]
        elif isinstance(op, Swipe):
            points = [(op.x1, op.y1), (op.x2, op.y2)]
        else:
            return
        for x, y in points:
            if not (0 <= x <= self.width and 0 <= y <= self.height):
                raise DeviceError(
                    f"coordinates ({x}, {y}) outside the {self.width}x{self.height} screen"
                )

    def _apply(self, op: AtomicOperation) -> None:
        if isinstance(op, Tap):
            element = self._hit_test(op.x, op.y)
            if element is None:
                return
            page_id = self._visible_page_id()
            if self.overlay is not None and element.id == self.overlay_dismiss:
                # Dismissing restores the underlying page exactly.
                self.overlay = None
                self.overlay_dismiss = None
                return
            if page_id == HOME_PAGE and element.id in self.graph.entries:
                self._navigate(self.last_page.get(element.id, self.graph.entries[element.id]))
                return
            if page_id == SWITCHER_PAGE and element.id in self.graph.entries:
                self._navigate(self.last_page.get(element.id, self.graph.entries[element.id]))
                return
            if element.clears:
                self.field_contents[(page_id, element.clears)] = ""
            if element.kind == "text_field":
                self.focused = (page_id, element.id)
            target = self._graph_target(tap_trigger(element.id))
            if target is not None:
                self._navigate(target)
        elif isinstance(op, TypeText):
            if self.focused is None or self.focused[0] != self._visible_page_id():
                return
            page_id, element_id = self.focused
            element = next(e for e in self._page_elements(page_id) if e.id == element_id)
            current = self._live_content(page_id, element)
            # Appends to whatever is already there; no implicit clearing.
            self.field_contents[(page_id, element_id)] = current + op.text
        elif isinstance(op, Enter):
            if self.focused is None or self.focused[0] != self._visible_page_id():
                return
            page_id, element_id = self.focused
            element = next(e for e in self._page_elements(page_id) if e.id == element_id)
            query = self._live_content(page_id, element)
            target = self._graph_target(submit_trigger(element_id, query))
            if target is None:
                target = self._graph_target(submit_trigger(element_id, None))
            if target is not None:
                self._navigate(target)
        elif isinstance(op, Swipe):
            target = self._graph_target(swipe_trigger(classify_swipe(op)))
            if target is not None:
                self._navigate(target)
        elif isinstance(op, Back):
            target = self._graph_target(BACK_TRIGGER)
            if target is not None:
                self._navigate(target)
            elif self.overlay is not None:
                pass  # only the dismiss element closes an overlay
            elif self.nav_stack:
                previous = self.nav_stack.pop()
                self.focused = None
                self.current_page = previous
                if previous not in (HOME_PAGE, SWITCHER_PAGE):
                    self.last_page[self.graph.pages[previous].app] = previous
        elif isinstance(op, Home):
            if self._visible_page_id() != HOME_PAGE:
                self._navigate(HOME_PAGE)
        elif isinstance(op, SwitchApp):
            if self._visible_page_id() != SWITCHER_PAGE:
                self._navigate(SWITCHER_PAGE)
        elif isinstance(op, OpenApp):
            if self.current_page in (HOME_PAGE, SWITCHER_PAGE) and self.overlay is None:
                if op.app_name in self.graph.entries:
                    self._navigate(
                        self.last_page.get(op.app_name, self.graph.entries[op.app_name])
                    )
        elif isinstance(op, Wait):
            target = self._graph_target(WAIT_TRIGGER)
            if target is not None:
                self._navigate(target)
        else:
            raise DeviceError(f"unsupported operation {op!r}")

    def _check_popups(self) -> None:
        if self.overlay is not None:
            return
        for index, rule in enumerate(self.graph.popup_rules):
            if index in self._fired_popups:
                continue
            if rule.page == self.current_page and rule.at_op == self.op_count:
                self.overlay = rule.overlay
                self.overlay_dismiss = rule.dismiss
                self._fired_popups.add(index)
                return

    def execute(self, op: AtomicOperation) -> ScreenState:
        self._check_bounds(op)
        self._apply(op)
        self.op_count += 1
        self._check_popups()
        return self.capture()

    def capture(self) -> ScreenState:
        page_id = self._visible_page_id()
        elements = [
            {
                "id": e.id,
                "kind": e.kind,
                "label": e.label,
                "content": self._live_content(page_id, e),
                "box": list(e.box),
            }
            for e in self._page_elements(page_id)
        ]
        sim_truth = {
            "page": self.current_page,
            "overlay": self.overlay,
            "focused": f"{self.focused[0]}#{self.focused[1]}" if self.focused else None,
            "elements": elements,
        }
        image = render_screen(self.width, self.height, page_id, elements)
        return ScreenState(
            step_index=self.op_count,
            image=image,
            width=self.width,
            height=self.height,
            sim_truth=sim_truth,
        )
