from __future__ import annotations

import json
import random

import pytest

from phonepilot.actions import (
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
from phonepilot.device import SimulatedDevice, classify_swipe, parse_graph
from phonepilot.device.appgraph import BUILTIN_PAGES
from phonepilot.device.bridge import BridgeDevice, CommandResult, escape_text
from phonepilot.device.render import write_png
from phonepilot.errors import AppGraphError, DeviceError


def truth(state) -> dict:
    assert state.sim_truth is not None
    return state.sim_truth


def page_of(state) -> str:
    t = truth(state)
    return t["overlay"] if t["overlay"] else t["page"]


# -- capture basics ---------------------------------------------------------

def test_fresh_session_is_home_at_step_zero(sim):
    state = sim.capture()
    assert state.step_index == 0
    assert page_of(state) == "home"
    assert state.image_bytes().startswith(b"\x89PNG")


def test_step_index_counts_operations(sim):
    state = sim.execute(OpenApp("Shop"))
    assert state.step_index == 1
    assert sim.capture().step_index == 1


# -- tap semantics ----------------------------------------------------------

def test_tap_with_transition_changes_page(sim):
    sim.execute(OpenApp("Shop"))
    state = sim.execute(Tap(90, 120))  # "deals" button
    assert page_of(state) == "Shop/deals"


def test_tap_on_empty_space_changes_nothing(sim):
    sim.execute(OpenApp("Shop"))
    before = truth(sim.capture())
    after = truth(sim.execute(Tap(350, 630)))
    assert before == after


def test_tap_home_icon_opens_app(sim):
    home = truth(sim.capture())
    icon = next(e for e in home["elements"] if e["id"] == "Shop")
    left, top, right, bottom = icon["box"]
    state = sim.execute(Tap((left + right) // 2, (top + bottom) // 2))
    assert page_of(state) == "Shop/main"


# -- typing and submit ------------------------------------------------------

def test_type_appends_without_clearing(sim):
    sim.execute(OpenApp("Shop"))
    sim.execute(Tap(150, 60))  # focus search box
    sim.execute(TypeText("oranges"))
    state = sim.execute(TypeText("ribeye steak"))
    field = next(e for e in truth(state)["elements"] if e["id"] == "search_box")
    assert field["content"] == "orangesribeye steak"


def test_submit_matches_exact_query(sim):
    sim.execute(OpenApp("Shop"))
    sim.execute(Tap(150, 60))
    sim.execute(TypeText("oled tv"))
    state = sim.execute(Enter())
    assert page_of(state) == "Shop/results_tv"


def test_submit_falls_back_for_unknown_query(sim):
    sim.execute(OpenApp("Shop"))
    sim.execute(Tap(150, 60))
    sim.execute(TypeText("orangesribeye steak"))
    state = sim.execute(Enter())
    assert page_of(state) == "Shop/no_results"


def test_clear_element_empties_field(sim):
    sim.execute(OpenApp("Shop"))
    sim.execute(Tap(150, 60))
    sim.execute(TypeText("oranges"))
    state = sim.execute(Tap(320, 60))  # clear_x
    field = next(e for e in truth(state)["elements"] if e["id"] == "search_box")
    assert field["content"] == ""


def test_type_without_focus_changes_nothing(sim):
    sim.execute(OpenApp("Shop"))
    before = truth(sim.capture())
    after = truth(sim.execute(TypeText("hello")))
    assert before == after


# -- swipe, wait, back, home, switcher ---------------------------------------

def test_classify_swipe_directions():
    assert classify_swipe(Swipe(180, 500, 180, 100)) == "up"
    assert classify_swipe(Swipe(180, 100, 180, 500)) == "down"
    assert classify_swipe(Swipe(300, 300, 20, 300)) == "left"
    assert classify_swipe(Swipe(20, 300, 300, 310)) == "right"


def test_swipe_transition(sim):
    sim.execute(OpenApp("Feed"))
    state = sim.execute(Swipe(180, 500, 180, 100))
    assert page_of(state) == "Feed/page2"


def test_wait_resolves_pending_page(sim):
    sim.execute(OpenApp("Shop"))
    sim.execute(Tap(150, 60))
    sim.execute(TypeText("oled tv"))
    sim.execute(Enter())
    state = sim.execute(Tap(100, 70))  # item1 -> loading
    assert page_of(state) == "Shop/loading"
    state = sim.execute(Wait())
    assert page_of(state) == "Shop/item_page"
    before = truth(sim.capture())
    assert truth(sim.execute(Wait())) == before  # no pending transition


def test_back_uses_declared_transition(sim):
    sim.execute(OpenApp("Shop"))
    sim.execute(Tap(90, 120))
    state = sim.execute(Back())
    assert page_of(state) == "Shop/main"


def test_back_pops_history_without_declared_transition(sim):
    sim.execute(OpenApp("Feed"))
    sim.execute(Swipe(180, 500, 180, 100))
    state = sim.execute(Back())
    assert page_of(state) == "Feed/main"
    state = sim.execute(Back())
    assert page_of(state) == "home"


def test_home_and_reopen_resumes_last_page(sim):
    sim.execute(OpenApp("Shop"))
    sim.execute(Tap(90, 120))  # deals
    state = sim.execute(Home())
    assert page_of(state) == "home"
    state = sim.execute(OpenApp("Shop"))
    assert page_of(state) == "Shop/deals"


def test_switcher_lists_open_apps_and_resumes(sim):
    sim.execute(OpenApp("Shop"))
    sim.execute(Home())
    sim.execute(OpenApp("Feed"))
    state = sim.execute(SwitchApp())
    rows = [e["id"] for e in truth(state)["elements"]]
    assert rows == ["Shop", "Feed"]
    shop_row = next(e for e in truth(state)["elements"] if e["id"] == "Shop")
    left, top, right, bottom = shop_row["box"]
    state = sim.execute(Tap((left + right) // 2, (top + bottom) // 2))
    assert page_of(state) == "Shop/main"


def test_open_app_only_from_home_or_switcher(sim):
    sim.execute(OpenApp("Shop"))
    before = truth(sim.capture())
    assert truth(sim.execute(OpenApp("Feed"))) == before
    sim.execute(SwitchApp())
    state = sim.execute(OpenApp("Feed"))
    assert page_of(state) == "Feed/main"


def test_open_unknown_app_changes_nothing(sim):
    before = truth(sim.capture())
    assert truth(sim.execute(OpenApp("Ghost"))) == before


# -- popups ------------------------------------------------------------------

def test_popup_fires_and_dismiss_restores_exactly(sim):
    sim.execute(OpenApp("Feed"))  # op 1 on Feed/main
    underlying = truth(sim.capture())
    state = sim.execute(Tap(350, 630))  # op 2: rule fires
    assert truth(state)["overlay"] == "Feed/ad"
    close = next(e for e in truth(state)["elements"] if e["id"] == "close_x")
    left, top, right, bottom = close["box"]
    state = sim.execute(Tap((left + right) // 2, (top + bottom) // 2))
    assert truth(state) == underlying


def test_popup_blocks_other_taps(sim):
    sim.execute(OpenApp("Feed"))
    state = sim.execute(Tap(350, 630))
    assert truth(state)["overlay"] == "Feed/ad"
    state = sim.execute(Tap(100, 300))  # ad body, no transition
    assert truth(state)["overlay"] == "Feed/ad"


# -- bounds and errors --------------------------------------------------------

def test_out_of_bounds_tap_raises(sim):
    with pytest.raises(DeviceError, match="outside"):
        sim.execute(Tap(9999, 10))


def test_out_of_bounds_swipe_raises(sim):
    with pytest.raises(DeviceError):
        sim.execute(Swipe(10, 10, 10, 99999))


# -- determinism and closed world ---------------------------------------------

def _random_ops(seed: int, count: int, width: int, height: int):
    rng = random.Random(seed)
    ops = []
    for _ in range(count):
        choice = rng.randrange(8)
        if choice == 0:
            ops.append(Tap(rng.randrange(width), rng.randrange(height)))
        elif choice == 1:
            ops.append(
                Swipe(
                    rng.randrange(width), rng.randrange(height),
                    rng.randrange(width), rng.randrange(height),
                )
            )
        elif choice == 2:
            ops.append(TypeText(rng.choice(["oled tv", "oranges", "x"])))
        elif choice == 3:
            ops.append(Enter())
        elif choice == 4:
            ops.append(Back())
        elif choice == 5:
            ops.append(OpenApp(rng.choice(["Shop", "Feed", "Ghost"])))
        elif choice == 6:
            ops.append(rng.choice([Home(), SwitchApp()]))
        else:
            ops.append(Wait())
    return ops


def test_determinism_byte_for_byte(graph):
    ops = _random_ops(seed=7, count=60, width=graph.width, height=graph.height)
    runs = []
    for _ in range(2):
        session = SimulatedDevice(graph)
        states = [session.capture()] + [session.execute(op) for op in ops]
        runs.append(
            [
                (json.dumps(s.sim_truth, sort_keys=True), s.image_bytes())
                for s in states
            ]
        )
    assert runs[0] == runs[1]


def test_closed_world(graph):
    page_universe = set(graph.pages) | set(BUILTIN_PAGES)
    for seed in range(5):
        session = SimulatedDevice(graph)
        for op in _random_ops(seed, 40, graph.width, graph.height):
            state = session.execute(op)
            assert page_of(state) in page_universe
            assert state.sim_truth["page"] in page_universe


# -- graph validation ----------------------------------------------------------

def _base_graph() -> dict:
    return {
        "screen": {"width": 100, "height": 100},
        "apps": {
            "A": {
                "pages": {
                    "p": {"elements": [{"id": "b", "kind": "button", "label": "B", "box": [0, 0, 10, 10]}]}
                },
                "transitions": [],
            }
        },
    }


def test_graph_rejects_box_outside_screen():
    data = _base_graph()
    data["apps"]["A"]["pages"]["p"]["elements"][0]["box"] = [0, 0, 200, 10]
    with pytest.raises(AppGraphError, match="outside"):
        parse_graph(data)


def test_graph_rejects_unknown_transition_target():
    data = _base_graph()
    data["apps"]["A"]["transitions"] = [{"from": "p", "tap": "b", "to": "nowhere"}]
    with pytest.raises(AppGraphError, match="target page"):
        parse_graph(data)


def test_graph_rejects_duplicate_trigger():
    data = _base_graph()
    data["apps"]["A"]["pages"]["q"] = {"elements": []}
    data["apps"]["A"]["transitions"] = [
        {"from": "p", "tap": "b", "to": "q"},
        {"from": "p", "tap": "b", "to": "p"},
    ]
    with pytest.raises(AppGraphError, match="duplicate trigger"):
        parse_graph(data)


def test_graph_rejects_bad_kind():
    data = _base_graph()
    data["apps"]["A"]["pages"]["p"]["elements"][0]["kind"] = "widget"
    with pytest.raises(AppGraphError, match="unknown element kind"):
        parse_graph(data)


def test_graph_rejects_popup_without_dismiss():
    data = _base_graph()
    data["apps"]["A"]["pages"]["ad"] = {"elements": []}
    data["popups"] = [{"page": "A/p", "at_op": 1, "overlay": "A/ad", "dismiss": "x"}]
    with pytest.raises(AppGraphError, match="dismiss element"):
        parse_graph(data)


# -- rendering ----------------------------------------------------------------

def test_png_writer_shape_checks():
    with pytest.raises(ValueError):
        write_png(2, 2, b"\x00" * 5)
    png = write_png(2, 2, bytes(12))
    assert png.startswith(b"\x89PNG") and png.endswith(b"IEND\xaeB`\x82")


# -- bridge driver --------------------------------------------------------------

class FakeRunner:
    def __init__(self, fail_on: str | None = None):
        self.calls: list[list[str]] = []
        self.fail_on = fail_on

    def __call__(self, args):
        self.calls.append(list(args))
        joined = " ".join(args)
        if self.fail_on and self.fail_on in joined:
            return CommandResult(1, "", "device offline")
        if "wm size" in joined or ("wm" in args and "size" in args):
            return CommandResult(0, "Physical size: 1080x2400\n")
        return CommandResult(0, "")


def _bridge(tmp_path, runner=None):
    return BridgeDevice(
        serial="ABC123",
        screenshot_dir=tmp_path,
        runner=runner or FakeRunner(),
        sleep=lambda s: None,
    )


def test_bridge_command_strings(tmp_path):
    runner = FakeRunner()
    device = _bridge(tmp_path, runner)
    device.execute(Tap(12, 34))
    device.execute(Swipe(1, 2, 3, 4))
    device.execute(TypeText("hi there"))
    device.execute(Enter())
    device.execute(Back())
    device.execute(Home())
    device.execute(SwitchApp())
    device.execute(OpenApp("com.shop.app"))
    issued = [" ".join(c) for c in runner.calls]
    assert issued[0] == "adb -s ABC123 shell wm size"
    assert "adb -s ABC123 shell input tap 12 34" in issued
    assert "adb -s ABC123 shell input swipe 1 2 3 4 300" in issued
    assert "adb -s ABC123 shell input text hi%sthere" in issued
    assert "adb -s ABC123 shell input keyevent KEYCODE_ENTER" in issued
    assert "adb -s ABC123 shell input keyevent KEYCODE_BACK" in issued
    assert "adb -s ABC123 shell input keyevent KEYCODE_HOME" in issued
    assert "adb -s ABC123 shell input keyevent KEYCODE_APP_SWITCH" in issued
    assert (
        "adb -s ABC123 shell monkey -p com.shop.app -c android.intent.category.LAUNCHER 1"
        in issued
    )
    # Each execute ends with a screenshot capture.
    assert any("screencap" in c for c in issued)
    assert any(c.startswith("adb -s ABC123 pull /sdcard/phonepilot_screen.png") for c in issued)


def test_bridge_wait_sleeps_without_commands(tmp_path):
    runner = FakeRunner()
    slept = []
    device = BridgeDevice(
        serial=None, screenshot_dir=tmp_path, runner=runner, sleep=slept.append
    )
    before = len(runner.calls)
    device.execute(Wait())
    assert slept == [10.0]
    # Only the capture commands follow the wait.
    issued = [" ".join(c) for c in runner.calls[before:]]
    assert all("input" not in c and "monkey" not in c for c in issued)


def test_bridge_screen_size_and_state(tmp_path):
    device = _bridge(tmp_path)
    assert (device.width, device.height) == (1080, 2400)
    state = device.capture()
    assert state.width == 1080 and state.sim_truth is None


def test_bridge_transport_failure_carries_raw_output(tmp_path):
    device = _bridge(tmp_path)
    device.runner = FakeRunner(fail_on="input tap")
    with pytest.raises(DeviceError, match="device offline"):
        device.execute(Tap(1, 1))


def test_bridge_disconnected_at_open(tmp_path):
    with pytest.raises(DeviceError):
        BridgeDevice(screenshot_dir=tmp_path, runner=FakeRunner(fail_on="wm size"))


def test_escape_text():
    assert escape_text("a b") == "a%sb"
    assert escape_text("a&b") == "a\\&b"
