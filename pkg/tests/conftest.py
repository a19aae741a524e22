from __future__ import annotations

import json

import pytest

from phonepilot.device import SimulatedDevice, parse_graph
from phonepilot.memory import LongTermMemory, Shortcut, Tip
from phonepilot.actions import parse_template


def pytest_addoption(parser):
    parser.addoption(
        "--regen-golden",
        action="store_true",
        default=False,
        help="rewrite the golden trajectory fixtures instead of comparing",
    )


TEST_GRAPH = {
    "screen": {"width": 360, "height": 640},
    "apps": {
        "Shop": {
            "entry": "main",
            "pages": {
                "main": {
                    "elements": [
                        {"id": "search_box", "kind": "text_field", "label": "Search products", "box": [20, 40, 296, 80]},
                        {"id": "clear_x", "kind": "button", "label": "x", "box": [300, 40, 340, 80], "clears": "search_box"},
                        {"id": "deals", "kind": "button", "label": "Deals", "box": [20, 100, 170, 140]},
                    ]
                },
                "deals": {
                    "elements": [
                        {"id": "deal_banner", "kind": "static_text", "label": "Daily deals", "box": [20, 40, 340, 80]}
                    ]
                },
                "results_tv": {
                    "elements": [
                        {"id": "item1", "kind": "list_item", "label": "OLED TV 55", "content": "$1299", "box": [20, 40, 340, 100]},
                        {"id": "item2", "kind": "list_item", "label": "OLED TV 48", "content": "$999", "box": [20, 110, 340, 170]},
                    ]
                },
                "no_results": {
                    "elements": [
                        {"id": "empty_msg", "kind": "static_text", "label": "No results found", "box": [20, 40, 340, 80]}
                    ]
                },
                "loading": {
                    "elements": [
                        {"id": "spinner", "kind": "static_text", "label": "Loading...", "box": [140, 300, 220, 340]}
                    ]
                },
                "item_page": {
                    "elements": [
                        {"id": "title", "kind": "static_text", "label": "OLED TV 55", "box": [20, 40, 340, 80]},
                        {"id": "add_cart", "kind": "button", "label": "Add to cart", "box": [20, 560, 340, 620]},
                    ]
                },
            },
            "transitions": [
                {"from": "main", "tap": "deals", "to": "deals"},
                {"from": "main", "submit": "search_box", "query": "oled tv", "to": "results_tv"},
                {"from": "main", "submit": "search_box", "to": "no_results"},
                {"from": "deals", "back": True, "to": "main"},
                {"from": "results_tv", "tap": "item1", "to": "loading"},
                {"from": "loading", "wait": True, "to": "item_page"},
            ],
        },
        "Feed": {
            "entry": "main",
            "pages": {
                "main": {
                    "elements": [
                        {"id": "post1", "kind": "list_item", "label": "First post", "box": [20, 40, 340, 150]}
                    ]
                },
                "page2": {
                    "elements": [
                        {"id": "post2", "kind": "list_item", "label": "Second post", "box": [20, 40, 340, 150]}
                    ]
                },
                "ad": {
                    "elements": [
                        {"id": "ad_body", "kind": "static_text", "label": "Sponsored!", "box": [40, 200, 320, 420]},
                        {"id": "close_x", "kind": "button", "label": "Close", "box": [280, 160, 320, 200]},
                    ]
                },
            },
            "transitions": [
                {"from": "main", "swipe": "up", "to": "page2"},
                {"from": "page2", "swipe": "down", "to": "main"},
            ],
        },
    },
    "popups": [
        {"page": "Feed/main", "at_op": 2, "overlay": "Feed/ad", "dismiss": "close_x"}
    ],
}


@pytest.fixture
def graph():
    return parse_graph(json.loads(json.dumps(TEST_GRAPH)))


@pytest.fixture
def sim(graph):
    return SimulatedDevice(graph)


def make_shortcut(
    name="Tap_Type_and_Enter",
    description="Tap a text box, type the given text, and press enter.",
    precondition="The current screen shows a text input box.",
    arguments=("x", "y", "text"),
    operations=("Tap(x, y)", "Type(text)", "Enter()"),
    provenance="seed",
) -> Shortcut:
    return Shortcut(
        name=name,
        description=description,
        precondition=precondition,
        arguments=tuple(arguments),
        operations=tuple(parse_template(op) for op in operations),
        provenance=provenance,
    )


@pytest.fixture
def tap_type_enter() -> Shortcut:
    return make_shortcut()


@pytest.fixture
def seeded_memory(tap_type_enter) -> LongTermMemory:
    memory = LongTermMemory()
    memory.add_shortcut(tap_type_enter)
    memory.replace_tips(
        [
            Tip(id=1, text="Use the search box at the top of a page for lookups."),
            Tip(id=2, text="If a page is still loading, wait before acting again."),
        ]
    )
    return memory
