"""Phone abstraction: app graphs, the deterministic simulator, and the
debug-bridge driver for real devices."""

from .appgraph import AppGraph, Element, Page, PopupRule, load_graph, parse_graph
from .base import DeviceSession, ScreenState
from .bridge import BridgeDevice
from .simulator import SimulatedDevice, classify_swipe

__all__ = [
    "AppGraph",
    "BridgeDevice",
    "DeviceSession",
    "Element",
    "Page",
    "PopupRule",
    "ScreenState",
    "SimulatedDevice",
    "classify_swipe",
    "load_graph",
    "parse_graph",
]
