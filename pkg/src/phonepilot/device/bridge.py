"""Real-device driver speaking the debug-bridge shell protocol.

Exact command strings issued per operation (``-s SERIAL`` inserted after
the binary when a serial is configured):

===============  =====================================================
Operation        Command
===============  =====================================================
Tap(x, y)        ``adb shell input tap X Y``
Swipe(...)       ``adb shell input swipe X1 Y1 X2 Y2 300``
Type(text)       ``adb shell input text TEXT`` (escaped, space -> %s)
Enter            ``adb shell input keyevent KEYCODE_ENTER``
Back             ``adb shell input keyevent KEYCODE_BACK``
Home             ``adb shell input keyevent KEYCODE_HOME``
Switch_App       ``adb shell input keyevent KEYCODE_APP_SWITCH``
Open_App(name)   ``adb shell monkey -p NAME -c android.intent.category.LAUNCHER 1``
Wait             local sleep of exactly 10 seconds, no command
screenshot       ``adb shell screencap -p /sdcard/phonepilot_screen.png``
                 then ``adb pull /sdcard/phonepilot_screen.png LOCAL``
screen size      ``adb shell wm size``
===============  =====================================================

All transport failures surface as :class:`DeviceError` carrying the raw
driver output.
"""

from __future__ import annotations

import re
import subprocess
import time
from pathlib import Path
from typing import Callable, Sequence

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
from .base import ScreenState

REMOTE_SCREENSHOT = "/sdcard/phonepilot_screen.png"
WAIT_SECONDS = 10.0

_SIZE_RE = re.compile(r"Physical size: (\d+)x(\d+)")
_TEXT_ESCAPES = "\\;|`'\"&<>()$#*"


class CommandResult:
    def __init__(self, returncode: int, stdout: str = "", stderr: str = ""):
        self.returncode = returncode
        self.stdout = stdout
        self.stderr = stderr


Runner = Callable[[Sequence[str]], CommandResult]


def _subprocess_runner(args: Sequence[str]) -> CommandResult:
    proc = subprocess.run(list(args), capture_output=True, text=True)
    return CommandResult(proc.returncode, proc.stdout, proc.stderr)


def escape_text(text: str) -> str:
    out = []
    for ch in text:
        if ch == " ":
            out.append("%s")
        elif ch in _TEXT_ESCAPES:
            out.append("\\" + ch)
        else:
            out.append(ch)
    return "".join(out)


class BridgeDevice:
    """Session against a physical phone over the debug bridge."""

    def __init__(
        self,
        serial: str | None = None,
        binary: str = "adb",
        screenshot_dir: str | Path | None = None,
        runner: Runner | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.serial = serial
        self.binary = binary
        self.screenshot_dir = Path(screenshot_dir) if screenshot_dir else Path(".")
        self.runner = runner or _subprocess_runner
        self.sleep = sleep
        self.op_count = 0
        self.width, self.height = self._screen_size()

    def _adb(self, *args: str) -> list[str]:
        prefix = [self.binary]
        if self.serial:
            prefix += ["-s", self.serial]
        return prefix + list(args)

    def _run(self, *args: str) -> CommandResult:
        result = self.runner(self._adb(*args))
        if result.returncode != 0:
            raise DeviceError(
                f"bridge command failed: {' '.join(args)}: "
                f"{result.stderr.strip() or result.stdout.strip()}"
            )
        return result

    def _screen_size(self) -> tuple[int, int]:
        result = self._run("shell", "wm", "size")
        match = _SIZE_RE.search(result.stdout)
        if not match:
            raise DeviceError(f"could not parse screen size from {result.stdout!r}")
        return int(match.group(1)), int(match.group(2))

    def _check_bounds(self, points: list[tuple[float, float]]) -> None:
        for x, y in points:
            if not (0 <= x <= self.width and 0 <= y <= self.height):
                raise DeviceError(
                    f"coordinates ({x}, {y}) outside the {self.width}x{self.height} screen"
                )

    def execute(self, op: AtomicOperation) -> ScreenState:
        if isinstance(op, Tap):
            self._check_bounds([(op.x, op.y)])
            self._run("shell", "input", "tap", str(op.x), str(op.y))
        elif isinstance(op, Swipe):
            self._check_bounds([(op.x1, op.y1), (op.x2, op.y2)])
            self._run(
                "shell", "input", "swipe",
                str(op.x1), str(op.y1), str(op.x2), str(op.y2), "300",
            )
        elif isinstance(op, TypeText):
            self._run("shell", "input", "text", escape_text(op.text))
        elif isinstance(op, Enter):
            self._run("shell", "input", "keyevent", "KEYCODE_ENTER")
        elif isinstance(op, Back):
            self._run("shell", "input", "keyevent", "KEYCODE_BACK")
        elif isinstance(op, Home):
            self._run("shell", "input", "keyevent", "KEYCODE_HOME")
        elif isinstance(op, SwitchApp):
            self._run("shell", "input", "keyevent", "KEYCODE_APP_SWITCH")
        elif isinstance(op, OpenApp):
            self._run(
                "shell", "monkey", "-p", op.app_name,
                "-c", "android.intent.category.LAUNCHER", "1",
            )
        elif isinstance(op, Wait):
            self.sleep(WAIT_SECONDS)
        else:
            raise DeviceError(f"unsupported operation {op!r}")
        self.op_count += 1
        return self.capture()

    def capture(self) -> ScreenState:
        self._run("shell", "screencap", "-p", REMOTE_SCREENSHOT)
        local = self.screenshot_dir / f"bridge_capture_{self.op_count:04d}.png"
        self._run("pull", REMOTE_SCREENSHOT, str(local))
        return ScreenState(
            step_index=self.op_count,
            image=local,
            width=self.width,
            height=self.height,
        )
