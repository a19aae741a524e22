"""Action space: the nine atomic device operations, shortcut invocations,
and the distinguished Stop action, plus the call-expression grammar used
for operator ACTION lines and shortcut operation templates.

Call expressions look like ``Tap(540, 1230)``, ``Type("oled tv")`` or
``Tap_Type_and_Enter(x=120, y=80, text="oled tv")``.  Arguments are number
or string literals; inside shortcut templates a bare identifier is a slot
that references a shortcut argument.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import ActionParseError

Number = Union[int, float]


@dataclass(frozen=True)
class OpenApp:
    app_name: str


@dataclass(frozen=True)
class Tap:
    x: Number
    y: Number


@dataclass(frozen=True)
class Swipe:
    x1: Number
    y1: Number
    x2: Number
    y2: Number


@dataclass(frozen=True)
class TypeText:
    text: str


@dataclass(frozen=True)
class Enter:
    pass


@dataclass(frozen=True)
class SwitchApp:
    pass


@dataclass(frozen=True)
class Back:
    pass


@dataclass(frozen=True)
class Home:
    pass


@dataclass(frozen=True)
class Wait:
    pass


@dataclass(frozen=True)
class Stop:
    """Operator-issued clean stop carrying a completion message."""

    message: str = ""


@dataclass(frozen=True)
class ShortcutInvocation:
    """A named shortcut call with argument values bound by name."""

    name: str
    arguments: tuple[tuple[str, Number | str], ...]

    def value_map(self) -> dict[str, Number | str]:
        return dict(self.arguments)


AtomicOperation = Union[OpenApp, Tap, Swipe, TypeText, Enter, SwitchApp, Back, Home, Wait]
Action = Union[AtomicOperation, Stop, ShortcutInvocation]

# name -> (class, argument names, argument kinds)
ATOMIC_OPS: dict[str, tuple[type, tuple[str, ...], tuple[str, ...]]] = {
    "Open_App": (OpenApp, ("app_name",), ("text",)),
    "Tap": (Tap, ("x", "y"), ("number", "number")),
    "Swipe": (Swipe, ("x1", "y1", "x2", "y2"), ("number",) * 4),
    "Type": (TypeText, ("text",), ("text",)),
    "Enter": (Enter, (), ()),
    "Switch_App": (SwitchApp, (), ()),
    "Back": (Back, (), ()),
    "Home": (Home, (), ()),
    "Wait": (Wait, (), ()),
}

_CLASS_TO_NAME = {cls: name for name, (cls, _, _) in ATOMIC_OPS.items()}

# Names an agent may emit that are not shortcut names.
RESERVED_ACTION_NAMES = frozenset(ATOMIC_OPS) | {"Stop"}

# Repeated-action termination ignores these (scrolling and backing out are
# legitimately repetitive).
REPEAT_EXEMPT_OPS = (Swipe, Back)


@dataclass(frozen=True)
class SlotRef:
    """A template slot referencing a shortcut argument by name."""

    name: str


TemplateValue = Union[Number, str, SlotRef]


@dataclass(frozen=True)
class OperationTemplate:
    """One step of a shortcut: an atomic op with literal or slot arguments."""

    op: str
    args: tuple[TemplateValue, ...]


@dataclass(frozen=True)
class CallExpr:
    """Parsed call expression prior to action resolution."""

    name: str
    positional: tuple[TemplateValue, ...]
    keyword: tuple[tuple[str, TemplateValue], ...]


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<number>-?\d+(?:\.\d+)?)
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<punct>[(),=])
    )""",
    re.VERBOSE,
)

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}


def _unquote(token: str) -> str:
    body = token[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body) and body[i + 1] in _ESCAPES:
            out.append(_ESCAPES[body[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            tail = text[pos:].strip()
            if not tail:
                break
            raise ActionParseError(f"unexpected input at {tail[:20]!r}")
        pos = match.end()
        kind = match.lastgroup
        assert kind is not None
        tokens.append((kind, match.group(kind)))
    return tokens


def _coerce_number(token: str) -> Number:
    value = float(token)
    return int(value) if value.is_integer() and "." not in token else value


def parse_call(text: str, allow_slots: bool = False) -> CallExpr:
    """Parse one call expression.

    Bare identifiers in argument position are slot references and only
    allowed when ``allow_slots`` is set (shortcut operation templates).
    """
    tokens = _tokenize(text)
    if not tokens or tokens[0][0] != "name":
        raise ActionParseError(f"expected an action name in {text!r}")
    name = tokens[0][1]
    rest = tokens[1:]
    if not rest or rest[0] != ("punct", "("):
        raise ActionParseError(f"expected '(' after {name!r}")
    if rest[-1] != ("punct", ")"):
        raise ActionParseError(f"expected ')' to close the call in {text!r}")
    inner = rest[1:-1]

    positional: list[TemplateValue] = []
    keyword: list[tuple[str, TemplateValue]] = []
    i = 0

    def take_value(j: int) -> tuple[TemplateValue, int]:
        kind, tok = inner[j]
        if kind == "number":
            return _coerce_number(tok), j + 1
        if kind == "string":
            return _unquote(tok), j + 1
        if kind == "name":
            if not allow_slots:
                raise ActionParseError(
                    f"bare identifier {tok!r} is not a valid argument; quote strings"
                )
            return SlotRef(tok), j + 1
        raise ActionParseError(f"unexpected token {tok!r} in arguments")

    while i < len(inner):
        if inner[i][0] == "name" and i + 1 < len(inner) and inner[i + 1] == ("punct", "="):
            key = inner[i][1]
            value, i = take_value(i + 2)
            keyword.append((key, value))
        else:
            value, i = take_value(i)
            if keyword:
                raise ActionParseError("positional argument after keyword argument")
            positional.append(value)
        if i < len(inner):
            if inner[i] != ("punct", ","):
                raise ActionParseError(f"expected ',' between arguments in {text!r}")
            i += 1
            if i == len(inner):
                raise ActionParseError(f"trailing comma in {text!r}")
    return CallExpr(name=name, positional=tuple(positional), keyword=tuple(keyword))


def _format_value(value: TemplateValue) -> str:
    if isinstance(value, SlotRef):
        return value.name
    if isinstance(value, str):
        return _quote(value)
    return str(value)


def format_call(name: str, args: Sequence[TemplateValue]) -> str:
    return f"{name}({', '.join(_format_value(a) for a in args)})"


def format_template(template: OperationTemplate) -> str:
    return format_call(template.op, template.args)


def parse_template(text: str) -> OperationTemplate:
    """Parse a shortcut operation template like ``Tap(x, y)``."""
    call = parse_call(text, allow_slots=True)
    if call.keyword:
        raise ActionParseError(f"keyword arguments are not allowed in templates: {text!r}")
    return OperationTemplate(op=call.name, args=call.positional)


def _build_atomic(name: str, values: Sequence[Number | str]) -> AtomicOperation:
    cls, arg_names, arg_kinds = ATOMIC_OPS[name]
    if len(values) != len(arg_names):
        raise ActionParseError(
            f"{name} takes {len(arg_names)} argument(s), got {len(values)}"
        )
    for value, arg_name, kind in zip(values, arg_names, arg_kinds):
        if kind == "number" and not isinstance(value, (int, float)):
            raise ActionParseError(f"argument {arg_name!r} of {name} must be a number")
        if kind == "text" and not isinstance(value, str):
            raise ActionParseError(f"argument {arg_name!r} of {name} must be a string")
    return cls(*values)


def _resolve_args(
    call: CallExpr, arg_names: Sequence[str], context: str
) -> list[Number | str]:
    """Merge positional and keyword call arguments onto declared names."""
    if len(call.positional) > len(arg_names):
        raise ActionParseError(
            f"{context} takes at most {len(arg_names)} argument(s), got {len(call.positional)}"
        )
    slots: dict[str, Number | str] = {}
    for name, value in zip(arg_names, call.positional):
        slots[name] = value  # type: ignore[assignment]
    for key, value in call.keyword:
        if key not in arg_names:
            raise ActionParseError(f"{context} has no argument named {key!r}")
        if key in slots:
            raise ActionParseError(f"argument {key!r} given twice in {context}")
        slots[key] = value  # type: ignore[assignment]
    missing = [n for n in arg_names if n not in slots]
    if missing:
        raise ActionParseError(f"{context} is missing argument(s): {', '.join(missing)}")
    return [slots[n] for n in arg_names]


def parse_action(text: str, shortcut_args: Mapping[str, Sequence[str]] | None = None) -> Action:
    """Parse an operator ACTION line into an action.

    ``shortcut_args`` maps known shortcut names to their declared argument
    names so invocations can be resolved.  Unknown names raise
    :class:`ActionParseError`.
    """
    call = parse_call(text.strip(), allow_slots=False)
    if call.name in ATOMIC_OPS:
        values = _resolve_args(call, ATOMIC_OPS[call.name][1], call.name)
        return _build_atomic(call.name, values)
    if call.name == "Stop":
        if call.keyword or len(call.positional) > 1:
            raise ActionParseError("Stop takes at most one message argument")
        message = call.positional[0] if call.positional else ""
        if not isinstance(message, str):
            raise ActionParseError("Stop message must be a string")
        return Stop(message=message)
    if shortcut_args is not None and call.name in shortcut_args:
        declared = list(shortcut_args[call.name])
        values = _resolve_args(call, declared, f"shortcut {call.name}")
        return ShortcutInvocation(
            name=call.name,
            arguments=tuple(zip(declared, values)),
        )
    raise ActionParseError(f"unknown action {call.name!r}")


def format_action(action: Action) -> str:
    """Render an action back to its canonical call-expression form."""
    if isinstance(action, ShortcutInvocation):
        return format_call(action.name, [v for _, v in action.arguments])
    if isinstance(action, Stop):
        return format_call("Stop", [action.message] if action.message else [])
    name = _CLASS_TO_NAME[type(action)]
    _, arg_names, _ = ATOMIC_OPS[name]
    return format_call(name, [getattr(action, a) for a in arg_names])


def is_repeat_exempt(action: Action) -> bool:
    return isinstance(action, REPEAT_EXEMPT_OPS)
