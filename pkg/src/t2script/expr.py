"""Expression parsing and interpolation.

An expression starts with ``$``, takes an optional modifier (``@`` local,
``_`` constant, ``=`` function call, ``?`` complex expression), a name, an
optional ``[index]`` and an optional ``.`` terminator.  Everything else in
parameter text is literal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Protocol, Union

from .errors import EmptyName, MalformedExpression, UnbalancedIndex, UnknownOperator
from .operators import ENV_OPERATORS, OperatorEnv, apply_operator, canonical_name, is_builtin

MODIFIERS = "@_=?"
_NAME_STOP = frozenset(".[];{}")


@dataclass(frozen=True)
class ExpressionNode:
    modifier: str
    name: str
    index: Optional[Union["Template", "OperatorCall"]] = None
    had_terminator: bool = False


Piece = Union[str, ExpressionNode]
Template = tuple  # tuple[Piece, ...]


@dataclass(frozen=True)
class OperatorCall:
    """Parsed ``[op arg ...]``; each element is a Template or a nested call."""

    elements: tuple

    @property
    def operator_name(self) -> Optional[str]:
        head = self.elements[0] if self.elements else None
        if isinstance(head, tuple) and len(head) == 1 and isinstance(head[0], str):
            return head[0]
        return None


def _scan_name(text: str, pos: int) -> tuple[str, int]:
    start = pos
    parens = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in _NAME_STOP or ch.isspace():
            break
        if ch == "(":
            parens += 1
        elif ch == ")":
            if parens == 0:
                break
            parens -= 1
        pos += 1
    if parens:
        raise MalformedExpression(f"unbalanced parentheses in expression name {text[start:pos]!r}")
    return text[start:pos], pos


def parse_expression(text: str, start: int = 0) -> tuple[ExpressionNode, int]:
    """Parse the expression whose ``$`` sits at ``start``; return it and the end position."""
    if text[start:start + 1] != "$":
        raise MalformedExpression(f"expression must start with '$' at position {start}")
    pos = start + 1
    n = len(text)
    modifier = ""
    if pos < n and text[pos] in MODIFIERS:
        modifier = text[pos]
        pos += 1
    name, pos = _scan_name(text, pos)
    if name and name[0] in MODIFIERS:
        raise MalformedExpression(f"expression name {name!r} starts with a modifier character")
    index = None
    if pos < n and text[pos] == "[":
        if modifier == "?":
            index, pos = _parse_call(text, pos + 1, "]")
        else:
            index, pos = _parse_template(text, pos + 1, "]")
    if modifier == "?":
        if name or index is None:
            raise MalformedExpression(f"complex expression needs the form $?[...] in {text[start:pos]!r}")
    elif not name:
        raise EmptyName(f"expression without a name at position {start} in {text!r}")
    terminated = pos < n and text[pos] == "."
    if terminated:
        pos += 1
    return ExpressionNode(modifier, name, index, terminated), pos


def _parse_template(text: str, pos: int, closer: Optional[str]) -> tuple[Template, int]:
    pieces: list[Piece] = []
    buf: list[str] = []
    depth = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "$":
            if buf:
                pieces.append("".join(buf))
                buf = []
            node, pos = parse_expression(text, pos)
            pieces.append(node)
            continue
        if closer is not None:
            if ch == "[":
                depth += 1
            elif ch == "]":
                if depth == 0:
                    if buf:
                        pieces.append("".join(buf))
                    return tuple(pieces), pos + 1
                depth -= 1
        buf.append(ch)
        pos += 1
    if closer is not None:
        raise UnbalancedIndex(f"missing ']' in {text!r}")
    if buf:
        pieces.append("".join(buf))
    return tuple(pieces), pos


def _parse_call(text: str, pos: int, closer: str) -> tuple[OperatorCall, int]:
    elements: list = []
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            raise UnbalancedIndex(f"missing {closer!r} in {text!r}")
        ch = text[pos]
        if ch == closer:
            return OperatorCall(tuple(elements)), pos + 1
        if ch in ")]":
            raise UnbalancedIndex(f"unexpected {ch!r} at position {pos} in {text!r}")
        if ch == "(":
            sub, pos = _parse_call(text, pos + 1, ")")
            elements.append(sub)
            continue
        pieces: list[Piece] = []
        buf: list[str] = []
        while pos < n:
            ch = text[pos]
            if ch.isspace() or ch in ")]":
                break
            if ch == "$":
                if buf:
                    pieces.append("".join(buf))
                    buf = []
                node, pos = parse_expression(text, pos)
                pieces.append(node)
                continue
            buf.append(ch)
            pos += 1
        if buf:
            pieces.append("".join(buf))
        elements.append(tuple(pieces))


@lru_cache(maxsize=8192)
def parse_template(text: str) -> Template:
    """Parse parameter text into literal strings and expression nodes."""
    return _parse_template(text, 0, None)[0]


@lru_cache(maxsize=2048)
def parse_operator_call(text: str) -> OperatorCall:
    """Parse the inside of a complex expression (without the brackets)."""
    call, pos = _parse_call(text + "]", 0, "]")
    return call


class Environment(Protocol):
    """What expression evaluation needs from the VM."""

    def read_variable(self, local: bool, name: str, index: Optional[str]) -> str: ...

    def resolve_constant(self, name: str, context) -> str: ...

    def function_exists(self, name: str) -> bool: ...

    def call_function_value(self, name: str, args: list[str]) -> str: ...

    def operator_env(self, context) -> OperatorEnv: ...


def interpolate(text: str, env: Environment, context=None) -> str:
    """Replace every expression in ``text`` by its value."""
    if "$" not in text:
        return text
    return eval_template(parse_template(text), env, context)


def eval_template(template: Template, env: Environment, context=None) -> str:
    parts = []
    for piece in template:
        parts.append(piece if isinstance(piece, str) else eval_node(piece, env, context))
    return "".join(parts)


def eval_node(node: ExpressionNode, env: Environment, context=None) -> str:
    mod = node.modifier
    if mod in ("", "@"):
        index = None if node.index is None else eval_template(node.index, env, context)
        return env.read_variable(mod == "@", node.name, index)
    if mod == "_":
        if node.index is not None:
            raise MalformedExpression(f"constant {node.name!r} cannot take an index")
        return env.resolve_constant(node.name, context)
    if mod == "=":
        arg_text = "" if node.index is None else eval_template(node.index, env, context)
        return env.call_function_value(node.name, arg_text.split())
    return eval_complex(node.index, env, context)


def eval_complex(call: OperatorCall, env: Environment, context=None) -> str:
    """Evaluate every element (nested calls first, left to right), then apply the operator."""
    values = [
        eval_complex(el, env, context) if isinstance(el, OperatorCall) else eval_template(el, env, context)
        for el in call.elements
    ]
    if not values:
        raise MalformedExpression("empty complex expression")
    op, args = values[0], values[1:]
    if is_builtin(op):
        oenv = env.operator_env(context) if canonical_name(op) in ENV_OPERATORS else None
        return apply_operator(op, args, oenv)
    if env.function_exists(op):
        return env.call_function_value(op, args)
    raise UnknownOperator(f"unknown operator {op!r} (no built-in and no function of that name)")
