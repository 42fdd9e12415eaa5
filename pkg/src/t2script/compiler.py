"""Compiles logical lines into the directly interpretable representation.

Command names are resolved to reservoir ids here; parameters are kept as
raw text and interpolated by the VM at execution time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .commands import CommandSpec, Reservoir, fold, validate_command_name
from .errors import (
    ArityMismatch,
    BlockInSingleCommand,
    EndNameMismatch,
    InvalidName,
    MalformedBlock,
    MalformedDirective,
    MinimalCompileError,
    MissingRequiredBlock,
    RedefinedFunction,
    TooFewParams,
    UnexpectedBlock,
    UnexpectedSeparationKeyword,
    UnknownCommand,
    UnterminatedBlock,
)
from .reader import LineKind, LogicalLine, Origin, SourceSpan, SourceUnit, read_source

FUNCTION_TYPES = ("private", "public", "operator")
EVENT_TYPES = ("single", "multi")

_FUNCTION_RE = re.compile(r"#function\s+(\S+)\s+(\w+)\(\)(?:\s*<<\s*(\S+))?\s*", re.IGNORECASE)
_EVENT_RE = re.compile(r"#event\s+(\S+)\s+(\w+)\(\)\s*", re.IGNORECASE)
_END_RE = re.compile(r"#end\s+(\S+)\s*", re.IGNORECASE)
_HEAD_RE = re.compile(r"(\S+)\s*(.*)", re.DOTALL)


@dataclass(frozen=True)
class Invocation:
    command_id: int
    name: str
    params: tuple[str, ...]
    blocks: tuple[tuple["Invocation", ...], ...] = ()
    keyword: Optional[str] = None
    inline: bool = False
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def param_text(self) -> str:
        return " ".join(self.params)


@dataclass
class FunctionDef:
    name: str
    ftype: str
    event_binding: Optional[str]
    body: tuple[Invocation, ...]
    span: Optional[SourceSpan] = None


@dataclass
class EventDef:
    name: str
    etype: str
    body: tuple[Invocation, ...]
    declared_arg_names: tuple[str, ...] = ()
    span: Optional[SourceSpan] = None


@dataclass
class Program:
    instructions: list[Invocation] = field(default_factory=list)
    functions: dict[str, FunctionDef] = field(default_factory=dict)
    events: dict[str, EventDef] = field(default_factory=dict)
    module_name: str = "main"
    warnings: list[str] = field(default_factory=list)


def split_words(text: str, maxsplit: int = -1) -> list[str]:
    """Split on runs of whitespace that are not inside ``[...]``."""
    if maxsplit == 0:
        rest = text.strip()
        return [rest] if rest else []
    words: list[str] = []
    depth = 0
    start: Optional[int] = None
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace() and depth == 0:
            if start is not None:
                words.append(text[start:i])
                start = None
                if len(words) == maxsplit:
                    rest = text[i:].lstrip()
                    if rest:
                        words.append(rest)
                    return words
        else:
            if start is None:
                start = i
            if ch == "[":
                depth += 1
            elif ch == "]":
                depth = max(0, depth - 1)
        i += 1
    if start is not None:
        words.append(text[start:])
    return words


def split_params(line: str, spec: CommandSpec, count: Optional[int] = None) -> list[str]:
    """Split the text following a command name into its parameters.

    ``count`` overrides the spec's maximum (used for inline forms).
    """
    limit = spec.max_params if count is None else count
    minimum = spec.min_params if count is None else count
    if limit is not None and limit == 0:
        params = []
        if line.strip():
            raise ArityMismatch(f"{spec.name} takes no parameters")
    elif spec.tail and limit is not None:
        params = split_words(line, limit - 1)
    else:
        params = split_words(line)
        if limit is not None and len(params) > limit:
            raise ArityMismatch(f"{spec.name} takes at most {limit} parameters, got {len(params)}")
    if len(params) < minimum:
        raise TooFewParams(f"{spec.name} needs at least {minimum} parameters, got {len(params)}")
    return params


def _where(span: Optional[SourceSpan]) -> str:
    return f"{span}: " if span is not None else ""


class _Parser:
    def __init__(self, unit: SourceUnit, reservoir: Reservoir):
        self.lines = unit.lines
        self.reservoir = reservoir
        self.pos = 0

    def command(self, line: LogicalLine, allow_blocks: bool = True) -> Invocation:
        text = line.text
        m = _HEAD_RE.match(text)
        head, rest = (m.group(1), m.group(2)) if m else ("", "")
        if not validate_command_name(head):
            raise InvalidName(f"{_where(line.span)}invalid command name {head!r}")
        entry = self.reservoir.resolve(head)
        if entry is None:
            raise UnknownCommand(f"{_where(line.span)}unknown command {head!r}")
        spec = entry.spec
        name = fold(head)
        try:
            if line.kind is LineKind.BLOCK_OPEN:
                if not allow_blocks:
                    raise BlockInSingleCommand("block-commands are only allowed in script files")
                if spec.blocks == 0:
                    raise UnexpectedBlock(f"{name} does not take a block")
                params = split_params(rest, spec)
            elif spec.blocks and spec.inline_params:
                params = split_params(rest, spec, spec.inline_params)
                body_line = LogicalLine(params[-1], LineKind.COMMAND, line.span)
                body = self.command(body_line, allow_blocks=False)
                return Invocation(entry.id, name, tuple(params[:-1]), ((body,),), None, True, line.span)
            elif spec.blocks:
                raise MissingRequiredBlock(f"{name} requires a block")
            else:
                params = split_params(rest, spec)
        except (ArityMismatch, MissingRequiredBlock, UnexpectedBlock, BlockInSingleCommand) as exc:
            if line.span is not None and not str(exc).startswith(str(line.span)):
                raise type(exc)(f"{_where(line.span)}{exc}") from None
            raise
        if line.kind is LineKind.BLOCK_OPEN:
            return self._blocks(entry.id, name, spec, tuple(params), line.span)
        return Invocation(entry.id, name, tuple(params), (), None, False, line.span)

    def _blocks(self, cid: int, name: str, spec: CommandSpec, params: tuple[str, ...], span) -> Invocation:
        first, close = self.sequence(until_close=True)
        blocks = [tuple(first)]
        keyword = None
        if close.opens_block:
            if spec.blocks < 2 or fold(close.text) != spec.keyword:
                raise UnexpectedSeparationKeyword(
                    f"{_where(close.span)}unexpected separation keyword {close.text!r} after {name} block"
                )
            keyword = spec.keyword
            second, close2 = self.sequence(until_close=True)
            if close2.opens_block:
                raise UnexpectedSeparationKeyword(f"{_where(close2.span)}{name} takes at most two blocks")
            blocks.append(tuple(second))
        elif spec.blocks == 2 and not spec.second_optional:
            raise MissingRequiredBlock(f"{_where(close.span)}{name} requires a '{spec.keyword}' block")
        return Invocation(cid, name, params, tuple(blocks), keyword, False, span)

    def sequence(self, until_close: bool) -> tuple[list[Invocation], Optional[LogicalLine]]:
        out: list[Invocation] = []
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            if line.kind is LineKind.HASH:
                if until_close:
                    raise UnterminatedBlock(f"{_where(line.span)}block not closed before {line.text!r}")
                return out, line
            self.pos += 1
            if line.kind is LineKind.BLOCK_CLOSE:
                if not until_close:
                    raise MalformedBlock(f"{_where(line.span)}unmatched '}}'")
                return out, line
            out.append(self.command(line))
        if until_close:
            raise UnterminatedBlock("unexpected end of input inside a block")
        return out, None


def _directive_header(line: LogicalLine) -> tuple[str, str, str, Optional[str]]:
    text = line.text
    if m := _FUNCTION_RE.fullmatch(text):
        name, ftype, event = m.group(1), m.group(2).lower(), m.group(3)
        if ftype not in FUNCTION_TYPES:
            raise MalformedDirective(f"{_where(line.span)}unknown function type {m.group(2)}()")
        if (ftype == "public") != (event is not None):
            raise MalformedDirective(f"{_where(line.span)}only public() functions bind an event (with '<< event')")
        return "function", name, ftype, event
    if m := _EVENT_RE.fullmatch(text):
        etype = m.group(2).lower()
        if etype not in EVENT_TYPES:
            raise MalformedDirective(f"{_where(line.span)}unknown event type {m.group(2)}()")
        return "event", m.group(1), etype, None
    raise MalformedDirective(f"{_where(line.span)}malformed directive {text!r}")


def compile_script(unit: SourceUnit, reservoir: Reservoir, module_name: str = "main") -> Program:
    if unit.origin is not Origin.SCRIPT_FILE:
        raise ValueError("compile_script expects script-file source")
    program = Program(module_name=module_name, warnings=list(unit.warnings))
    parser = _Parser(unit, reservoir)
    while True:
        body, stop = parser.sequence(until_close=False)
        program.instructions.extend(body)
        if stop is None:
            break
        parser.pos += 1
        if _END_RE.fullmatch(stop.text):
            raise MalformedDirective(f"{_where(stop.span)}'#end' without an open definition")
        kind, name, dtype, event = _directive_header(stop)
        if name in program.functions or name in program.events:
            raise RedefinedFunction(f"{_where(stop.span)}{name!r} is already defined in this script")
        defbody, end = parser.sequence(until_close=False)
        if end is None:
            raise UnterminatedBlock(f"{_where(stop.span)}missing '#end {name}'")
        parser.pos += 1
        m = _END_RE.fullmatch(end.text)
        if m is None:
            raise MalformedDirective(f"{_where(end.span)}nested definition inside {name!r}")
        if m.group(1) != name:
            raise EndNameMismatch(f"{_where(end.span)}'#end {m.group(1)}' closes {name!r}")
        span = SourceSpan(stop.span.file_id, stop.span.first, end.span.last)
        if kind == "function":
            program.functions[name] = FunctionDef(name, dtype, event, tuple(defbody), span)
        else:
            arg_names: tuple[str, ...] = ()
            for inv in defbody:
                if inv.name == "args":
                    arg_names = inv.params
                    break
            program.events[name] = EventDef(name, dtype, tuple(defbody), arg_names, span)
    return program


def compile_single(unit: SourceUnit, reservoir: Reservoir) -> Program:
    if unit.origin is Origin.SCRIPT_FILE:
        raise ValueError("compile_single expects single-command or generated source")
    program = Program(module_name="<single>")
    parser = _Parser(unit, reservoir)
    for line in unit.lines:
        if line.kind is LineKind.HASH:
            if unit.origin is Origin.META_GENERATED:
                raise MinimalCompileError(f"generated code must not contain definitions: {line.text!r}")
            raise BlockInSingleCommand("function and event definitions are only allowed in script files")
        if line.kind is LineKind.BLOCK_CLOSE:
            raise BlockInSingleCommand("block-commands are only allowed in script files")
        program.instructions.append(parser.command(line, allow_blocks=False))
    return program


def compile_text(text: str, reservoir: Reservoir, origin: Origin = Origin.SINGLE_COMMAND) -> Program:
    """Read and compile a single command (or generated code) in one go."""
    return compile_single(read_source(text, origin), reservoir)


def render(inv: Invocation, indent: str = "") -> str:
    """Canonical source text for an invocation (inverse of compilation)."""
    head = " ".join((inv.name,) + inv.params)
    if inv.inline:
        return f"{indent}{head} {render(inv.blocks[0][0])}".rstrip()
    if not inv.blocks:
        return f"{indent}{head};"
    inner = indent + "\t"
    parts = [f"{indent}{head} {{"]
    parts += [render(sub, inner) for sub in inv.blocks[0]]
    if len(inv.blocks) > 1:
        parts.append(f"{indent}}} {inv.keyword} {{")
        parts += [render(sub, inner) for sub in inv.blocks[1]]
    parts.append(f"{indent}}}")
    return "\n".join(parts)
