"""Turns raw script text into logical lines.

A logical line ends at ``;`` (outside ``[...]`` nesting).  Physical lines
that do not finish a logical line are glued to the next one with a single
space, or with nothing when the fragment ends in an acute (`` ` ``).
"""

from __future__ import annotations

import codecs
import enum
from dataclasses import dataclass, field

from .errors import EncodingError, HashLineSemicolon, MalformedBlock, MinimalCompileError


class Origin(str, enum.Enum):
    SCRIPT_FILE = "script-file"
    SINGLE_COMMAND = "single-command"
    META_GENERATED = "meta-generated"


class LineKind(str, enum.Enum):
    COMMAND = "command-line"
    HASH = "hash-directive"
    BLOCK_OPEN = "block-open-suffix"
    BLOCK_CLOSE = "block-close"


@dataclass(frozen=True)
class SourceSpan:
    file_id: str
    first: int
    last: int

    def __str__(self) -> str:
        if self.first == self.last:
            return f"{self.file_id}:{self.first}"
        return f"{self.file_id}:{self.first}-{self.last}"


@dataclass(frozen=True)
class LogicalLine:
    """One logical line.

    For ``BLOCK_OPEN`` lines ``text`` is the command without the trailing
    ``{``.  For ``BLOCK_CLOSE`` lines ``text`` is the separation keyword
    (empty when there is none) and ``opens_block`` tells whether a second
    block follows.
    """

    text: str
    kind: LineKind
    span: SourceSpan
    opens_block: bool = False


@dataclass
class SourceUnit:
    origin: Origin
    lines: list[LogicalLine] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def decode_source(data: bytes) -> str:
    """Decode script bytes: UTF-8 (BOM optional) or UTF-16 with a BOM."""
    if data.startswith(codecs.BOM_UTF8):
        data = data[len(codecs.BOM_UTF8):]
    elif data.startswith((codecs.BOM_UTF16_LE, codecs.BOM_UTF16_BE)):
        try:
            return data.decode("utf-16")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"invalid UTF-16 script text: {exc}") from None
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(
            f"script text is neither UTF-8 nor BOM-marked UTF-16 ({exc.reason} at byte {exc.start})"
        ) from None


def _is_comment(stripped: str) -> bool:
    return stripped.startswith("//")


def _opens_block(text: str) -> bool:
    return text.endswith("{") and (len(text) == 1 or text[-2].isspace())


def read_source(raw: str, origin: Origin | str = Origin.SCRIPT_FILE, file_id: str = "<string>") -> SourceUnit:
    origin = Origin(origin)
    if raw.startswith("﻿"):
        raw = raw[1:]
    if origin is Origin.SINGLE_COMMAND:
        return _read_single(raw, file_id)
    return _LineScanner(origin, file_id).scan(raw)


def _read_single(raw: str, file_id: str) -> SourceUnit:
    unit = SourceUnit(Origin.SINGLE_COMMAND)
    physical = [ln for ln in raw.splitlines() if not _is_comment(ln.strip())]
    text = ""
    for ln in physical:
        piece = ln.strip()
        if not piece:
            continue
        if text.endswith("`"):
            text = text[:-1] + piece
        elif text:
            text += " " + piece
        else:
            text = piece
    if text.endswith(";"):
        text = text[:-1].rstrip()
    if not text:
        return unit
    span = SourceSpan(file_id, 1, max(1, len(physical)))
    if text.startswith("#"):
        kind = LineKind.HASH
    elif text.startswith("}"):
        kind = LineKind.BLOCK_CLOSE
    elif _opens_block(text):
        kind, text = LineKind.BLOCK_OPEN, text[:-1].rstrip()
    else:
        kind = LineKind.COMMAND
    unit.lines.append(LogicalLine(text, kind, span))
    return unit


class _LineScanner:
    def __init__(self, origin: Origin, file_id: str):
        self.origin = origin
        self.file_id = file_id
        self.unit = SourceUnit(origin)
        self.cur: str | None = None
        self.glue = " "
        self.first = 0
        self.depth = 0

    def _emit(self, text: str, kind: LineKind, last: int, first: int | None = None, opens: bool = False) -> None:
        span = SourceSpan(self.file_id, self.first if first is None else first, last)
        self.unit.lines.append(LogicalLine(text, kind, span, opens))

    def _flush(self, lineno: int, why: str) -> None:
        if self.cur is not None and self.cur.strip():
            self.unit.warnings.append(f"{self.file_id}:{lineno}: missing ';' {why}")
            self._emit(self.cur.strip(), LineKind.COMMAND, lineno)
        self.cur = None

    def scan(self, raw: str) -> SourceUnit:
        lineno = 0
        for lineno, phys in enumerate(raw.splitlines(), 1):
            stripped = phys.strip()
            if _is_comment(stripped):
                continue
            pending = self.cur is not None
            if not pending:
                if not stripped:
                    continue
                if stripped.startswith("#"):
                    self._hash(stripped, lineno)
                    continue
            if stripped.startswith("}") and self.depth == 0:
                self._flush(lineno - 1 if pending else lineno, "before '}'")
                self._close(stripped, lineno)
                continue
            self._content(stripped, lineno)
            if self.origin is Origin.META_GENERATED and self.cur is not None and self.glue:
                # generated code: a line break also ends the command
                self._emit(self.cur.strip(), LineKind.COMMAND, lineno)
                self.cur = None
                self.depth = 0
        if self.cur is not None and self.cur.strip():
            if self.origin is Origin.SCRIPT_FILE:
                self.unit.warnings.append(f"{self.file_id}:{lineno}: missing ';' at end of input")
            self._emit(self.cur.strip(), LineKind.COMMAND, lineno)
        return self.unit

    def _hash(self, stripped: str, lineno: int) -> None:
        if self.origin is Origin.META_GENERATED:
            raise MinimalCompileError(
                f"{self.file_id}:{lineno}: generated code must not contain definitions: {stripped!r}"
            )
        if stripped.endswith(";"):
            raise HashLineSemicolon(f"{self.file_id}:{lineno}: hash line must not end with ';'")
        self._emit(stripped, LineKind.HASH, lineno, first=lineno)

    def _close(self, stripped: str, lineno: int) -> None:
        rest = stripped[1:].strip()
        if rest in ("", ";"):
            self._emit("", LineKind.BLOCK_CLOSE, lineno, first=lineno)
        elif _opens_block(rest) and rest[:-1].strip() and " " not in rest[:-1].strip():
            self._emit(rest[:-1].strip(), LineKind.BLOCK_CLOSE, lineno, first=lineno, opens=True)
        else:
            raise MalformedBlock(f"{self.file_id}:{lineno}: unexpected text after '}}': {rest!r}")

    def _content(self, piece: str, lineno: int) -> None:
        if self.cur is None:
            self.first = lineno
        start = 0
        for i, ch in enumerate(piece):
            if ch == "[":
                self.depth += 1
            elif ch == "]":
                self.depth = max(0, self.depth - 1)
            elif ch == ";" and self.depth == 0:
                self._append(piece[start:i])
                if self.cur is not None and self.cur.strip():
                    self._emit(self.cur.strip(), LineKind.COMMAND, lineno)
                self.cur = None
                self.first = lineno
                start = i + 1
        self._append(piece[start:])
        if self.cur is None:
            return
        if not self.cur.strip():
            self.cur = None
            return
        if self.depth == 0 and _opens_block(self.cur):
            head = self.cur[:-1].strip()
            if not head:
                raise MalformedBlock(f"{self.file_id}:{lineno}: block without a command")
            self._emit(head, LineKind.BLOCK_OPEN, lineno)
            self.cur = None
        elif self.cur.endswith("`"):
            self.cur = self.cur[:-1]
            self.glue = ""
        else:
            self.glue = " "

    def _append(self, fragment: str) -> None:
        if self.cur is None:
            self.cur = fragment.lstrip()
            self.glue = " "
        elif fragment:
            self.cur = self.cur + self.glue + fragment if self.cur else fragment
            self.glue = " "
