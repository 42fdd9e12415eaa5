"""Command specifications and the Commands Reservoir."""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .errors import DuplicateCommand, InvalidName

_FORBIDDEN_NAME_CHARS = frozenset(" #;`|/")


def validate_command_name(name: str) -> bool:
    """True iff ``name`` is usable as a command name."""
    return bool(name) and not any(ch in _FORBIDDEN_NAME_CHARS or ch.isspace() for ch in name)


def fold(name: str) -> str:
    return name.lower()


class ExprMode(str, enum.Enum):
    AUTOMATIC = "automatic"
    ON_DEMAND = "on-demand"


@dataclass
class CommandSpec:
    """One reservoir entry.

    ``max_params=None`` means no upper limit.  With ``tail=True`` the last
    parameter swallows the rest of the line, spaces included.  Block
    commands declare ``blocks`` (1 or 2); a two-block command names the
    separation ``keyword`` and whether the second block may be omitted.
    ``inline_params`` is the parameter count of the block-less form, whose
    last parameter is a command to run instead of a block.
    """

    name: str
    handler: Callable[[Any], Any]
    min_params: int = 0
    max_params: Optional[int] = 0
    tail: bool = True
    blocks: int = 0
    keyword: Optional[str] = None
    second_optional: bool = True
    inline_params: Optional[int] = None
    expr_mode: ExprMode = ExprMode.AUTOMATIC
    available: Optional[Callable[[Any], bool]] = None
    doc: str = ""

    def __post_init__(self) -> None:
        if not validate_command_name(self.name):
            raise InvalidName(f"invalid command name {self.name!r}")
        self.name = fold(self.name)
        if self.keyword is not None:
            self.keyword = fold(self.keyword)


@dataclass
class ReservoirEntry:
    id: int
    spec: CommandSpec
    enabled: bool = True


@dataclass
class Reservoir:
    """Run-time mutable set of commands, keyed by folded name.

    Every ``add`` hands out a fresh id.  Compiled code holds ids, so a
    command that is removed (or removed and re-added) is seen as gone by
    code compiled earlier.
    """

    _by_name: dict[str, ReservoirEntry] = field(default_factory=dict)
    _by_id: dict[int, ReservoirEntry] = field(default_factory=dict)
    _next_id: int = 1
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def add(self, spec: CommandSpec) -> int:
        with self._lock:
            old = self._by_name.get(spec.name)
            if old is not None:
                if old.enabled:
                    raise DuplicateCommand(f"command {spec.name!r} already exists")
                del self._by_id[old.id]
            entry = ReservoirEntry(self._next_id, spec)
            self._next_id += 1
            self._by_name[spec.name] = entry
            self._by_id[entry.id] = entry
            return entry.id

    def disable(self, name: str) -> None:
        with self._lock:
            entry = self._by_name.get(fold(name))
            if entry is not None:
                entry.enabled = False

    def enable(self, name: str) -> None:
        with self._lock:
            entry = self._by_name.get(fold(name))
            if entry is not None:
                entry.enabled = True

    def remove(self, name: str) -> None:
        with self._lock:
            entry = self._by_name.pop(fold(name), None)
            if entry is not None:
                del self._by_id[entry.id]

    def resolve(self, name: str) -> Optional[ReservoirEntry]:
        return self._by_name.get(fold(name))

    def by_id(self, command_id: int) -> Optional[ReservoirEntry]:
        return self._by_id.get(command_id)

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._by_name)

    def is_enabled(self, name: str) -> bool:
        entry = self.resolve(name)
        return entry is not None and entry.enabled
