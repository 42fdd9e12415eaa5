"""Event registry, dispatch, and the timer scheduler."""

from __future__ import annotations

import copy
import itertools
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Protocol, Sequence

from .compiler import EventDef, Invocation
from .errors import DuplicateEvent, DuplicateTimerName, NonNumericArgument, UnknownTimer

if TYPE_CHECKING:
    from .vm import VM, ExecOutcome


@dataclass
class EventEntry:
    name: str
    etype: str
    definition: Optional[EventDef] = None
    module: Optional[str] = None
    registrants: list[str] = field(default_factory=list)

    @property
    def host(self) -> bool:
        return self.definition is None


class EventRegistry:
    def __init__(self) -> None:
        self._events: dict[str, EventEntry] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._events

    def get(self, name: str) -> Optional[EventEntry]:
        return self._events.get(name)

    def names(self) -> list[str]:
        return list(self._events)

    def is_script_event(self, name: str) -> bool:
        entry = self._events.get(name)
        return entry is not None and not entry.host

    def define(self, definition: EventDef, module: Optional[str] = None) -> EventEntry:
        if definition.name in self._events:
            raise DuplicateEvent(f"event '{definition.name}' is already defined")
        entry = EventEntry(definition.name, definition.etype, definition, module)
        self._events[definition.name] = entry
        return entry

    def define_host(self, name: str, etype: str = "multi") -> EventEntry:
        if name in self._events:
            raise DuplicateEvent(f"event '{name}' is already defined")
        entry = EventEntry(name, etype)
        self._events[name] = entry
        return entry

    def remove(self, name: str) -> None:
        self._events.pop(name, None)

    def register(self, event: str, function: str) -> None:
        self._events[event].registrants.append(function)

    def unregister_function(self, function: str) -> None:
        for entry in self._events.values():
            if function in entry.registrants:
                entry.registrants.remove(function)

    def dispatch(self, vm: "VM", entry: EventEntry, event_locals: dict) -> tuple[list[str], "ExecOutcome"]:
        """Call the registered functions with copies of ``event_locals``.

        ``single`` events call one registrant picked by the VM's RNG;
        ``multi`` events call all of them in registration order.  Stops at
        the first failing registrant.
        """
        from .vm import OK

        chosen = list(entry.registrants)
        if entry.etype == "single" and chosen:
            chosen = [vm.rng.choice(chosen)]
        results: list[str] = []
        for function in chosen:
            value, outcome = vm.call_function(function, (), seed_locals=event_locals)
            if not outcome.ok:
                return results, outcome
            results.append(value)
        return results, OK


# -- timers -------------------------------------------------------------------


class Clock(Protocol):
    def now(self) -> float: ...

    def set(self, ms: float) -> None: ...


class WallClock:
    """Milliseconds from a monotonic source; ``set`` is a no-op."""

    def now(self) -> float:
        return time.monotonic() * 1000.0

    def set(self, ms: float) -> None:
        pass


class VirtualClock:
    """Clock that moves only when told to."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def set(self, ms: float) -> None:
        self._now = float(ms)

    def advance(self, ms: float) -> None:
        self._now += ms


@dataclass
class Timer:
    name: str
    interval: float
    remaining: int
    body: Sequence[Invocation]
    captured_locals: dict
    next_due: float
    module: Optional[str] = None
    seq: int = 0


class TimerScheduler:
    def __init__(self, clock: Clock):
        self.clock = clock
        self._timers: dict[str, Timer] = {}
        self._seq = itertools.count()

    def __len__(self) -> int:
        return len(self._timers)

    def __contains__(self, name: str) -> bool:
        return name in self._timers

    def add(
        self,
        name: str,
        interval: float,
        iterations: int,
        body: Sequence[Invocation],
        captured_locals: dict,
        module: Optional[str] = None,
    ) -> Optional[Timer]:
        if name in self._timers:
            raise DuplicateTimerName(f"timer '{name}' already exists")
        if iterations <= 0:
            return None
        timer = Timer(
            name,
            interval,
            iterations,
            tuple(body),
            copy.deepcopy(captured_locals),
            self.clock.now() + interval,
            module,
            next(self._seq),
        )
        self._timers[name] = timer
        return timer

    def cancel(self, name: str) -> None:
        if self._timers.pop(name, None) is None:
            raise UnknownTimer(f"no timer named '{name}'")

    def cancel_module(self, module: str) -> None:
        for name in [n for n, t in self._timers.items() if t.module == module]:
            del self._timers[name]

    def listing(self) -> list[tuple[str, float, int]]:
        return [(t.name, t.interval, t.remaining) for t in sorted(self._timers.values(), key=lambda t: t.seq)]

    def next_due(self) -> Optional[float]:
        return min((t.next_due for t in self._timers.values()), default=None)

    def due(self, now: float) -> list[Timer]:
        ready = [t for t in self._timers.values() if t.next_due <= now]
        return sorted(ready, key=lambda t: (t.next_due, t.seq))

    def after_firing(self, timer: Timer, now: float) -> None:
        timer.remaining -= 1
        if timer.remaining <= 0:
            if self._timers.get(timer.name) is timer:
                del self._timers[timer.name]
            return
        timer.next_due += timer.interval
        if timer.next_due <= now:
            # fixed rate; slots missed while the VM was busy are skipped
            missed = int((now - timer.next_due) // timer.interval) + 1
            timer.next_due += missed * timer.interval


# -- timer commands ---------------------------------------------------------------


def _count(text: str, what: str, minimum: int) -> int:
    from .operators import is_int

    if not is_int(text) or int(text) < minimum:
        raise NonNumericArgument(f"settimer: {what} must be an integer >= {minimum}, got {text!r}")
    return int(text)


def cmd_settimer(call) -> None:
    """``settimer NAME INTERVAL_MS ITERATIONS { body }``; NAME ``auto`` picks a fresh name."""
    name, interval, iterations = call.params
    vm = call.vm
    period = _count(interval, "interval", 1)
    count = _count(iterations, "iterations", 0)
    if name == "auto":
        name = vm.next_timer_name()
    frame = vm.scope.frame
    vm.timers.add(
        name,
        period,
        count,
        call.blocks[0],
        frame.locals if frame is not None else {},
        frame.module if frame is not None else None,
    )


def cmd_killtimer(call) -> None:
    call.vm.timers.cancel(call.params[0])
