"""The virtual machine: scope, contexts, frames and command execution.

Control flow follows one protocol.  Every command yields an
:class:`ExecOutcome`; a failed outcome stops the running sequence and is
handed to the enclosing construct:

* no error text: function return (absorbed by the function frame);
* `` `continue`` / `` `break``: consumed by the innermost loop;
* anything else: an error that propagates until ``catch``.

Error texts starting with a backtick are control codes.  They are never
caught and never shown to the user.
"""

from __future__ import annotations

import copy
import enum
import random
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, Union

from .commands import CommandSpec, ExprMode, Reservoir
from .compiler import FunctionDef, Invocation, Program, compile_script, compile_single
from .errors import (
    ArgsOutsideFunction,
    CompileError,
    DisabledCommand,
    EmptyName,
    EventsDisabled,
    HostEventTrigger,
    MalformedExpression,
    NotAnArray,
    PropagatedError,
    RecursionLimit,
    RedefinedFunction,
    ScriptFileNotFound,
    T2Error,
    UnknownConstant,
    UnknownEvent,
    UnknownEventBinding,
    UnknownFunction,
    UnknownModule,
    UnsetVariable,
)
from .expr import interpolate
from .operators import FALSE, TRUE, format_float
from .reader import Origin, decode_source, read_source

CONTINUE_CODE = "`continue"
BREAK_CODE = "`break"


@dataclass(frozen=True)
class ExecOutcome:
    ok: bool = True
    error: Optional[str] = None
    cause: Optional[T2Error] = field(default=None, compare=False, repr=False)

    @property
    def is_return(self) -> bool:
        return not self.ok and self.error is None

    @property
    def is_special(self) -> bool:
        return self.error is not None and self.error.startswith("`")

    @property
    def is_error(self) -> bool:
        """A real (displayable, catchable) error."""
        return not self.ok and self.error is not None and not self.is_special


OK = ExecOutcome()
RETURN = ExecOutcome(False)
CONTINUE = ExecOutcome(False, CONTINUE_CODE)
BREAK = ExecOutcome(False, BREAK_CODE)


def failure(exc: T2Error) -> ExecOutcome:
    return ExecOutcome(False, str(exc), exc)


def fail(text: str) -> ExecOutcome:
    return ExecOutcome(False, text)


# -- variables ----------------------------------------------------------------

_NUMERIC_KEY = re.compile(r"-?\d+")
_REF_RE = re.compile(r"(@?)([^\[\]]*)(?:\[(.*)\])?", re.DOTALL)


class Array(dict):
    """One-dimensional array; keys are text (numeric or associative)."""

    @classmethod
    def from_list(cls, values: Iterable[str]) -> "Array":
        return cls((str(i), v) for i, v in enumerate(values))

    def ordered_values(self) -> list[str]:
        """Numeric keys ascending, then associative keys in insertion order."""
        numeric = sorted((k for k in self if _NUMERIC_KEY.fullmatch(k)), key=int)
        other = [k for k in self if not _NUMERIC_KEY.fullmatch(k)]
        return [self[k] for k in numeric + other]


Value = Union[str, Array]


def parse_ref(ref: str) -> tuple[bool, str, Optional[str]]:
    """Split ``@name[index]`` style references into (local, name, index)."""
    m = _REF_RE.fullmatch(ref.strip())
    if m is None or not m.group(2):
        raise EmptyName(f"bad variable reference {ref!r}")
    return m.group(1) == "@", m.group(2), m.group(3)


def _display(local: bool, name: str, index: Optional[str] = None) -> str:
    return ("@" if local else "") + name + ("" if index is None else f"[{index}]")


@dataclass
class Frame:
    function_name: str
    locals: dict[str, Value] = field(default_factory=dict)
    result: str = ""
    is_function: bool = True
    event: Any = None
    module: Optional[str] = None


class Scope:
    """Global variables, the frame stack and pending ``put`` accumulations."""

    def __init__(self) -> None:
        self.globals: dict[str, Value] = {}
        self.frames: list[Frame] = []
        self.pending: dict[str, dict[str, str]] = {}

    @property
    def frame(self) -> Optional[Frame]:
        return self.frames[-1] if self.frames else None

    def _table(self, local: bool, create: bool = False) -> Optional[dict[str, Value]]:
        if not local:
            return self.globals
        return self.frames[-1].locals if self.frames else None

    def get(self, local: bool, name: str, index: Optional[str] = None) -> str:
        table = self._table(local)
        value = None if table is None else table.get(name)
        if value is None:
            raise UnsetVariable(f"variable '{_display(local, name)}' is not set")
        if index is None:
            if isinstance(value, Array):
                raise MalformedExpression(f"'{_display(local, name)}' is an array; an index is needed")
            return value
        if not isinstance(value, Array):
            raise NotAnArray(f"'{_display(local, name)}' is not an array")
        if index not in value:
            raise UnsetVariable(f"array element '{_display(local, name, index)}' is not set")
        return value[index]

    def lookup(self, ref: str) -> Optional[Value]:
        local, name, index = parse_ref(ref)
        table = self._table(local)
        value = None if table is None else table.get(name)
        if index is None or value is None:
            return value
        return value.get(index) if isinstance(value, Array) else None

    def exists(self, ref: str) -> bool:
        return self.lookup(ref) is not None

    def set(self, ref: str, value: str) -> None:
        local, name, index = parse_ref(ref)
        table = self._table(local)
        if table is None:
            raise ArgsOutsideFunction(f"no function scope for local '{_display(local, name)}'")
        if index is None:
            table[name] = value
            return
        arr = table.get(name)
        if not isinstance(arr, Array):
            if arr is not None:
                raise NotAnArray(f"'{_display(local, name)}' is not an array")
            arr = table[name] = Array()
        arr[index] = value

    def set_array(self, ref: str, arr: Array) -> None:
        local, name, _ = parse_ref(ref)
        table = self._table(local)
        if table is None:
            raise ArgsOutsideFunction(f"no function scope for local '{_display(local, name)}'")
        table[name] = arr

    def get_array(self, ref: str) -> Array:
        local, name, _ = parse_ref(ref)
        table = self._table(local)
        value = None if table is None else table.get(name)
        if not isinstance(value, Array):
            raise NotAnArray(f"'{_display(local, name)}' is not an array")
        return value

    def delete(self, ref: str) -> None:
        local, name, index = parse_ref(ref)
        table = self._table(local)
        if table is None or name not in table:
            return
        if index is None:
            del table[name]
        elif isinstance(table[name], Array):
            table[name].pop(index, None)


# -- contexts and constants -----------------------------------------------------

ConstantValue = Union[str, Callable[[], str]]


@dataclass
class Context:
    """Background of a command execution: visible constants and commands."""

    id: str
    constants: dict[str, ConstantValue] = field(default_factory=dict)
    command_filter: Optional[Callable[[str], bool]] = None

    def allows(self, command: str) -> bool:
        return self.command_filter is None or bool(self.command_filter(command))


PI_TEXT = format_float(3.141592653589793)

_STATIC_CONSTANTS = {
    "true": TRUE,
    "false": FALSE,
    "empty": "",
    "Pi": PI_TEXT,
    "\\n": "\n",
    "\\r\\n": "\r\n",
    "\\r": "\r",
    "\\t": "\t",
    "\\$": "$",
    "\\s": " ",
    "lparen": "(",
    "rparen": ")",
    "ltabparen": "[",
    "rtabparen": "]",
    "lcurlparen": "{",
    "rcurlparen": "}",
}
_UNICODE_CONST = re.compile(r"\\u\((\d+)\)")


# -- execution ---------------------------------------------------------------


class StepDecision(str, enum.Enum):
    CONTINUE = "continue"
    STOP = "stop"


@dataclass
class DebugEvent:
    """Passed to a debug hook before each command runs."""

    name: str
    params: tuple[str, ...]
    span: Any
    vm: "VM"

    def snapshot(self) -> dict:
        return self.vm.snapshot()


@dataclass
class Call:
    """What a command handler receives."""

    vm: "VM"
    inv: Invocation
    spec: CommandSpec
    params: list[str]
    context: Context

    @property
    def blocks(self) -> tuple:
        return self.inv.blocks

    @property
    def inline(self) -> bool:
        return self.inv.inline

    def has_block(self, i: int) -> bool:
        return len(self.inv.blocks) > i

    def run_block(self, i: int) -> ExecOutcome:
        if not self.has_block(i):
            return OK
        return self.vm.run_sequence(self.inv.blocks[i], self.context)

    def interpolate(self, text: str) -> str:
        return interpolate(text, self.vm, self.context)

    def param(self, i: int, default: Optional[str] = None) -> Optional[str]:
        return self.params[i] if i < len(self.params) else default


@dataclass
class FunctionEntry:
    definition: FunctionDef
    module: str


@dataclass
class ModuleRecord:
    name: str
    path: Optional[str]
    functions: list[str] = field(default_factory=list)
    events: list[str] = field(default_factory=list)


@dataclass
class VMOptions:
    events_enabled: bool = True
    script_root: Path = Path(".")
    max_depth: int = 100
    time_format: str = "%H:%M:%S"
    date_format: str = "%Y-%m-%d"
    seed: Optional[int] = None
    envrs_timeout: float = 30.0
    envrs_allow: Optional[frozenset[str]] = None


class _OperatorBridge:
    def __init__(self, vm: "VM", context: Context):
        self.vm = vm
        self.context = context

    def assign(self, ref: str, value: str) -> None:
        self.vm.scope.set(ref, value)

    def exists(self, ref: str) -> bool:
        return self.vm.scope.exists(ref)

    def run_command(self, text: str) -> str:
        outcome = self.vm.execute_text(text, self.context)
        return outcome.error or ""


class VM:
    """Single-threaded executor.  Hosts normally drive it through :class:`~t2script.embed.Interpreter`."""

    def __init__(self, options: Optional[VMOptions] = None, output: Optional[Callable[[str], None]] = None):
        from .events import EventRegistry, TimerScheduler, WallClock

        self.options = options or VMOptions()
        self.reservoir = Reservoir()
        self.scope = Scope()
        self.functions: dict[str, FunctionEntry] = {}
        self.modules: dict[str, ModuleRecord] = {}
        self.events = EventRegistry()
        self.timers = TimerScheduler(WallClock())
        self.default_context = Context("default")
        self.contexts: dict[str, Context] = {"default": self.default_context}
        self.constants: dict[str, ConstantValue] = {}
        self.output = output or (lambda line: print(line))
        self.error_sink: Callable[[str], None] = lambda msg: None
        self.debug_hook: Optional[Callable[[DebugEvent], Any]] = None
        self.rng = random.Random(self.options.seed)
        self.command_stack: list[tuple[str, str]] = []
        self.lock = threading.RLock()
        self._resume = threading.Event()
        self._resume.set()
        self._timer_seq = 0

    # -- expression environment -------------------------------------------

    def read_variable(self, local: bool, name: str, index: Optional[str]) -> str:
        return self.scope.get(local, name, index)

    def resolve_constant(self, name: str, context: Optional[Context] = None) -> str:
        context = context or self.default_context
        for table in (context.constants, self.constants):
            if name in table:
                value = table[name]
                return value() if callable(value) else value
        if name in _STATIC_CONSTANTS:
            return _STATIC_CONSTANTS[name]
        if name in ("owner_name", "owner_param", "parent_name", "parent_param"):
            if not self.command_stack:
                return ""
            owner = self.command_stack[-1]
            parent = self.command_stack[-2] if len(self.command_stack) > 1 else owner
            which = owner if name.startswith("owner") else parent
            return which[0] if name.endswith("name") else which[1]
        if name == "time":
            return datetime.now().strftime(self.options.time_format)
        if name == "date":
            return datetime.now().strftime(self.options.date_format)
        m = _UNICODE_CONST.fullmatch(name)
        if m:
            try:
                return chr(int(m.group(1)))
            except (ValueError, OverflowError):
                raise UnknownConstant(f"no Unicode character {m.group(1)}") from None
        raise UnknownConstant(f"unknown constant '_{name}'")

    def function_exists(self, name: str) -> bool:
        return name in self.functions or self.events.is_script_event(name)

    def call_function_value(self, name: str, args: list[str]) -> str:
        value, outcome = self.call_function(name, args)
        if not outcome.ok:
            raise PropagatedError(outcome.error or "", outcome.cause)
        return value

    def operator_env(self, context: Optional[Context]) -> _OperatorBridge:
        return _OperatorBridge(self, context or self.default_context)

    # -- command execution ---------------------------------------------------

    def execute_invocation(self, inv: Invocation, context: Optional[Context] = None) -> ExecOutcome:
        context = context or self.default_context
        entry = self.reservoir.by_id(inv.command_id)
        if entry is None or not entry.enabled:
            return failure(DisabledCommand(f"command '{inv.name}' is disabled"))
        spec = entry.spec
        if not context.allows(spec.name) or (spec.available is not None and not spec.available(context)):
            return failure(DisabledCommand(f"command '{inv.name}' is not available in context '{context.id}'"))
        if self.debug_hook is not None:
            self._debug(inv)
        self.command_stack.append((inv.name, inv.param_text))
        try:
            if spec.expr_mode is ExprMode.AUTOMATIC:
                params = [interpolate(p, self, context) for p in inv.params]
            else:
                params = list(inv.params)
            result = spec.handler(Call(self, inv, spec, params, context))
        except PropagatedError as exc:
            return ExecOutcome(False, str(exc), exc.cause)
        except T2Error as exc:
            return failure(exc)
        except RecursionError:
            return failure(RecursionLimit("interpreter recursion limit reached"))
        finally:
            self.command_stack.pop()
        return OK if result is None else result

    def run_sequence(self, body: Sequence[Invocation], context: Optional[Context] = None) -> ExecOutcome:
        for inv in body:
            outcome = self.execute_invocation(inv, context)
            if not outcome.ok:
                return outcome
        return OK

    def _debug(self, inv: Invocation) -> None:
        hook = self.debug_hook
        if hook is None:
            return
        decision = hook(DebugEvent(inv.name, inv.params, inv.span, self))
        if decision in (StepDecision.STOP, "stop"):
            self._resume.clear()
            self._resume.wait()

    def resume(self) -> None:
        """Release a VM parked by a debug hook's stop decision."""
        self._resume.set()

    # -- functions ---------------------------------------------------------------

    def call_function(
        self,
        name: str,
        args: Sequence[str] = (),
        *,
        seed_locals: Optional[dict[str, Value]] = None,
    ) -> tuple[str, ExecOutcome]:
        """Run a function (or script event) in a new frame; return (result, outcome)."""
        event = None
        entry = self.functions.get(name)
        if entry is not None:
            body, module = entry.definition.body, entry.module
        else:
            event = self.events.get(name)
            if event is None:
                raise UnknownFunction(f"unknown function '{name}'")
            if event.host:
                raise HostEventTrigger(f"built-in event '{name}' cannot be triggered from scripts")
            body, module = event.definition.body, event.module
        if len(self.scope.frames) >= self.options.max_depth:
            raise RecursionLimit(f"call depth limit {self.options.max_depth} reached calling '{name}'")
        frame = Frame(name, {"arg": Array.from_list(args)}, event=event, module=module)
        if seed_locals:
            frame.locals.update(copy.deepcopy(seed_locals))
        frame.locals.update(self.scope.pending.pop(name, {}))
        return self.run_frame(frame, body)

    def run_frame(self, frame: Frame, body: Sequence[Invocation]) -> tuple[str, ExecOutcome]:
        self.scope.frames.append(frame)
        try:
            outcome = self.run_sequence(body, self.default_context)
        finally:
            self.scope.frames.pop()
        if outcome.ok or outcome.is_return or outcome.error in (CONTINUE_CODE, BREAK_CODE):
            return frame.result, OK
        return frame.result, outcome

    # -- single commands and generated code ------------------------------------

    def compile_text(self, text: str, origin: Origin = Origin.SINGLE_COMMAND) -> Program:
        return compile_single(read_source(text, origin), self.reservoir)

    def execute_text(self, text: str, context: Optional[Context] = None, origin: Origin = Origin.SINGLE_COMMAND) -> ExecOutcome:
        """Compile and run text in the current scope; compile errors become failed outcomes."""
        try:
            program = self.compile_text(text, origin)
        except CompileError as exc:
            return failure(exc)
        return self.run_sequence(program.instructions, context)

    def run_top(self, body: Sequence[Invocation], context: Optional[Context] = None, args: Sequence[str] = ()) -> ExecOutcome:
        """Run code at top level inside a throw-away frame.

        A bare return ends the run quietly; control codes that escape are
        dropped; real errors are returned.
        """
        frame = Frame("", {"arg": Array.from_list(args)}, is_function=False)
        with self.lock:
            self.scope.frames.append(frame)
            try:
                outcome = self.run_sequence(body, context)
            finally:
                self.scope.frames.pop()
        return self.top_outcome(outcome)

    @staticmethod
    def top_outcome(outcome: ExecOutcome) -> ExecOutcome:
        if outcome.ok or outcome.is_return or outcome.is_special:
            return OK
        return outcome

    def execute_single(self, text: str, context: Optional[Context] = None) -> ExecOutcome:
        try:
            program = self.compile_text(text)
        except CompileError as exc:
            return failure(exc)
        return self.run_top(program.instructions, context)

    # -- modules ---------------------------------------------------------------

    def resolve_path(self, path: str) -> Path:
        p = Path(path)
        if not p.is_absolute():
            p = self.options.script_root / p
        return p

    def read_script(self, path: str) -> str:
        p = self.resolve_path(path)
        try:
            return decode_source(p.read_bytes())
        except FileNotFoundError:
            raise ScriptFileNotFound(f"script file not found: {p}") from None
        except IsADirectoryError:
            raise ScriptFileNotFound(f"not a script file: {p}") from None

    def load_source(self, text: str, module: str, path: Optional[str] = None) -> Program:
        program = compile_script(read_source(text, Origin.SCRIPT_FILE, path or module), self.reservoir, module)
        self.link(program, path)
        return program

    def load_file(self, path: str, module: Optional[str] = None) -> Program:
        text = self.read_script(path)
        return self.load_source(text, module or Path(path).stem, str(path))

    def link(self, program: Program, path: Optional[str] = None) -> None:
        """Register a compiled module's functions and events; bind public functions."""
        with self.lock:
            module = program.module_name
            if module in self.modules:
                raise RedefinedFunction(f"module '{module}' is already loaded")
            if not self.options.events_enabled and (
                program.events or any(f.ftype == "public" for f in program.functions.values())
            ):
                raise EventsDisabled(f"events are disabled; module '{module}' defines or binds events")
            for name in list(program.functions) + list(program.events):
                if name in self.functions or name in self.events:
                    raise RedefinedFunction(f"'{name}' is already defined by another module")
            for fdef in program.functions.values():
                if fdef.event_binding and fdef.event_binding not in program.events and fdef.event_binding not in self.events:
                    raise UnknownEventBinding(
                        f"function '{fdef.name}' binds unknown event '{fdef.event_binding}'"
                    )
            record = ModuleRecord(module, path)
            for edef in program.events.values():
                self.events.define(edef, module)
                record.events.append(edef.name)
            for fdef in program.functions.values():
                self.functions[fdef.name] = FunctionEntry(fdef, module)
                record.functions.append(fdef.name)
                if fdef.event_binding:
                    self.events.register(fdef.event_binding, fdef.name)
            self.modules[module] = record

    def unload_module(self, module: str) -> None:
        with self.lock:
            record = self.modules.pop(module, None)
            if record is None:
                raise UnknownModule(f"no module named '{module}'")
            for name in record.functions:
                self.remove_function(name)
            for name in record.events:
                self.events.remove(name)
            self.timers.cancel_module(module)

    def remove_function(self, name: str) -> None:
        entry = self.functions.pop(name, None)
        if entry is None:
            raise UnknownFunction(f"unknown function '{name}'")
        self.events.unregister_function(name)
        record = self.modules.get(entry.module)
        if record is not None and name in record.functions:
            record.functions.remove(name)

    # -- events ----------------------------------------------------------------

    def define_host_event(self, name: str, etype: str = "multi") -> None:
        self.events.define_host(name, etype)

    def trigger_event(self, name: str, args: Sequence[str] = (), results: Optional[list[str]] = None) -> ExecOutcome:
        """Host-side trigger: call the registered functions with ``@arg`` set."""
        event = self.events.get(name)
        if event is None:
            raise UnknownEvent(f"no event named '{name}'")
        with self.lock:
            locals_ = {"arg": Array.from_list(args)}
            values, outcome = self.events.dispatch(self, event, locals_)
            if results is not None:
                results.extend(values)
        return self.top_outcome(outcome)

    # -- timers ----------------------------------------------------------------

    def next_timer_name(self) -> str:
        self._timer_seq += 1
        return f"timer#{self._timer_seq}"

    def fire_due_timers(self, now: Optional[float] = None) -> int:
        """Fire every timer due at ``now``; returns how many firings ran."""
        fired = 0
        with self.lock:
            now = self.timers.clock.now() if now is None else now
            for timer in self.timers.due(now):
                fired += 1
                frame = Frame(f"timer {timer.name}", copy.deepcopy(timer.captured_locals), module=timer.module)
                _, outcome = self.run_frame(frame, timer.body)
                outcome = self.top_outcome(outcome)
                if not outcome.ok:
                    self.error_sink(f"timer {timer.name}: {outcome.error}")
                self.timers.after_firing(timer, now)
        return fired

    def advance(self, ms: float) -> int:
        """Move a virtual clock forward, firing timers at their exact due times."""
        clock = self.timers.clock
        target = clock.now() + ms
        fired = 0
        while True:
            due = self.timers.next_due()
            if due is None or due > target:
                break
            clock.set(max(due, clock.now()))
            fired += self.fire_due_timers(clock.now())
        clock.set(target)
        return fired

    # -- inspection ------------------------------------------------------------

    def snapshot(self) -> dict:
        """Watch-list view: functions, globals, timers and current locals."""
        frame = self.scope.frame
        return {
            "functions": sorted(self.functions),
            "events": sorted(self.events.names()),
            "globals": copy.deepcopy(self.scope.globals),
            "timers": self.timers.listing(),
            "locals": copy.deepcopy(frame.locals) if frame is not None else {},
            "frame": frame.function_name if frame is not None else None,
        }

    def write(self, text: str) -> None:
        self.output(text)
