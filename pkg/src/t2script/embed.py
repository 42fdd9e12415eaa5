"""Host-facing API.

A host builds an :class:`Interpreter` (usually via :func:`configure`), adds
its own commands, constants and contexts, and then feeds it single
commands, script modules and event triggers.  Everything runs on one
logical VM thread; :meth:`Interpreter.submit` may be called from any
thread.
"""

from __future__ import annotations

import queue
import shlex
import subprocess
import threading
import time
from concurrent.futures import Future
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from .builtins import builtin_specs
from .commands import CommandSpec, fold
from .compiler import Program, compile_single
from .errors import NonZeroExit, SpawnFailure, T2Error
from .events import Clock, VirtualClock, WallClock
from .reader import Origin, read_source
from .vm import OK, VM, Call, ConstantValue, Context, DebugEvent, ExecOutcome, StepDecision, VMOptions, failure

DebugHook = Callable[[DebugEvent], Optional[Union[StepDecision, str]]]


@dataclass
class Result:
    """Outcome of one top-level execution plus the lines it wrote."""

    outcome: ExecOutcome
    output: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.outcome.ok

    @property
    def error(self) -> Optional[str]:
        return self.outcome.error

    @property
    def text(self) -> str:
        return "\n".join(self.output)


def run_generated(vm: VM, text: str) -> ExecOutcome:
    """Minimal compilation: plain commands only, run with the default context."""
    program = compile_single(read_source(text, Origin.META_GENERATED), vm.reservoir)
    return vm.run_sequence(program.instructions, vm.default_context)


def cmd_envrs(call: Call) -> ExecOutcome:
    """``envrs INTERPRETER ARGUMENTS INPUT``: run another interpreter, execute what it prints."""
    program, arguments, stdin_text = (call.params + ["", ""])[:3]
    opts = call.vm.options
    if opts.envrs_allow is not None and program not in opts.envrs_allow:
        raise SpawnFailure(f"envrs: interpreter {program!r} is not on the allow-list")
    try:
        argv = [program] + shlex.split(arguments)
    except ValueError as exc:
        raise SpawnFailure(f"envrs: cannot parse arguments {arguments!r}: {exc}") from None
    try:
        proc = subprocess.run(
            argv,
            input=stdin_text,
            capture_output=True,
            text=True,
            timeout=opts.envrs_timeout,
        )
    except subprocess.TimeoutExpired:
        raise SpawnFailure(f"envrs: {program} timed out after {opts.envrs_timeout}s") from None
    except OSError as exc:
        raise SpawnFailure(f"envrs: cannot run {program}: {exc.strerror or exc}") from None
    if proc.returncode != 0:
        detail = proc.stderr.strip().splitlines()
        suffix = f": {detail[-1]}" if detail else ""
        raise NonZeroExit(f"envrs: {program} exited with status {proc.returncode}{suffix}")
    return run_generated(call.vm, proc.stdout)


def default_specs() -> list[CommandSpec]:
    return builtin_specs() + [CommandSpec("envrs", cmd_envrs, 3, 3)]


class Interpreter:
    def __init__(
        self,
        *,
        commands: Iterable[CommandSpec] = (),
        constants: Optional[dict[str, ConstantValue]] = None,
        contexts: Iterable[Context] = (),
        events_enabled: bool = True,
        script_root: Union[str, Path] = ".",
        disabled: Iterable[str] = (),
        host_events: Iterable[str] = (),
        clock: Optional[Clock] = None,
        seed: Optional[int] = None,
        output: Optional[Callable[[str], None]] = None,
        error_sink: Optional[Callable[[str], None]] = None,
        envrs_timeout: float = 30.0,
        envrs_allow: Optional[Iterable[str]] = None,
        time_format: str = "%H:%M:%S",
        date_format: str = "%Y-%m-%d",
        max_depth: int = 100,
    ):
        options = VMOptions(
            events_enabled=events_enabled,
            script_root=Path(script_root),
            max_depth=max_depth,
            time_format=time_format,
            date_format=date_format,
            seed=seed,
            envrs_timeout=envrs_timeout,
            envrs_allow=None if envrs_allow is None else frozenset(envrs_allow),
        )
        self.vm = VM(options, output=self._emit)
        self.vm.timers.clock = clock or WallClock()
        self._host_output = output
        self._capture: Optional[list[str]] = None
        self.errors: list[str] = []
        self.vm.error_sink = self._on_error
        self._host_error_sink = error_sink
        for spec in default_specs():
            self.vm.reservoir.add(spec)
        for spec in commands:
            self.vm.reservoir.add(spec)
        for name in disabled:
            self.vm.reservoir.disable(name)
        for name, value in (constants or {}).items():
            self.register_constant(name, value)
        for ctx in contexts:
            self.register_context(ctx)
        for name in host_events:
            self.vm.define_host_event(name)
        self._jobs: "queue.Queue[Optional[tuple[Callable[[], object], Future]]]" = queue.Queue()
        self._worker: Optional[threading.Thread] = None
        self._stopping = threading.Event()

    # -- output -----------------------------------------------------------

    def _emit(self, line: str) -> None:
        if self._capture is not None:
            self._capture.append(line)
        if self._host_output is not None:
            self._host_output(line)

    def _on_error(self, message: str) -> None:
        self.errors.append(message)
        if self._host_error_sink is not None:
            self._host_error_sink(message)

    def _captured(self, fn: Callable[[], ExecOutcome]) -> Result:
        with self.vm.lock:
            outer = self._capture
            self._capture = lines = []
            try:
                outcome = fn()
            except T2Error as exc:
                outcome = failure(exc)
            finally:
                self._capture = outer
                if outer is not None:
                    outer.extend(lines)
        return Result(outcome, lines)

    # -- configuration -----------------------------------------------------------

    @property
    def reservoir(self):
        return self.vm.reservoir

    def add_command(self, spec: CommandSpec) -> None:
        self.vm.reservoir.add(spec)

    def disable_command(self, name: str) -> None:
        self.vm.reservoir.disable(name)

    def enable_command(self, name: str) -> None:
        self.vm.reservoir.enable(name)

    def remove_command(self, name: str) -> None:
        self.vm.reservoir.remove(name)

    def register_constant(self, name: str, value: ConstantValue) -> None:
        self.vm.constants[name[1:] if name.startswith("_") else name] = value

    def register_context(self, context: Context) -> None:
        self.vm.contexts[context.id] = context

    def context(self, context_id: Optional[str]) -> Context:
        if context_id is None:
            return self.vm.default_context
        return self.vm.contexts[context_id]

    def define_event(self, name: str, etype: str = "multi") -> None:
        """Declare a built-in (host) event; scripts may bind to it but not trigger it."""
        self.vm.define_host_event(name, etype)

    # -- execution ---------------------------------------------------------------

    def _resolve_context(self, context: Union[Context, str, None]) -> Context:
        if isinstance(context, Context):
            return context
        return self.context(context)

    def execute(self, text: str, context: Union[Context, str, None] = None) -> Result:
        """Compile and run one single command now, on the calling thread."""
        ctx = self._resolve_context(context)
        return self._captured(lambda: self.vm.execute_single(text, ctx))

    def submit(self, text: str, context: Union[Context, str, None] = None) -> "Future[Result]":
        """Queue a single command; the future resolves to its :class:`Result`."""
        return self._enqueue(lambda: self.execute(text, context))

    def trigger(self, event: str, args: Sequence[str] = ()) -> Result:
        return self._captured(lambda: self.vm.trigger_event(event, args))

    def call(self, function: str, args: Sequence[str] = ()) -> tuple[str, Result]:
        box: list[str] = []

        def run() -> ExecOutcome:
            value, outcome = self.vm.call_function(function, args)
            box.append(value)
            return self.vm.top_outcome(outcome)

        result = self._captured(run)
        return (box[0] if box else ""), result

    def run_generated(self, text: str) -> Result:
        return self._captured(lambda: self.vm.top_outcome(run_generated(self.vm, text)))

    # -- modules -------------------------------------------------------------------

    def load_module(self, path: Union[str, Path], name: Optional[str] = None) -> Program:
        with self.vm.lock:
            return self.vm.load_file(str(path), name)

    def load_source(self, text: str, name: str = "main") -> Program:
        with self.vm.lock:
            return self.vm.load_source(text, name)

    def unload_module(self, name: str) -> None:
        self.vm.unload_module(name)

    def run_file(self, path: Union[str, Path], args: Sequence[str] = ()) -> Result:
        """Load a script and execute its top-level commands."""

        def run() -> ExecOutcome:
            program = self.vm.load_file(str(path))
            return self.vm.run_top(program.instructions, args=args)

        return self._captured(run)

    # -- debugging ----------------------------------------------------------------

    def attach_debugger(self, hook: DebugHook) -> None:
        self.vm.debug_hook = hook

    def detach_debugger(self) -> None:
        self.vm.debug_hook = None
        self.vm.resume()

    def resume(self) -> None:
        self.vm.resume()

    def snapshot(self) -> dict:
        return self.vm.snapshot()

    # -- timers -------------------------------------------------------------------

    def advance(self, ms: float) -> Result:
        """Advance a :class:`VirtualClock` and fire the timers that come due."""
        if not isinstance(self.vm.timers.clock, VirtualClock):
            raise TypeError("advance() needs a VirtualClock")
        return self._captured(lambda: (self.vm.advance(ms), OK)[1])

    def fire_due_timers(self) -> Result:
        return self._captured(lambda: (self.vm.fire_due_timers(), OK)[1])

    def run_timers(self, timeout: Optional[float] = None) -> None:
        """Block, firing wall-clock timers, until none are left (or ``timeout`` seconds pass)."""
        deadline = None if timeout is None else time.monotonic() + timeout
        clock = self.vm.timers.clock
        while len(self.vm.timers):
            due = self.vm.timers.next_due()
            wait = max(0.0, (due - clock.now()) / 1000.0) if due is not None else 0.0
            if deadline is not None:
                left = deadline - time.monotonic()
                if left <= 0:
                    return
                wait = min(wait, left)
            if wait:
                time.sleep(wait)
            self.vm.fire_due_timers()

    def cancel_timer(self, name: str) -> None:
        with self.vm.lock:
            self.vm.timers.cancel(name)

    def list_timers(self) -> list[tuple[str, float, int]]:
        return self.vm.timers.listing()

    # -- run queue ------------------------------------------------------------------

    def _enqueue(self, fn: Callable[[], object]) -> Future:
        fut: Future = Future()
        if self._worker is None or not self._worker.is_alive():
            try:
                fut.set_result(fn())
            except Exception as exc:
                fut.set_exception(exc)
            return fut
        self._jobs.put((fn, fut))
        return fut

    def enqueue(self, fn: Callable[[], object]) -> Future:
        """Run an arbitrary callable on the VM thread."""
        return self._enqueue(fn)

    def start(self) -> None:
        """Start the VM thread: it serves queued jobs and fires wall-clock timers."""
        if self._worker is not None and self._worker.is_alive():
            return
        self._stopping.clear()
        self._worker = threading.Thread(target=self._serve, name="t2script-vm", daemon=True)
        self._worker.start()

    def stop(self, timeout: Optional[float] = None) -> None:
        self._stopping.set()
        self._jobs.put(None)
        if self._worker is not None:
            self._worker.join(timeout)
        self._worker = None

    def _serve(self) -> None:
        clock = self.vm.timers.clock
        while not self._stopping.is_set():
            due = self.vm.timers.next_due()
            wait = None if due is None else max(0.0, (due - clock.now()) / 1000.0)
            try:
                job = self._jobs.get(timeout=wait)
            except queue.Empty:
                job = None
            if job is not None:
                fn, fut = job
                if fut.set_running_or_notify_cancel():
                    try:
                        fut.set_result(fn())
                    except Exception as exc:
                        fut.set_exception(exc)
            if not isinstance(clock, VirtualClock):
                self.vm.fire_due_timers()


def configure(
    commands: Iterable[CommandSpec] = (),
    constants: Optional[dict[str, ConstantValue]] = None,
    contexts: Iterable[Context] = (),
    **options,
) -> Interpreter:
    """Build a ready-to-use interpreter with every built-in command registered."""
    return Interpreter(commands=commands, constants=constants, contexts=contexts, **options)


def host_command(
    name: str,
    handler: Callable[[Call], Optional[ExecOutcome]],
    min_params: int = 0,
    max_params: Optional[int] = 0,
    **kw,
) -> CommandSpec:
    """Shorthand for a host command specification."""
    return CommandSpec(fold(name), handler, min_params, max_params, **kw)
