"""T2Script: an embeddable command-oriented scripting language."""

from .commands import CommandSpec, ExprMode, Reservoir
from .compiler import Invocation, Program, compile_script, compile_single, compile_text, render
from .embed import Interpreter, Result, configure, host_command, run_generated
from .errors import CompileError, ScriptError, T2Error
from .events import VirtualClock, WallClock
from .reader import Origin, read_source
from .vm import VM, Call, Context, DebugEvent, ExecOutcome, StepDecision

__all__ = [
    "Call",
    "CommandSpec",
    "CompileError",
    "Context",
    "DebugEvent",
    "ExecOutcome",
    "ExprMode",
    "Interpreter",
    "Invocation",
    "Origin",
    "Program",
    "Reservoir",
    "Result",
    "ScriptError",
    "StepDecision",
    "T2Error",
    "VM",
    "VirtualClock",
    "WallClock",
    "compile_script",
    "compile_single",
    "compile_text",
    "configure",
    "host_command",
    "read_source",
    "render",
    "run_generated",
]
