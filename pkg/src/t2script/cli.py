"""Command-line front end: run scripts, evaluate single commands, or start a REPL."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .embed import Interpreter, Result
from .errors import CompileError, T2Error
from .reader import read_source
from .vm import DebugEvent, ExecOutcome

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_COMPILE = 2

LOAD_EVENT = "on_load"


def _exit_code(outcome: ExecOutcome) -> int:
    if outcome.ok:
        return EXIT_OK
    return EXIT_COMPILE if isinstance(outcome.cause, CompileError) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="t2script", description="Run T2Script code.")
    parser.add_argument("-e", "--execute", metavar="CMD", action="append", default=[],
                        help="run a single command (repeatable)")
    parser.add_argument("--disable", metavar="A,B", default="", help="comma-separated commands to disable")
    parser.add_argument("--trace", action="store_true", help="print every command before it runs")
    parser.add_argument("--seed", type=int, default=None, help="seed for single-event dispatch")
    parser.add_argument("--script-root", default=".", help="base directory for relative script paths")
    parser.add_argument("--allow-interpreter", metavar="PATH", action="append", default=None,
                        help="allow envrs to run PATH (repeatable); default allows any")
    parser.add_argument("--time-format", default="%H:%M:%S", help="strftime format of $_time")
    parser.add_argument("--date-format", default="%Y-%m-%d", help="strftime format of $_date")
    parser.add_argument("--lint", action="store_true", help="report lint warnings for script files")
    parser.add_argument("--timeout", type=float, default=None,
                        help="stop waiting for pending timers after this many seconds")
    sub = parser.add_subparsers(dest="mode")
    run = sub.add_parser("run", help="load script files, trigger on_load, then wait for timers")
    run.add_argument("files", nargs="+", metavar="FILE")
    sub.add_parser("repl", help="interactive prompt")
    return parser


def _tracer(err) -> object:
    def hook(event: DebugEvent) -> None:
        print(f"trace: {event.name} {' '.join(event.params)}".rstrip(), file=err)

    return hook


def make_interpreter(args: argparse.Namespace, out=None, err=None) -> Interpreter:
    out = out or sys.stdout
    err = err or sys.stderr
    interp = Interpreter(
        script_root=args.script_root,
        disabled=[n.strip() for n in args.disable.split(",") if n.strip()],
        host_events=[LOAD_EVENT],
        seed=args.seed,
        output=lambda line: print(line, file=out),
        error_sink=lambda msg: print(f"error: {msg}", file=err),
        envrs_allow=args.allow_interpreter,
        time_format=args.time_format,
        date_format=args.date_format,
    )
    if args.trace:
        interp.attach_debugger(_tracer(err))
    return interp


def _report(result: Result, err) -> int:
    if not result.ok:
        print(f"error: {result.error}", file=err)
    return _exit_code(result.outcome)


def run_files(interp: Interpreter, args: argparse.Namespace, err) -> int:
    for path in args.files:
        if args.lint:
            try:
                unit = read_source(interp.vm.read_script(path), file_id=path)
            except T2Error as exc:
                print(f"error: {exc}", file=err)
                return EXIT_COMPILE if isinstance(exc, CompileError) else EXIT_ERROR
            for warning in unit.warnings:
                print(f"lint: {warning}", file=err)
        try:
            interp.load_module(path)
        except CompileError as exc:
            print(f"error: {exc}", file=err)
            return EXIT_COMPILE
        except T2Error as exc:
            print(f"error: {exc}", file=err)
            return EXIT_ERROR
    code = _report(interp.trigger(LOAD_EVENT), err)
    if code:
        return code
    interp.run_timers(timeout=args.timeout)
    return EXIT_ERROR if interp.errors else EXIT_OK


def repl(interp: Interpreter, stdin, out, err) -> int:
    while True:
        print("t2> ", end="", file=out, flush=True)
        line = stdin.readline()
        if not line:
            print(file=out)
            return EXIT_OK
        line = line.rstrip("\n")
        if line.strip() == ":quit":
            return EXIT_OK
        if not line.strip():
            continue
        _report(interp.execute(line), err)
        interp.fire_due_timers()


def main(argv: Optional[Sequence[str]] = None, *, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_COMPILE if exc.code else EXIT_OK
    try:
        interp = make_interpreter(args, out, err)
    except T2Error as exc:
        print(f"error: {exc}", file=err)
        return EXIT_COMPILE
    for text in args.execute:
        code = _report(interp.execute(text), err)
        if code:
            return code
    if args.mode == "run":
        return run_files(interp, args, err)
    if args.mode == "repl":
        return repl(interp, stdin, out, err)
    if not args.execute:
        parser.print_usage(err)
        return EXIT_COMPILE
    interp.run_timers(timeout=args.timeout)
    return EXIT_ERROR if interp.errors else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
