"""Internal commands: control flow, variables, arrays, functions, events, eval."""

from __future__ import annotations

from typing import Optional

from .commands import CommandSpec, ExprMode
from .errors import (
    ArgsOutsideFunction,
    MalformedForeach,
    NonNumericArgument,
    TooFewArguments,
    TriggerOutsideEvent,
    UnsetVariable,
)
from .operators import boolean, is_float, is_int, truthy
from .vm import (
    BREAK_CODE,
    CONTINUE_CODE,
    OK,
    RETURN,
    Array,
    Call,
    ExecOutcome,
    Frame,
    fail,
    parse_ref,
)

ON_DEMAND = ExprMode.ON_DEMAND


def _loop_step(outcome: ExecOutcome) -> Optional[ExecOutcome]:
    """Map a body outcome to the loop's reaction: None to keep looping, else the loop's result."""
    if outcome.ok or outcome.error == CONTINUE_CODE:
        return None
    if outcome.error == BREAK_CODE:
        return OK
    return outcome


def _scalar(call: Call, ref: str) -> str:
    value = call.vm.scope.lookup(ref)
    if value is None:
        raise UnsetVariable(f"variable '{ref}' is not set")
    if isinstance(value, Array):
        raise NonNumericArgument(f"'{ref}' is an array")
    return value


# -- control flow ----------------------------------------------------------------


def cmd_if(call: Call) -> ExecOutcome:
    if truthy(call.params[0]):
        return call.run_block(0)
    return call.run_block(1)


def cmd_while(call: Call) -> ExecOutcome:
    cond = call.params[0]
    first = True
    while truthy(call.interpolate(cond)):
        first = False
        result = _loop_step(call.run_block(0))
        if result is not None:
            return result
    if first and not call.inline:
        return call.run_block(1)
    return OK


def cmd_for(call: Call) -> ExecOutcome:
    scope = call.vm.scope
    var = call.interpolate(call.params[0])
    scope.set(var, call.interpolate(call.params[1]))
    cond = call.params[2]
    while truthy(call.interpolate(cond)):
        body = call.run_block(0)
        if not body.ok and body.error not in (CONTINUE_CODE, BREAK_CODE):
            return body
        every = call.run_block(1)
        if not every.ok and every.error not in (CONTINUE_CODE, BREAK_CODE):
            return every
        if BREAK_CODE in (body.error, every.error):
            return OK
    return OK


def cmd_repeat(call: Call) -> ExecOutcome:
    text = call.params[0]
    if not is_int(text) or int(text) < 0:
        raise NonNumericArgument(f"repeat: expected a non-negative integer count, got {text!r}")
    for _ in range(int(text)):
        result = _loop_step(call.run_block(0))
        if result is not None:
            return result
    return OK


def cmd_foreach(call: Call) -> ExecOutcome:
    var, keyword, name = call.params[:3]
    if keyword.lower() != "in":
        raise MalformedForeach(f"foreach expects 'in', got {keyword!r}")
    scope = call.vm.scope
    for value in scope.get_array(name).ordered_values():
        scope.set(var, value)
        result = _loop_step(call.run_block(0))
        if result is not None:
            return result
    return OK


def cmd_break(call: Call) -> ExecOutcome:
    return ExecOutcome(False, BREAK_CODE)


def cmd_continue(call: Call) -> ExecOutcome:
    return ExecOutcome(False, CONTINUE_CODE)


def cmd_throw(call: Call) -> ExecOutcome:
    return fail(_scalar(call, call.params[0]))


def cmd_catch(call: Call) -> ExecOutcome:
    outcome = call.run_block(0)
    if not outcome.is_error:
        return outcome
    if call.params:
        call.vm.scope.set(call.params[0], outcome.error)
    return OK


# -- eval-type commands ---------------------------------------------------------


def cmd_mechanize(call: Call) -> ExecOutcome:
    return call.vm.execute_text(call.interpolate(call.params[0]), call.context)


def _run_pieces(call: Call, text: str, sep: str) -> ExecOutcome:
    if not sep:
        return fail("mlcext: empty separator")
    for piece in text.split(sep):
        if not piece.strip():
            continue
        outcome = call.vm.execute_text(call.interpolate(piece), call.context)
        if not outcome.ok:
            return outcome
    return OK


def cmd_mlc(call: Call) -> ExecOutcome:
    return _run_pieces(call, call.params[0] if call.params else "", "||")


def cmd_mlcext(call: Call) -> ExecOutcome:
    sep = call.interpolate(call.params[0])
    return _run_pieces(call, call.params[1] if len(call.params) > 1 else "", sep)


def cmd_expr(call: Call) -> None:
    # parameters were already evaluated; the value is dropped
    return None


# -- variables and arrays ---------------------------------------------------------


def cmd_null(call: Call) -> None:
    return None


def cmd_setvar(call: Call) -> None:
    call.vm.scope.set(call.params[0], call.params[1])


def cmd_delvar(call: Call) -> None:
    for ref in call.params:
        call.vm.scope.delete(ref)


def cmd_isset(call: Call) -> None:
    call.vm.scope.set(call.params[1], boolean(call.vm.scope.exists(call.params[0])))


def cmd_isnumeric(call: Call) -> None:
    value = call.vm.scope.lookup(call.params[0])
    call.vm.scope.set(call.params[1], boolean(isinstance(value, str) and is_float(value)))


def cmd_setarray(call: Call) -> None:
    name, index, value = call.params
    scope = call.vm.scope
    local, bare, _ = parse_ref(name)
    ref = ("@" if local else "") + bare
    existing = scope.lookup(ref)
    if not isinstance(existing, Array):
        scope.set_array(ref, Array())
    scope.get_array(ref)[index] = value


def cmd_delarray(call: Call) -> None:
    call.vm.scope.delete(call.params[0])


def cmd_arraysize(call: Call) -> None:
    call.vm.scope.set(call.params[1], str(len(call.vm.scope.get_array(call.params[0]))))


def cmd_isarray(call: Call) -> None:
    call.vm.scope.set(call.params[1], boolean(isinstance(call.vm.scope.lookup(call.params[0]), Array)))


def cmd_inc(call: Call) -> None:
    ref = call.params[0]
    value = _scalar(call, ref)
    if not is_int(value):
        raise NonNumericArgument(f"inc: variable '{ref}' holds {value!r}, not an integer")
    call.vm.scope.set(ref, str(int(value) + 1))


def cmd_textout(call: Call) -> None:
    call.vm.write(call.params[0] if call.params else "")


def cmd_whitelist(call: Call) -> Optional[ExecOutcome]:
    value = _scalar(call, call.params[0])
    if value not in call.params[1:]:
        return RETURN
    return None


# -- functions ---------------------------------------------------------------------


def _function_frame(call: Call) -> Frame:
    frame = call.vm.scope.frame
    if frame is None or not frame.is_function:
        raise ArgsOutsideFunction(f"{call.inv.name} used outside a function")
    return frame


def cmd_function(call: Call) -> ExecOutcome:
    args = call.params[1].split() if len(call.params) > 1 else []
    value, outcome = call.vm.call_function(call.params[0], args)
    if not outcome.ok:
        return outcome
    if value:
        call.vm.write(value)
    return OK


def cmd_functiondel(call: Call) -> None:
    call.vm.remove_function(call.params[0])


def cmd_args(call: Call) -> None:
    frame = _function_frame(call)
    supplied = frame.locals.get("arg")
    count = len(supplied) if isinstance(supplied, Array) else 0
    if count < len(call.params):
        raise TooFewArguments(
            f"'{frame.function_name}' needs {len(call.params)} arguments ({' '.join(call.params)}), got {count}"
        )
    for i, name in enumerate(call.params):
        frame.locals[name.lstrip("@")] = supplied[str(i)]


def cmd_return(call: Call) -> ExecOutcome:
    frame = call.vm.scope.frame
    if frame is not None and call.params:
        frame.result = call.params[0]
    return RETURN


def cmd_result(call: Call) -> None:
    frame = call.vm.scope.frame
    if frame is not None:
        frame.result = call.params[0]


def cmd_put(call: Call) -> None:
    function, name, value = call.params
    call.vm.scope.pending.setdefault(function, {})[name.lstrip("@")] = value


def cmd_trigger(call: Call) -> ExecOutcome:
    frame = call.vm.scope.frame
    if frame is None or frame.event is None:
        raise TriggerOutsideEvent("trigger used outside an event body")
    event = frame.event
    values, outcome = call.vm.events.dispatch(call.vm, event, frame.locals)
    if not outcome.ok:
        return outcome
    if call.params and event.registrants:
        call.vm.scope.set_array(call.params[0], Array.from_list(values))
    return OK


# -- modules --------------------------------------------------------------------------


def cmd_load(call: Call) -> None:
    module, path = call.params
    call.vm.load_file(path, module)


def _run_file(call: Call, path: str, args: list[str]) -> ExecOutcome:
    vm = call.vm
    module = "file:" + str(vm.resolve_path(path))
    if module in vm.modules:
        vm.unload_module(module)
    program = vm.load_file(path, module)
    frame = Frame(module, {"arg": Array.from_list(args)}, module=module)
    _, outcome = vm.run_frame(frame, program.instructions)
    return outcome


def cmd_runfile(call: Call) -> ExecOutcome:
    return _run_file(call, call.params[0], [])


def cmd_runscript(call: Call) -> ExecOutcome:
    args = call.params[1].split() if len(call.params) > 1 else []
    return _run_file(call, call.params[0], args)


def builtin_specs() -> list[CommandSpec]:
    from .events import cmd_killtimer, cmd_settimer

    S = CommandSpec
    return [
        S("if", cmd_if, 1, 1, blocks=2, keyword="else", inline_params=2),
        S("while", cmd_while, 1, 1, blocks=2, keyword="else", inline_params=2, expr_mode=ON_DEMAND),
        S("for", cmd_for, 3, 3, blocks=2, keyword="every", expr_mode=ON_DEMAND),
        S("repeat", cmd_repeat, 1, 1, blocks=1, inline_params=2),
        S("foreach", cmd_foreach, 3, 3, blocks=1, inline_params=4),
        S("break", cmd_break),
        S("continue", cmd_continue),
        S("throw", cmd_throw, 1, 1),
        S("catch", cmd_catch, 0, 1, blocks=1),
        S("mlc", cmd_mlc, 0, 1, expr_mode=ON_DEMAND),
        S("mlcext", cmd_mlcext, 1, 2, expr_mode=ON_DEMAND),
        S("mechanize", cmd_mechanize, 1, 1, expr_mode=ON_DEMAND),
        S("load", cmd_load, 2, 2),
        S("runfile", cmd_runfile, 1, 1),
        S("runscript", cmd_runscript, 1, 2),
        S("expr", cmd_expr, 1, 1),
        S("exp", cmd_expr, 1, 1),
        S("settimer", cmd_settimer, 3, 3, blocks=1),
        S("killtimer", cmd_killtimer, 1, 1),
        S("function", cmd_function, 1, 2),
        S("put", cmd_put, 3, 3),
        S("functiondel", cmd_functiondel, 1, 1),
        S("return", cmd_return, 0, 1),
        S("result", cmd_result, 1, 1),
        S("args", cmd_args, 1, None, tail=False),
        S("trigger", cmd_trigger, 0, 1),
        S("null", cmd_null),
        S("setvar", cmd_setvar, 2, 2),
        S("delvar", cmd_delvar, 1, None, tail=False),
        S("isset", cmd_isset, 2, 2),
        S("isnumeric", cmd_isnumeric, 2, 2),
        S("setarray", cmd_setarray, 3, 3),
        S("delarray", cmd_delarray, 1, 1),
        S("arraysize", cmd_arraysize, 2, 2),
        S("isarray", cmd_isarray, 2, 2),
        S("textout", cmd_textout, 0, 1),
        S("inc", cmd_inc, 1, 1),
        S("whitelist", cmd_whitelist, 1, None, tail=False),
    ]
