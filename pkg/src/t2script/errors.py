"""Exception hierarchy.

Compile-time problems derive from :class:`CompileError`, run-time problems
from :class:`ScriptError`.  Inside the VM every raised :class:`T2Error` is
turned into a failed :class:`~t2script.vm.ExecOutcome` whose ``error`` is the
exception text, so scripts can ``catch`` either kind.
"""

from __future__ import annotations


class T2Error(Exception):
    """Base class for every error raised by the interpreter."""

    @property
    def kind(self) -> str:
        return type(self).__name__


# -- compile time -----------------------------------------------------------


class CompileError(T2Error):
    pass


class EncodingError(CompileError):
    pass


class HashLineSemicolon(CompileError):
    pass


class MalformedBlock(CompileError):
    pass


class UnterminatedBlock(MalformedBlock):
    pass


class UnknownCommand(CompileError):
    pass


class InvalidName(CompileError):
    pass


class ArityMismatch(CompileError):
    pass


class TooFewParams(ArityMismatch):
    pass


class MissingRequiredBlock(CompileError):
    pass


class UnexpectedBlock(CompileError):
    pass


class UnexpectedSeparationKeyword(CompileError):
    pass


class BlockInSingleCommand(CompileError):
    pass


class MalformedDirective(CompileError):
    pass


class EndNameMismatch(CompileError):
    pass


class RedefinedFunction(CompileError):
    pass


class UnknownEventBinding(CompileError):
    pass


class MinimalCompileError(CompileError):
    """Generated code carried a function or event definition."""


FunctionDefInMinimal = MinimalCompileError


# -- run time ---------------------------------------------------------------


class ScriptError(T2Error):
    pass


class PropagatedError(ScriptError):
    """Carries an already-formed error text across an expression boundary.

    Raised when a function called from inside an expression fails, so the
    enclosing command fails with exactly the same text (and cause).
    """

    def __init__(self, text: str, cause: T2Error | None = None):
        super().__init__(text)
        self.cause = cause


class MalformedExpression(ScriptError):
    pass


class UnbalancedIndex(MalformedExpression):
    pass


class EmptyName(MalformedExpression):
    pass


class UnsetVariable(ScriptError):
    pass


class UnknownConstant(ScriptError):
    pass


class UnknownOperator(ScriptError):
    pass


class UnimplementedOperator(ScriptError):
    pass


class UnknownFunction(ScriptError):
    pass


class NonNumericArgument(ScriptError):
    pass


class DivisionByZero(ScriptError):
    pass


class MathDomainError(ScriptError):
    pass


class IndexOutOfRange(ScriptError):
    pass


class BadRegex(ScriptError):
    pass


class OperatorArity(ScriptError):
    pass


class DisabledCommand(ScriptError):
    pass


class DuplicateCommand(ScriptError):
    pass


class TooFewArguments(ScriptError):
    pass


class ArgsOutsideFunction(ScriptError):
    pass


class NotAnArray(ScriptError):
    pass


class MalformedForeach(ScriptError):
    pass


class TriggerOutsideEvent(ScriptError):
    pass


class DuplicateEvent(ScriptError):
    pass


class EventsDisabled(ScriptError):
    pass


class UnknownEvent(ScriptError):
    pass


class HostEventTrigger(ScriptError):
    pass


class DuplicateTimerName(ScriptError):
    pass


class UnknownTimer(ScriptError):
    pass


class UnknownModule(ScriptError):
    pass


class ScriptFileNotFound(ScriptError):
    pass


class SpawnFailure(ScriptError):
    pass


class NonZeroExit(ScriptError):
    pass


class RecursionLimit(ScriptError):
    pass
