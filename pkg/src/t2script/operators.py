"""Built-in operators usable inside complex expressions ``$?[op args...]``.

Every operator takes and returns text.  Undotted arithmetic works on
arbitrary-precision integers; dotted arithmetic (``+.`` etc.) on floats
rendered with at most 15 significant digits.  Boolean results are ``1``
and ``0``.
"""

from __future__ import annotations

import math
import re
from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_UP, Decimal, InvalidOperation
from typing import Callable, Protocol, Sequence

from .errors import (
    BadRegex,
    DivisionByZero,
    IndexOutOfRange,
    MathDomainError,
    NonNumericArgument,
    OperatorArity,
    UnimplementedOperator,
    UnknownOperator,
)

TRUE = "1"
FALSE = "0"

_INT_RE = re.compile(r"[+-]?\d+")
_FLOAT_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")

# keeps "** 10 100000000" and "<< 1 10**9" from eating the host
_MAX_RESULT_BITS = 1 << 20


def truthy(value: str) -> bool:
    """Only the single character ``0`` is false; everything else, even empty text, is true."""
    return value != FALSE


def boolean(flag: bool) -> str:
    return TRUE if flag else FALSE


def is_int(text: str) -> bool:
    return _INT_RE.fullmatch(text.strip()) is not None


def is_float(text: str) -> bool:
    return _FLOAT_RE.fullmatch(text.strip()) is not None


def to_int(text: str, op: str = "") -> int:
    if not is_int(text):
        raise NonNumericArgument(f"{op}: expected an integer, got {text!r}")
    return int(text.strip())


def to_float(text: str, op: str = "") -> float:
    if not is_float(text):
        raise NonNumericArgument(f"{op}: expected a number, got {text!r}")
    return float(text.strip())


def to_decimal(text: str, op: str = "") -> Decimal:
    if not is_float(text):
        raise NonNumericArgument(f"{op}: expected a number, got {text!r}")
    return Decimal(text.strip())


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise MathDomainError(f"result is not a finite number ({x})")
    s = format(x, ".15g")
    return "0" if s == "-0" else s


def format_decimal(d: Decimal) -> str:
    if d == 0:
        return "0"
    return format(d.normalize(), "f")


def _number(text: str, op: str) -> int | float:
    return to_int(text, op) if is_int(text) else to_float(text, op)


def _render(n: int | float) -> str:
    return str(n) if isinstance(n, int) else format_float(n)


def _arity(op: str, args: Sequence[str], lo: int, hi: int | None = None) -> None:
    if len(args) < lo or (hi is not None and len(args) > hi):
        want = f"{lo}" if hi == lo else f"{lo}..{'' if hi is None else hi}"
        raise OperatorArity(f"operator {op!r} takes {want} arguments, got {len(args)}")


def _tdiv(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero("integer division by zero")
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _tmod(a: int, b: int) -> int:
    return a - b * _tdiv(a, b)


def _guard_bits(bits: float) -> None:
    if bits > _MAX_RESULT_BITS:
        raise MathDomainError("integer result too large")


# -- category 1: basic arithmetic --------------------------------------------


def _fold_int(op: str, fn: Callable[[int, int], int], unary: Callable[[int], int] | None = None):
    def run(args: Sequence[str]) -> str:
        _arity(op, args, 1)
        nums = [to_int(a, op) for a in args]
        if len(nums) == 1 and unary is not None:
            return str(unary(nums[0]))
        acc = nums[0]
        for n in nums[1:]:
            acc = fn(acc, n)
        return str(acc)

    return run


def _int_mul(a: int, b: int) -> int:
    _guard_bits(a.bit_length() + b.bit_length())
    return a * b


def _fdiv(a: float, b: float) -> float:
    if b == 0:
        raise DivisionByZero("division by zero")
    return a / b


def _fold_float(op: str, fn: Callable[[float, float], float], unary: Callable[[float], float] | None = None):
    def run(args: Sequence[str]) -> str:
        _arity(op, args, 1)
        nums = [to_float(a, op) for a in args]
        if len(nums) == 1 and unary is not None:
            return format_float(unary(nums[0]))
        acc = nums[0]
        for n in nums[1:]:
            acc = fn(acc, n)
        return format_float(acc)

    return run


# -- category 2: other arithmetic --------------------------------------------


def _mod(args: Sequence[str]) -> str:
    _arity("%", args, 2, 2)
    if is_int(args[0]) and is_int(args[1]):
        b = to_int(args[1], "%")
        if b == 0:
            raise DivisionByZero("modulo by zero")
        return str(_tmod(to_int(args[0], "%"), b))
    a, b = to_float(args[0], "%"), to_float(args[1], "%")
    if b == 0:
        raise DivisionByZero("modulo by zero")
    return format_float(math.fmod(a, b))


def _pow(args: Sequence[str]) -> str:
    _arity("**", args, 2, 2)
    if is_int(args[0]) and is_int(args[1]) and to_int(args[1]) >= 0:
        base, exp = to_int(args[0]), to_int(args[1])
        if abs(base) > 1:
            _guard_bits(exp * math.log2(abs(base)))
        return str(base**exp)
    base, exp = to_float(args[0], "**"), to_float(args[1], "**")
    if base == 0 and exp < 0:
        raise DivisionByZero("zero raised to a negative power")
    try:
        result = base**exp
    except OverflowError:
        raise MathDomainError("power overflows") from None
    if isinstance(result, complex):
        raise MathDomainError(f"negative base {args[0]} with fractional exponent")
    return format_float(result)


def _unary_float(op: str, fn: Callable[[float], float], ok: Callable[[float], bool] = lambda x: True):
    def run(args: Sequence[str]) -> str:
        _arity(op, args, 1, 1)
        x = to_float(args[0], op)
        if not ok(x):
            raise MathDomainError(f"{op}: argument {args[0]} out of domain")
        try:
            return format_float(fn(x))
        except OverflowError:
            raise MathDomainError(f"{op}: result overflows") from None

    return run


def _logn(args: Sequence[str]) -> str:
    _arity("logn", args, 2, 2)
    base, x = to_float(args[0], "logn"), to_float(args[1], "logn")
    if base <= 0 or base == 1 or x <= 0:
        raise MathDomainError(f"logn: bad arguments {args[0]}, {args[1]}")
    return format_float(math.log(x) / math.log(base))


def _abs(args: Sequence[str]) -> str:
    _arity("abs", args, 1, 1)
    return _render(abs(_number(args[0], "abs")))


def _extreme(op: str, pick: Callable):
    def run(args: Sequence[str]) -> str:
        _arity(op, args, 1)
        return _render(pick(_number(a, op) for a in args))

    return run


def _tohex(args: Sequence[str]) -> str:
    _arity("tohex", args, 1, 1)
    return format(to_int(args[0], "tohex"), "x")


# -- category 3: bitwise -----------------------------------------------------


def _invert(args: Sequence[str]) -> str:
    _arity("~", args, 1, 1)
    return str(~to_int(args[0], "~"))


def _shift(op: str, left: bool):
    def run(args: Sequence[str]) -> str:
        _arity(op, args, 2, 2)
        a, n = to_int(args[0], op), to_int(args[1], op)
        if n < 0:
            raise MathDomainError(f"{op}: negative shift count")
        if left:
            _guard_bits(a.bit_length() + n)
            return str(a << n)
        return str(a >> n)

    return run


# -- category 4: rounding ----------------------------------------------------


def _round(args: Sequence[str]) -> str:
    _arity("round", args, 1, 1)
    return str(int(to_decimal(args[0], "round").quantize(Decimal(1), rounding=ROUND_HALF_UP)))


def _roundto(args: Sequence[str]) -> str:
    _arity("roundto", args, 2, 2)
    places = to_int(args[0], "roundto")
    x = to_decimal(args[1], "roundto")
    try:
        return format_decimal(x.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))
    except InvalidOperation:
        raise MathDomainError(f"roundto: cannot round {args[1]} to {places} places") from None


def _integral(op: str, mode: str):
    def run(args: Sequence[str]) -> str:
        _arity(op, args, 1, 1)
        return str(int(to_decimal(args[0], op).quantize(Decimal(1), rounding=mode)))

    return run


# -- category 5: logic -------------------------------------------------------


def _not(args: Sequence[str]) -> str:
    _arity("!", args, 1, 1)
    return boolean(not truthy(args[0]))


def _or(args: Sequence[str]) -> str:
    _arity("?|", args, 1)
    return boolean(any(truthy(a) for a in args))


def _and(args: Sequence[str]) -> str:
    _arity("?&", args, 1)
    return boolean(all(truthy(a) for a in args))


# -- category 6: relational --------------------------------------------------


def compare(a: str, b: str) -> int:
    """Three-way compare: numerically when both sides are numbers, else by code points."""
    if is_float(a) and is_float(b):
        x, y = Decimal(a.strip()), Decimal(b.strip())
    else:
        x, y = a, b
    return (x > y) - (x < y)


def _relation(op: str, test: Callable[[int], bool]):
    def run(args: Sequence[str]) -> str:
        _arity(op, args, 2, 2)
        return boolean(test(compare(args[0], args[1])))

    return run


def _eqic(args: Sequence[str]) -> str:
    _arity(":==", args, 2, 2)
    return boolean(args[0].casefold() == args[1].casefold())


def _neic(args: Sequence[str]) -> str:
    _arity(":!=", args, 2, 2)
    return boolean(args[0].casefold() != args[1].casefold())


def _regex(pattern: str) -> re.Pattern:
    try:
        return re.compile(pattern)
    except re.error as exc:
        raise BadRegex(f"bad regular expression {pattern!r}: {exc}") from None


def _match(args: Sequence[str]) -> str:
    _arity("=~", args, 2, 2)
    return boolean(_regex(args[0]).search(args[1]) is not None)


def _match_text(args: Sequence[str]) -> str:
    _arity("=~~", args, 2, 2)
    m = _regex(args[0]).search(args[1])
    return m.group(0) if m else ""


def _comp(args: Sequence[str]) -> str:
    _arity("comp", args, 2, 2)
    return str(compare(args[0], args[1]))


# -- category 7: strings -----------------------------------------------------


def _concat(args: Sequence[str]) -> str:
    return "".join(args)


def _one(op: str, fn: Callable[[str], str]):
    def run(args: Sequence[str]) -> str:
        _arity(op, args, 1, 1)
        return fn(args[0])

    return run


def _index(op: str, text: str, size: int) -> int:
    n = to_int(text, op)
    if not 0 <= n < size:
        raise IndexOutOfRange(f"{op}: index {n} out of range 0..{size - 1}")
    return n


def _substr(args: Sequence[str]) -> str:
    _arity("substr", args, 2, 3)
    text = args[0]
    start = to_int(args[1], "substr")
    if not 0 <= start <= len(text):
        raise IndexOutOfRange(f"substr: start {start} out of range 0..{len(text)}")
    if len(args) == 2:
        return text[start:]
    length = to_int(args[2], "substr")
    if length < 0:
        raise IndexOutOfRange(f"substr: negative length {length}")
    return text[start:start + length]


def _strpos(args: Sequence[str]) -> str:
    _arity("strpos", args, 2, 2)
    return str(args[1].find(args[0]))


def _strposic(args: Sequence[str]) -> str:
    _arity("strposic", args, 2, 2)
    return str(args[1].lower().find(args[0].lower()))


def _word(args: Sequence[str]) -> str:
    _arity("word", args, 2, 2)
    words = args[1].split()
    return words[_index("word", args[0], len(words))]


def _char(args: Sequence[str]) -> str:
    _arity("char", args, 2, 2)
    return args[1][_index("char", args[0], len(args[1]))]


OPERATORS: dict[str, Callable[[Sequence[str]], str]] = {
    # 1
    "+": _fold_int("+", lambda a, b: a + b),
    "-": _fold_int("-", lambda a, b: a - b, unary=lambda a: -a),
    "*": _fold_int("*", _int_mul),
    "/": _fold_int("/", _tdiv),
    "+.": _fold_float("+.", lambda a, b: a + b),
    "-.": _fold_float("-.", lambda a, b: a - b, unary=lambda a: -a),
    "*.": _fold_float("*.", lambda a, b: a * b),
    "/.": _fold_float("/.", _fdiv),
    # 2
    "%": _mod,
    "**": _pow,
    "sqrt": _unary_float("sqrt", math.sqrt, lambda x: x >= 0),
    "ln": _unary_float("ln", math.log, lambda x: x > 0),
    "logn": _logn,
    "exp": _unary_float("exp", math.exp),
    "abs": _abs,
    "min": _extreme("min", min),
    "max": _extreme("max", max),
    "tohex": _tohex,
    # 3
    "~": _invert,
    "&": _fold_int("&", lambda a, b: a & b),
    "|": _fold_int("|", lambda a, b: a | b),
    "^": _fold_int("^", lambda a, b: a ^ b),
    "<<": _shift("<<", left=True),
    ">>": _shift(">>", left=False),
    # 4
    "round": _round,
    "roundto": _roundto,
    "ceil": _integral("ceil", ROUND_CEILING),
    "floor": _integral("floor", ROUND_FLOOR),
    # 5
    "!": _not,
    "?|": _or,
    "?&": _and,
    # 6
    "==": _relation("==", lambda c: c == 0),
    "!=": _relation("!=", lambda c: c != 0),
    "<=": _relation("<=", lambda c: c <= 0),
    ">=": _relation(">=", lambda c: c >= 0),
    "<": _relation("<", lambda c: c < 0),
    ">": _relation(">", lambda c: c > 0),
    ":==": _eqic,
    ":!=": _neic,
    "=~": _match,
    "=~~": _match_text,
    "comp": _comp,
    # 7
    ":+": _concat,
    "empty?": _one("empty?", lambda s: boolean(s == "")),
    "len": _one("len", lambda s: str(len(s))),
    "num?": _one("num?", lambda s: boolean(is_int(s))),
    "float?": _one("float?", lambda s: boolean(is_float(s))),
    "substr": _substr,
    "strpos": _strpos,
    "strposic": _strposic,
    "word": _word,
    "char": _char,
    "upcase": _one("upcase", str.upper),
    "downcase": _one("downcase", str.lower),
}

ALIASES = {
    "eq": "==",
    "ne": "!=",
    "le": "<=",
    "ge": ">=",
    "lt": "<",
    "gt": ">",
    "eqic": ":==",
    "neic": ":!=",
    "or": "?|",
    "and": "?&",
    "not": "!",
    "concat": ":+",
}

# need access to variables / the VM; evaluated by the expression engine
ENV_OPERATORS = frozenset({"=", "exists?", "!!", "@@", "??"})


class OperatorEnv(Protocol):
    def assign(self, ref: str, value: str) -> None: ...

    def exists(self, ref: str) -> bool: ...

    def run_command(self, text: str) -> str: ...


def canonical_name(name: str) -> str:
    return ALIASES.get(name, name)


def is_builtin(name: str) -> bool:
    name = canonical_name(name)
    return name in OPERATORS or name in ENV_OPERATORS


def apply_operator(name: str, args: Sequence[str], env: OperatorEnv | None = None) -> str:
    op = canonical_name(name)
    fn = OPERATORS.get(op)
    if fn is not None:
        return fn(list(args))
    if op not in ENV_OPERATORS:
        raise UnknownOperator(f"unknown operator {name!r}")
    if op in ("@@", "??"):
        raise UnimplementedOperator(f"operator {op!r} is reserved but has no defined behaviour")
    if env is None:
        raise UnknownOperator(f"operator {op!r} needs an interpreter")
    if op == "=":
        _arity("=", args, 2, 2)
        env.assign(args[0], args[1])
        return args[1]
    if op == "exists?":
        _arity("exists?", args, 1, 1)
        return boolean(env.exists(args[0]))
    _arity("!!", args, 1)
    return env.run_command(" ".join(args))
