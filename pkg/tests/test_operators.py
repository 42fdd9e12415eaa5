import pytest
from hypothesis import given, strategies as st

from t2script.errors import (
    BadRegex,
    DivisionByZero,
    MathDomainError,
    NonNumericArgument,
    OperatorArity,
    UnimplementedOperator,
    UnknownOperator,
)
from t2script.operators import apply_operator, canonical_name, compare, is_builtin, truthy


def op(name, *args):
    return apply_operator(name, list(args))


@pytest.mark.parametrize(
    "text, expected",
    [("0", False), ("", True), ("false", True), ("00", True), (" 0", True), ("1", True)],
)
def test_truthiness(text, expected):
    assert truthy(text) is expected


def test_examples():
    assert op("<", "5", "10") == "1"
    assert op("eq", "5", "5") == "1"
    assert op("+", "2", op("-", "7", "8"), "100") == "101"
    assert op("tohex", "255") == "ff"


def test_unary_minus_and_variadic():
    assert op("-", "5") == "-5"
    assert op("+", "1", "2", "3", "4") == "10"
    assert op("-.", "2.5") == "-2.5"


def test_truncating_division_and_c_modulo():
    assert op("/", "-7", "2") == "-3"
    assert op("%", "-7", "2") == "-1"
    assert op("%", "7", "-2") == "1"


@pytest.mark.parametrize("name", ["/", "/.", "%"])
def test_division_by_zero(name):
    with pytest.raises(DivisionByZero):
        op(name, "1", "0")


def test_power():
    assert op("**", "2", "10") == "1024"
    assert op("**", "2", "-1") == "0.5"
    with pytest.raises(MathDomainError):
        op("**", "-8", "0.5")
    with pytest.raises(MathDomainError):
        op("**", "10", "100000000")


def test_math_domain():
    assert op("sqrt", "16") == "4"
    with pytest.raises(MathDomainError):
        op("sqrt", "-1")
    with pytest.raises(MathDomainError):
        op("ln", "0")
    assert op("logn", "2", "1024") == "10"
    assert op("exp", "0") == "1"


def test_min_max_abs():
    assert op("min", "3", "-2", "7") == "-2"
    assert op("max", "3", "2.5") == "3"
    assert op("abs", "-4") == "4"
    assert op("abs", "-4.5") == "4.5"


def test_bitwise():
    assert op("&", "12", "10") == "8"
    assert op("|", "12", "10") == "14"
    assert op("^", "12", "10") == "6"
    assert op("~", "0") == "-1"
    assert op("<<", "1", "4") == "16"
    assert op(">>", "-16", "2") == "-4"
    with pytest.raises(MathDomainError):
        op("<<", "1", "-1")


def test_rounding():
    assert op("round", "2.5") == "3"
    assert op("round", "-2.5") == "-3"
    assert op("round", "2.4") == "2"
    assert op("roundto", "2", "3.14159") == "3.14"
    assert op("ceil", "2.1") == "3"
    assert op("floor", "-2.1") == "-3"


def test_logic():
    assert op("not", "0") == "1"
    assert op("or", "0", "0") == "0"
    assert op("or", "0", "x") == "1"
    assert op("and", "1", "") == "1"
    assert op("and", "1", "0") == "0"


def test_relational():
    assert op("==", "1.0", "1") == "1"
    assert op("lt", "abc", "abd") == "1"
    assert op("gt", "10", "9") == "1"
    assert op("gt", "10", "9x") == "0"
    assert op("eqic", "ABC", "abc") == "1"
    assert op("neic", "ABC", "abd") == "1"
    assert op("comp", "a", "b") == "-1"
    assert op("comp", "2", "2.0") == "0"


def test_regex():
    assert op("=~", "^a+b$", "aaab") == "1"
    assert op("=~", r"\d{3}", "ab12") == "0"
    assert op("=~~", r"\d+", "ab123cd") == "123"
    assert op("=~~", r"\d+", "abc") == ""
    with pytest.raises(BadRegex):
        op("=~", "(", "x")


def test_strings():
    assert op("concat", "a", "b", "c") == "abc"
    assert op("empty?", "") == "1"
    assert op("len", "hello") == "5"
    assert op("num?", "12") == "1"
    assert op("num?", "1.5") == "0"
    assert op("float?", "1.5") == "1"
    assert op("substr", "hello", "1", "3") == "ell"
    assert op("substr", "hello", "2") == "llo"
    assert op("strpos", "ll", "hello") == "2"
    assert op("strpos", "z", "hello") == "-1"
    assert op("strposic", "LL", "hello") == "2"
    assert op("word", "1", "alpha beta gamma") == "beta"
    assert op("char", "0", "xyz") == "x"
    assert op("upcase", "aB") == "AB"
    assert op("downcase", "aB") == "ab"


def test_errors():
    with pytest.raises(NonNumericArgument):
        op("+", "1", "x")
    with pytest.raises(OperatorArity):
        op("sqrt", "1", "2")
    with pytest.raises(UnknownOperator):
        op("frobnicate", "1")


def test_aliases():
    assert canonical_name("EQ") == "==" or canonical_name("eq") == "=="
    assert is_builtin("concat") and is_builtin(":+")


def test_env_operators(interp):
    r = interp.execute("textout $?[= x 5]$x")
    assert r.ok and r.output == ["55"]
    assert interp.execute("textout $?[exists? x] $?[exists? nope]").output == ["1 0"]
    r = interp.execute("textout [$?[!! textout inner]]")
    assert r.output == ["inner", "[]"]
    r = interp.execute("textout $?[@@ x]")
    assert isinstance(r.outcome.cause, UnimplementedOperator)


numbers = st.integers(-10**6, 10**6).map(str) | st.floats(-1e6, 1e6, allow_nan=False).map(repr)


@given(numbers, numbers, numbers)
def test_compare_is_total_order(a, b, c):
    assert compare(a, a) == 0
    assert compare(a, b) == -compare(b, a)
    if compare(a, b) <= 0 and compare(b, c) <= 0:
        assert compare(a, c) <= 0
