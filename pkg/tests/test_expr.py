import pytest

from t2script.errors import EmptyName, MalformedExpression, UnbalancedIndex, UnknownConstant, UnknownFunction, UnsetVariable
from t2script.expr import ExpressionNode, parse_expression


def out(interp, text):
    r = interp.execute(f"textout {text}")
    assert r.ok, r.error
    return r.output[0]


def err(interp, text):
    r = interp.execute(f"textout {text}")
    assert not r.ok
    return r.outcome.cause


def test_parse_local_with_index():
    node, end = parse_expression("$@arg[0];")
    assert (node.modifier, node.name, node.had_terminator) == ("@", "arg", False)
    assert node.index == ("0",)
    assert end == len("$@arg[0]")


def test_parse_terminator():
    node, end = parse_expression("$prog. John")
    assert node == ExpressionNode("", "prog", None, True)
    assert end == len("$prog.")


def test_parse_unicode_constant_name():
    node, _ = parse_expression("$_\\u(65)")
    assert (node.modifier, node.name) == ("_", "\\u(65)")


def test_unbalanced_index():
    with pytest.raises(UnbalancedIndex):
        parse_expression("$?[+ 1 2")


def test_empty_name():
    with pytest.raises(MalformedExpression):
        parse_expression("$ x")


def test_no_dollars(interp):
    assert out(interp, "no dollars here") == "no dollars here"


def test_mechanize_interpolation(interp):
    interp.execute("setvar prog setvar name")
    assert out(interp, "$prog. John") == "setvar name John"


def test_nested_index(interp):
    interp.execute("setarray sinus 90 1")
    interp.load_source("#function f private()\n\tsetarray @angle 5 90;\n\treturn $sinus[$@angle[5]];\n#end f\n")
    assert out(interp, "$=f[]") == "1"


def test_associative_array(interp):
    interp.execute("setarray birthday Piotr 1980")
    assert out(interp, "$birthday[Piotr]") == "1980"


def test_complex_examples(interp):
    assert out(interp, "$?[+ 2 (- 7 8) 100]") == "101"
    interp.load_source(
        "#function check private()\n\tsetvar @name $@arg[0];\n\treturn $?[or (eq $@name Piotr) (eq $@name John)];\n#end check\n"
    )
    assert out(interp, "$=check[Piotr]") == "1"
    assert out(interp, "$=check[John]") == "1"
    assert out(interp, "$=check[Ann]") == "0"


def test_function_call_modes(interp):
    interp.load_source("#function fnc private()\n\treturn $@arg[0];\n#end fnc\n")
    assert out(interp, "$=fnc[first second]") == "first"
    assert out(interp, "$?[fnc (concat first $_\\s second)]") == "first second"


def test_unknown_function(interp):
    assert isinstance(err(interp, "$=missing[x]"), UnknownFunction)


def test_unset_variable(interp):
    assert isinstance(err(interp, "$ghost"), UnsetVariable)


def test_unknown_constant(interp):
    assert isinstance(err(interp, "$_nope"), UnknownConstant)


def test_constants(interp):
    assert out(interp, "a$_\\s.b") == "a b"
    assert out(interp, "$_\\u(65)") == "A"
    assert out(interp, "$_lcurlparen") == "{"
    assert out(interp, "$_rtabparen") == "]"
    assert out(interp, "$_Pi") == "3.14159265358979"
    assert out(interp, "$_true.$_false") == "10"
    assert out(interp, "x$_empty.y") == "xy"
    assert out(interp, "$_\\$") == "$"


def test_owner_and_parent(interp):
    assert out(interp, "$_owner_name") == "textout"
    assert out(interp, "$_parent_name") == "textout"


def test_terminator_concatenates(interp):
    interp.execute("setvar a x")
    assert out(interp, "$a.y") == "xy"
    assert out(interp, "$a. y") == "x y"
    assert out(interp, "$a.$a.") == "xx"


def test_case_sensitive_variables(interp):
    interp.execute("setvar v lower")
    interp.execute("setvar V upper")
    assert out(interp, "$v $V") == "lower upper"


def test_local_table_at_top_level(interp):
    r = interp.execute("setvar @x 1")
    assert r.ok
    assert isinstance(err(interp, "$@x"), UnsetVariable)


def test_host_constant_callable():
    from t2script import Interpreter

    calls = []
    it = Interpreter(constants={"n": lambda: str(len(calls.append(1) or calls))})
    assert it.execute("textout $_n $_n").output == ["1 2"]


def test_empty_name_error():
    with pytest.raises((EmptyName, MalformedExpression)):
        parse_expression("$@")
