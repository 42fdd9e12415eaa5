import pytest
from hypothesis import given, strategies as st

from t2script.compiler import compile_script, compile_text, render, split_params, split_words
from t2script.embed import default_specs
from t2script.commands import Reservoir
from t2script.errors import (
    ArityMismatch,
    BlockInSingleCommand,
    EndNameMismatch,
    MalformedBlock,
    MalformedDirective,
    MinimalCompileError,
    MissingRequiredBlock,
    RedefinedFunction,
    TooFewParams,
    UnexpectedBlock,
    UnexpectedSeparationKeyword,
    UnknownCommand,
    UnterminatedBlock,
)
from t2script.reader import Origin, read_source


@pytest.fixture(scope="module")
def reservoir():
    r = Reservoir()
    for spec in default_specs():
        r.add(spec)
    return r


def script(text, reservoir):
    return compile_script(read_source(text), reservoir)


def test_block_command(reservoir):
    prog = script("if $success {\n\tsetvar @text Patient fine;\n} else {\n\tsetvar @text Patient still sick;\n}\n", reservoir)
    (inv,) = prog.instructions
    assert inv.name == "if" and inv.params == ("$success",)
    assert len(inv.blocks) == 2 and inv.keyword == "else"
    assert inv.blocks[1][0].params == ("@text", "Patient still sick")


def test_function_definition(reservoir):
    prog = script("#function fnc private()\n\treturn $@arg[0];\n#end fnc\n", reservoir)
    fdef = prog.functions["fnc"]
    assert fdef.ftype == "private" and fdef.event_binding is None
    assert [i.name for i in fdef.body] == ["return"]


def test_empty_file(reservoir):
    prog = script("", reservoir)
    assert (prog.instructions, prog.functions, prog.events) == ([], {}, {})


def test_event_arg_names(reservoir):
    prog = script("#event e multi()\n\targs username;\n\ttrigger;\n#end e\n", reservoir)
    assert prog.events["e"].declared_arg_names == ("username",)


def test_multiword_tail(reservoir):
    (inv,) = compile_text("setvar my_var Hello, this is multi words parameter", reservoir).instructions
    assert inv.params == ("my_var", "Hello, this is multi words parameter")


def test_case_insensitive_names(reservoir):
    a = compile_text("SETVAR x 1", reservoir).instructions[0]
    b = compile_text("setvar x 1", reservoir).instructions[0]
    assert a.command_id == b.command_id


def test_unknown_command(reservoir):
    with pytest.raises(UnknownCommand):
        compile_text("nosuchcmd a", reservoir)


def test_split_for_params(reservoir):
    spec = reservoir.resolve("for").spec
    assert split_params("i 0 $?[< $i 10]", spec) == ["i", "0", "$?[< $i 10]"]


def test_split_collapses_spaces(reservoir):
    assert split_params("a  b", reservoir.resolve("setvar").spec) == ["a", "b"]


def test_split_words_respects_index():
    assert split_words("a $x[1 2] b") == ["a", "$x[1 2]", "b"]
    assert split_words("a b c d", 2) == ["a", "b", "c d"]
    assert split_words("  just one tail  ", 0) == ["just one tail"]


def test_arity(reservoir):
    with pytest.raises(TooFewParams):
        compile_text("setvar x", reservoir)
    with pytest.raises(ArityMismatch):
        compile_text("null x", reservoir)


def test_block_errors(reservoir):
    with pytest.raises(MissingRequiredBlock):
        script("for i 0 1;\n", reservoir)
    with pytest.raises(UnexpectedBlock):
        script("null {\n}\n", reservoir)
    with pytest.raises(UnexpectedSeparationKeyword):
        script("if 1 {\n} every {\n}\n", reservoir)
    with pytest.raises(UnexpectedSeparationKeyword):
        script("repeat 2 {\n} else {\n}\n", reservoir)
    with pytest.raises(UnterminatedBlock):
        script("if 1 {\n\tnull;\n", reservoir)
    with pytest.raises(MalformedBlock):
        script("null;\n}\n", reservoir)


def test_directive_errors(reservoir):
    with pytest.raises(EndNameMismatch):
        script("#function f private()\n#end g\n", reservoir)
    with pytest.raises(RedefinedFunction):
        script("#function f private()\n#end f\n#function f private()\n#end f\n", reservoir)
    with pytest.raises(MalformedDirective):
        script("#function f private() << e\n#end f\n", reservoir)
    with pytest.raises(MalformedDirective):
        script("#function f public()\n#end f\n", reservoir)
    with pytest.raises(MalformedDirective):
        script("#end f\n", reservoir)
    with pytest.raises(UnterminatedBlock):
        script("#function f private()\nnull;\n", reservoir)


def test_single_rejects_blocks(reservoir):
    with pytest.raises(BlockInSingleCommand):
        compile_text("if $x {", reservoir)
    with pytest.raises(BlockInSingleCommand):
        compile_text("#function f private()", reservoir)


def test_generated_rejects_definitions(reservoir):
    with pytest.raises(MinimalCompileError):
        compile_text("null\n#function f private()\n#end f\n", reservoir, Origin.META_GENERATED)


def test_inline_forms(reservoir):
    (inv,) = compile_text("if 1 textout yes", reservoir).instructions
    assert inv.inline and inv.params == ("1",)
    assert inv.blocks[0][0].name == "textout"
    (inv,) = compile_text("foreach v in arr textout $v", reservoir).instructions
    assert inv.params == ("v", "in", "arr") and inv.blocks[0][0].params == ("$v",)


# -- round trip ------------------------------------------------------------

word = st.text(alphabet="abcxyz0189@", min_size=1, max_size=5)


def leaf():
    return st.one_of(
        st.builds(lambda w: f"textout {w}", word),
        st.builds(lambda a, b: f"setvar {a} {b}", word, word),
        st.just("null"),
    )


def blocks(depth):
    if depth == 0:
        return st.lists(leaf(), max_size=3)
    inner = blocks(depth - 1)
    return st.lists(
        st.one_of(
            leaf(),
            st.builds(lambda b: ("if", b, None), inner),
            st.builds(lambda b, e: ("if", b, e), inner, inner),
            st.builds(lambda b, e: ("for", b, e), inner, inner),
        ),
        max_size=3,
    )


def emit(items, indent=""):
    out = []
    for item in items:
        if isinstance(item, str):
            out.append(f"{indent}{item};")
            continue
        head, body, second = item
        kw = "else" if head == "if" else "every"
        out.append(f"{indent}{'if 1' if head == 'if' else 'for i 0 0'} {{")
        out += emit(body, indent + "\t")
        if second is not None:
            out.append(f"{indent}}} {kw} {{")
            out += emit(second, indent + "\t")
        out.append(f"{indent}}}")
    return out


@given(blocks(2))
def test_render_round_trip(items):
    r = Reservoir()
    for spec in default_specs():
        r.add(spec)
    prog = compile_script(read_source("\n".join(emit(items))), r)
    text = "\n".join(render(inv) for inv in prog.instructions)
    again = compile_script(read_source(text), r)
    assert again.instructions == prog.instructions
