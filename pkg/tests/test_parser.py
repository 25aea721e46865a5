from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccsni.core import NIL, Channel, Input, Output, Par, Restrict, SecurityLattice, Sum
from ccsni.gen import GenConfig, random_program
from ccsni.parser import ParseError, SourceFile, format_process, parse, parse_process, pretty_print

from conftest import prog


def test_prefix_binds_tighter_than_sum_and_par():
    p = parse_process("a_h(x).'b_l<x>.0 + c_l(y).0 | 'd_h<u>.0")
    assert isinstance(p, Par)
    left, right = p.parts
    assert isinstance(left, Sum) and len(left.branches) == 2
    assert right == Sum(((Output(Channel("d", "h"), "u"), NIL),))


def test_new_is_a_term():
    p = parse_process("new a_h.'a_h<u>.0 | a_h(x).0")
    assert isinstance(p, Par)
    assert isinstance(p.parts[0], Restrict)


def test_bare_prefixes():
    p = parse_process("a_h.'b_l")
    (pre, cont), = p.branches
    assert pre == Input(Channel("a", "h"), "_")
    assert cont.branches[0][0] == Output(Channel("b", "l"), "u")
    assert cont.branches[0][1] == NIL


def test_values_inferred_from_payloads():
    assert prog("a_h(x).'b_l<e>.0 + 'c_l<r>.0").values == ("e", "r")
    assert prog("a_h(x).0").values == ("u",)
    assert prog("values {v, w}\nmain = 0").values == ("v", "w")


def test_levels_declaration():
    p = prog("levels l < m < h\nmain = 'a_m<u>.0")
    assert p.lattice == SecurityLattice.chain(["l", "m", "h"])


def test_comments_and_layout():
    p = parse("# header\nvalues {u}   # trailing\n\nagent A() =\n  'a_h<u>.A()\nmain = A()\n")
    assert [a.name for a in p.agents] == ["A"]


def test_locations_recorded():
    p = parse("main =\n  a_h(x).0")
    assert p.main.branches[0][0].loc.line == 2


@pytest.mark.parametrize("text, line, col", [
    ("main = a_h(x).", 1, 15),
    ("main = a_h(x) + 0", 1, 17),
    ("main = 'a_h<u", 1, 14),
    ("values {u}\nmain = (0", 2, 10),
    ("main = 0 0", 1, 10),
    ("main = ah(x).0", 1, 8),
    ("agent a() = 0\nmain = 0", 1, 7),
    ("main = 'a_h<u>.0 $", 1, 18),
])
def test_errors_carry_positions(text, line, col):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert (info.value.line, info.value.col) == (line, col)


def test_error_message_includes_path():
    with pytest.raises(ParseError, match=r"^f\.ccsni:1:"):
        parse("main = +", path="f.ccsni")


def test_deep_nesting_is_a_parse_error():
    with pytest.raises(ParseError, match="too deep"):
        parse("main = " + "(" * 5000 + "0" + ")" * 5000)


def test_invalid_utf8(tmp_path):
    f = tmp_path / "bad.ccsni"
    f.write_bytes(b"main = \xff")
    with pytest.raises(ParseError):
        SourceFile.read(f)


def test_pretty_print_shape():
    p = prog("agent A(w) = 'a_h<w>.A(w)\nmain = A(u) | b_l(x).('c_l<x>.0 + 'c_l<u>.0)")
    text = pretty_print(p)
    assert text.splitlines()[0] == "values {u}"
    assert "agent A(w) = 'a_h<w>.A(w)" in text
    assert parse(text) == p


def test_format_parenthesises_continuation_sums():
    p = parse_process("a_h(x).('b_h<x>.0 + 'c_h<u>.0)")
    assert format_process(p) == "a_h(x).('b_h<x>.0 + 'c_h<u>.0)"


@pytest.mark.parametrize("lattice", [None, SecurityLattice.chain(["l", "m", "h"])])
@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_round_trip(lattice, seed):
    cfg = GenConfig(lattice=lattice or SecurityLattice.two_point())
    p = random_program(random.Random(seed), cfg)
    assert parse(pretty_print(p)) == p


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_fuzz_bytes_never_crash(data):
    text = data.decode("utf-8", errors="replace")
    try:
        parse(text)
    except ParseError:
        pass


_tokens = st.sampled_from(["main", "=", "a_h", "b_l", "(", ")", "x", ".", "+", "|", "'", "<", ">",
                           "0", "new", "agent", "A", ",", "values", "{", "}", "u", "\n"])


@settings(max_examples=300, deadline=None)
@given(st.lists(_tokens, max_size=30))
def test_fuzz_token_soup(tokens):
    try:
        parse(" ".join(tokens))
    except ParseError:
        pass


def test_parse_bytes():
    assert parse(b"main = 'a_h<u>.0") == parse("main = 'a_h<u>.0")
    with pytest.raises(ParseError, match="invalid UTF-8"):
        parse(b"main = \xff")
