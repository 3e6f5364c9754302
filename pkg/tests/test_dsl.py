from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from concircle.dsl import (FUNCTIONS, Bin, Call, Neg, Num, Pow, Var, eval_expr, free_symbols,
                           parse_expr, rename, to_source, tokenize)
from concircle.errors import DomainError, ParseError
from concircle.jets import Jet3


def env1(x: float, name="x") -> dict:
    return {name: Jet3.variable(0, x, 1)}


class TestParse:
    def test_precedence_example(self):
        e = parse_expr("f^2 * sin(x)^2", ["f", "x"])
        assert e == Bin("*", Pow(Var("f"), 2), Pow(Call("sin", Var("x")), 2))

    def test_power_binds_tighter_than_negation(self):
        assert parse_expr("-x^2", ["x"]) == Neg(Pow(Var("x"), 2))

    def test_quotient(self):
        assert parse_expr("1/z^2", ["z"]) == Bin("/", Num(1.0), Pow(Var("z"), 2))

    def test_left_associative(self):
        assert parse_expr("a - b - c", "abc") == Bin("-", Bin("-", Var("a"), Var("b")), Var("c"))
        assert parse_expr("a / b * c", "abc") == Bin("*", Bin("/", Var("a"), Var("b")), Var("c"))

    def test_right_associative_power(self):
        # x^2^3 = x^(2^3)
        assert parse_expr("x^2^3", ["x"]) == Pow(Var("x"), 8)

    def test_parentheses_erased(self):
        assert parse_expr("((x))", ["x"]) == Var("x")

    @pytest.mark.parametrize("source,fragment", [
        ("", "empty"),
        ("   ", "empty"),
        ("y + 1", "y"),
        ("(x + 1", ""),
        ("x + 1)", ""),
        ("x^0.5", "integer"),
        ("x^y", "integer"),
        ("2x", ""),
        ("erf(x)", "erf"),
        ("x +", "end"),
    ])
    def test_errors(self, source, fragment):
        with pytest.raises(ParseError) as info:
            parse_expr(source, ["x"])
        assert fragment in str(info.value)
        assert isinstance(info.value.offset, int)
        assert 0 <= info.value.offset <= len(source.encode())

    def test_unknown_identifier_offset(self):
        with pytest.raises(ParseError) as info:
            parse_expr("x + zeta", ["x"])
        assert info.value.offset == 4

    def test_free_symbols_and_rename(self):
        e = parse_expr("f * sin(x) + x^2", ["f", "x"])
        assert free_symbols(e) == {"f", "x"}
        assert free_symbols(rename(e, {"x": "u"})) == {"f", "u"}


class TestEval:
    def test_square(self):
        j = eval_expr(parse_expr("x^2", ["x"]), env1(3.0))
        assert [j.value, j.derivative([0]), j.derivative([0, 0]), j.derivative([0, 0, 0])] == \
            [9.0, 6.0, 2.0, 0.0]

    def test_sin_squared(self):
        j = eval_expr(parse_expr("sin(x)^2", ["x"]), env1(math.pi / 3))
        assert j.value == pytest.approx(0.75)
        assert j.derivative([0]) == pytest.approx(math.sqrt(3) / 2)

    def test_inverse_square(self):
        j = eval_expr(parse_expr("1/z^2", ["z"]), env1(2.0, "z"))
        assert j.value == pytest.approx(0.25)
        assert j.derivative([0]) == pytest.approx(-0.25)

    def test_domain_error_carries_span(self):
        src = "x + ln(x - 2)"
        with pytest.raises(DomainError) as info:
            eval_expr(parse_expr(src, ["x"]), env1(1.0))
        lo, hi = info.value.span
        assert "ln" in src[lo:hi]


# closed forms evaluated at random points, with derivatives where cheap
CORPUS = [
    ("x^2 + 3*x - 1", lambda x: x**2 + 3 * x - 1),
    ("sin(x)^2 + cos(x)^2", lambda x: 1.0),
    ("exp(2*x)", lambda x: math.exp(2 * x)),
    ("ln(x^2 + 1)", lambda x: math.log(x**2 + 1)),
    ("sqrt(x^2 + 4)", lambda x: math.sqrt(x**2 + 4)),
    ("tan(x/3)", lambda x: math.tan(x / 3)),
    ("sinh(x)*cosh(x)", lambda x: math.sinh(x) * math.cosh(x)),
    ("tanh(x)^3", lambda x: math.tanh(x) ** 3),
    ("1/(1 + x^2)", lambda x: 1 / (1 + x**2)),
    ("-x^2", lambda x: -(x**2)),
    ("(-x)^2", lambda x: x**2),
    ("x^-3", lambda x: x**-3),
    ("2^3^2", lambda x: 512.0),
    ("1 - 2 - 3*x/4", lambda x: 1 - 2 - 3 * x / 4),
    ("cosh(t)^2 - sinh(t)^2", lambda x: 1.0),
    ("exp(ln(x^2 + 2))", lambda x: x**2 + 2),
    ("(x + 1)^4", lambda x: (x + 1) ** 4),
    ("sin(cos(x))", lambda x: math.sin(math.cos(x))),
    ("x*exp(-x^2/2)", lambda x: x * math.exp(-(x**2) / 2)),
    ("2.5e-1*x + 1.5E1", lambda x: 0.25 * x + 15.0),
]


class TestCorpus:
    def test_corpus_size(self):
        assert len(CORPUS) == 20

    @pytest.mark.parametrize("source,closed", CORPUS, ids=[c[0] for c in CORPUS])
    def test_matches_closed_form(self, source, closed):
        name = "t" if "t" in source and "x" not in source else "x"
        e = parse_expr(source, [name])
        rng = np.random.default_rng(11)
        for x in 0.2 + 1.8 * rng.random(100):
            got = eval_expr(e, env1(float(x), name)).value
            want = closed(float(x))
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


# ---------------------------------------------------------------------------
# round trip and fuzz

SYMS = ["x", "y", "f"]
leaf = st.one_of(
    st.builds(Var, st.sampled_from(SYMS)),
    st.builds(Num, st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False)),
)


def _extend(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(Bin, st.sampled_from("+-*/"), children, children),
        st.builds(Pow, children, st.integers(-4, 6)),
        st.builds(Call, st.sampled_from(sorted(FUNCTIONS)), children),
    )


exprs = st.recursive(leaf, _extend, max_leaves=24)


def depth(e) -> int:
    if isinstance(e, (Var, Num)):
        return 0
    if isinstance(e, Bin):
        return 1 + max(depth(e.left), depth(e.right))
    return 1 + depth(e.base if isinstance(e, Pow) else e.arg)


class TestRoundTrip:
    @settings(max_examples=1000, deadline=None)
    @given(exprs.filter(lambda e: depth(e) <= 6))
    def test_print_parse_identity(self, e):
        assert parse_expr(to_source(e), SYMS) == e

    def test_negative_literal_prints_parenthesized(self):
        src = to_source(Bin("*", Num(-2.0), Var("x")))
        assert src.startswith("(")
        assert parse_expr(src, ["x"]) == Bin("*", Neg(Num(2.0)), Var("x"))


VOCAB = ["x", "y", "1", "2.5", "3e2", "+", "-", "*", "/", "^", "(", ")", "sin", "ln",
         "sqrt", "exp", "foo", ",", ".", "2x", "  ", "^-", "1e", "@", "tanh("]


class TestFuzz:
    def test_random_token_streams(self):
        """Every stream yields an AST or a ParseError, nothing else."""
        rng = np.random.default_rng(2024)
        outcomes = {"ast": 0, "error": 0}
        lengths = rng.integers(1, 14, size=100_000)
        picks = rng.integers(0, len(VOCAB), size=int(lengths.sum()))
        pos = 0
        for k in lengths:
            src = " ".join(VOCAB[i] for i in picks[pos:pos + k])
            pos += k
            try:
                parse_expr(src, ["x", "y"])
                outcomes["ast"] += 1
            except ParseError:
                outcomes["error"] += 1
        assert sum(outcomes.values()) == 100_000
        assert outcomes["ast"] > 0 and outcomes["error"] > 0

    @settings(max_examples=300, deadline=None)
    @given(st.text(max_size=40))
    def test_arbitrary_text(self, s):
        try:
            parse_expr(s, ["x"])
        except ParseError:
            pass

    def test_tokenize_offsets(self):
        toks = tokenize("x + sin(y)")
        assert [t.text for t in toks][:4] == ["x", "+", "sin", "("]
