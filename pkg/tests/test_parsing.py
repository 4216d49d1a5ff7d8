from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odetorsion import expr as ex
from odetorsion.parsing import (
    FIXED,
    GENERIC,
    GENERIC_NONZERO,
    CorpusEntry,
    OdeSystem,
    ParamDecl,
    ParseError,
    ValidationError,
    parse_corpus,
    parse_expr,
    to_str,
)

x = ex.var(ex.X)
y = ex.var(ex.Y(1))
dy = ex.var(ex.YDot(1))


class TestParseExpr:
    def test_precedence_unary_minus_and_power(self):
        # -x^2 parses as -(x^2)
        assert parse_expr("-x^2") == ex.neg(ex.pow_(x, 2))

    def test_power_binds_tighter_than_product(self):
        assert parse_expr("2*x^3") == ex.mul(ex.const(2), ex.pow_(x, 3))

    def test_left_assoc_subtraction(self):
        assert parse_expr("1 - 2 - 3") == ex.const(-4)

    def test_division_chain(self):
        e = parse_expr("x/y/dy")
        pt = ex.EvalContext({ex.X: 12, ex.Y(1): 3, ex.YDot(1): 2})
        assert ex.evaluate(e, pt) == 2

    def test_aliases(self):
        assert parse_expr("y") == parse_expr("y1")
        assert parse_expr("dy") == parse_expr("dy1")

    def test_indexed_variables(self):
        e = parse_expr("y2*dy3")
        assert ex.free_vars(e) == {ex.Y(2), ex.YDot(3)}

    def test_imaginary_unit(self):
        assert parse_expr("i^2") == ex.const(-1)

    def test_decimal_is_exact(self):
        assert parse_expr("0.1") == ex.const(Fraction(1, 10))

    def test_exponent_notation(self):
        assert parse_expr("2.5e2") == ex.const(250)

    def test_functions(self):
        e = parse_expr("exp(a*log(y))")
        assert ex.contains_fn(e, ("log",))
        assert ex.Param("a") in ex.free_vars(e)

    def test_conserved_quantity_shape(self):
        e = parse_expr("y - dy^2/(y*(y-1))")
        assert isinstance(e, ex.Sum)
        assert ex.free_vars(e) == {ex.Y(1), ex.YDot(1)}

    def test_negative_exponent(self):
        assert parse_expr("y^-2") == ex.pow_(y, -2)

    @pytest.mark.parametrize(
        "bad", ["x +", "exp x", "(x", "x^y", "x^0", "2 3", "$", "x^1.5"]
    )
    def test_rejects(self, bad):
        with pytest.raises(ParseError):
            parse_expr(bad)

    def test_error_location(self):
        with pytest.raises(ParseError) as err:
            parse_expr("x + * y")
        assert err.value.line == 1
        assert err.value.col == 5
        assert err.value.expected


_texts = st.sampled_from(
    [
        "6*y^2 + x",
        "dy^2/y - dy/x",
        "-(x*dy + exp(a*log(y)))",
        "(1/2)*(1/y + 1/(y - 1) + 1/(y - x))*dy^2",
        "a*(1 - y^2)*dy - y",
        "y - dy^2/(y*(y-1))",
        "sqrt(y^2 - 2*x*y*dy + x^2*dy^2 + dy)",
        "1/(4*y^3)",
        "2*y1 + 3*dy2 - y2*dy1",
        "0.25*x - i*y",
    ]
)


@given(_texts)
@settings(deadline=None)
def test_to_str_round_trips(text):
    e = parse_expr(text)
    assert parse_expr(to_str(e)) == e


class TestOdeSystem:
    def test_index_out_of_range(self):
        with pytest.raises(ValidationError):
            OdeSystem(n=1, rhs=(parse_expr("y2"),))

    def test_undeclared_parameter(self):
        with pytest.raises(ValidationError):
            OdeSystem(n=1, rhs=(parse_expr("a*y"),))

    def test_declared_parameter_ok(self):
        sys = OdeSystem(n=1, rhs=(parse_expr("a*y"),), params=(ParamDecl("a", GENERIC),))
        assert sys.param_map()["a"].policy == GENERIC

    def test_reserved_parameter_name(self):
        with pytest.raises(ValidationError):
            OdeSystem(n=1, rhs=(y,), params=(ParamDecl("dy7", GENERIC),))

    def test_rhs_count_mismatch(self):
        with pytest.raises(ValidationError):
            OdeSystem(n=2, rhs=(y,))

    def test_fixed_policy_needs_value(self):
        with pytest.raises(ValueError):
            ParamDecl("a", FIXED)
        with pytest.raises(ValueError):
            ParamDecl("a", GENERIC, value=3)


CORPUS = """
# comment line

system demo
  n 2
  param a generic
  param b generic-nonzero
  param c = 3/2
  f1 = a*dy2 + c*y1
  f2 = b*y2
  conserved y1 + y2
  expect unspecified
  note just a demo
end
"""


class TestParseCorpus:
    def test_full_block(self):
        (entry,) = parse_corpus(CORPUS)
        assert entry.system.name == "demo"
        assert entry.system.n == 2
        assert entry.expect == "unspecified"
        assert len(entry.conserved) == 1
        assert entry.notes == ("just a demo",)
        policies = {p.name: p.policy for p in entry.system.params}
        assert policies == {"a": GENERIC, "b": GENERIC_NONZERO, "c": FIXED}
        assert entry.system.param_map()["c"].value == Fraction(3, 2)

    def test_transcription_uncertain_flag(self):
        text = CORPUS.replace("note just a demo", "note transcription-uncertain")
        (entry,) = parse_corpus(text)
        assert entry.transcription_uncertain

    def test_missing_rhs(self):
        with pytest.raises(ValidationError, match="missing f2"):
            parse_corpus("system s\n n 2\n f1 = y1\n expect straight\nend")

    def test_rhs_outside_dimension(self):
        with pytest.raises(ValidationError, match="f2"):
            parse_corpus("system s\n n 1\n f1 = y\n f2 = y\n expect straight\nend")

    def test_unclosed_block(self):
        with pytest.raises(ParseError, match="not closed"):
            parse_corpus("system s\n n 1\n f1 = y\n expect straight")

    def test_missing_expect(self):
        with pytest.raises(ValidationError, match="expect"):
            parse_corpus("system s\n n 1\n f1 = y\nend")

    def test_bad_expectation(self):
        with pytest.raises(ParseError):
            parse_corpus("system s\n n 1\n f1 = y\n expect maybe\nend")

    def test_shipped_corpus_parses(self):
        import pathlib

        root = pathlib.Path(__file__).resolve().parent.parent / "corpus"
        total = 0
        for name in ("table1.straight", "table2.notstraight", "table2.degenerate", "duals"):
            entries = parse_corpus((root / name).read_text())
            assert entries
            total += len(entries)
        assert total >= 38
