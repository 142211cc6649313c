from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tmwpgen.answers import (
    AnswerError,
    BoolTextVal,
    DecVal,
    FractionVal,
    IntVal,
    TextVal,
    answers_match,
    format_answer,
    fraction_value,
    normalize_answer_text,
    parse_answer_as,
    parse_rational,
)


def test_fraction_value_reduces_to_lowest_terms():
    assert fraction_value(2, 4) == FractionVal(1, 2)
    assert fraction_value(0, 10) == FractionVal(0, 1)
    assert fraction_value(4, 4) == FractionVal(1, 1)


def test_unreduced_fraction_fails_validation():
    with pytest.raises(AnswerError):
        FractionVal(2, 4).validate()
    with pytest.raises(AnswerError):
        FractionVal(1, 0).validate()


def test_format_answer_canonical_forms():
    assert format_answer(IntVal(4)) == "4"
    assert format_answer(DecVal(Decimal("2.75"), 2)) == "2.75"
    assert format_answer(DecVal(Decimal("5"), 2)) == "5.00"
    assert format_answer(FractionVal(1, 5)) == "1/5"
    assert format_answer(FractionVal(1, 1)) == "1"
    assert format_answer(FractionVal(0, 1)) == "0"
    assert format_answer(TextVal("Erin")) == "Erin"
    assert format_answer(BoolTextVal("yes")) == "yes"


def test_decval_scale_mismatch_rejected():
    with pytest.raises(AnswerError):
        DecVal(Decimal("2.753"), 2).validate()
    DecVal(Decimal("2.75"), 2).validate()


@pytest.mark.parametrize(
    "text,expected",
    [
        ("5", Fraction(5)),
        ("2.75", Fraction(11, 4)),
        ("$2.75", Fraction(11, 4)),
        ("2,750", Fraction(2750)),
        ("2/4", Fraction(1, 2)),
        ("-3.5", Fraction(-7, 2)),
        ("", None),
        ("pencils", None),
        ("1/0", None),
    ],
)
def test_parse_rational(text, expected):
    assert parse_rational(text) == expected


def test_answers_match_numeric_normalization():
    assert answers_match("2.750", DecVal(Decimal("2.75"), 2))
    assert answers_match("$2.75", DecVal(Decimal("2.75"), 2))
    assert answers_match("2/4", FractionVal(1, 2))
    assert not answers_match("2.76", DecVal(Decimal("2.75"), 2))


def test_answers_match_text_normalization():
    assert answers_match("Yes.", BoolTextVal("yes"))
    assert answers_match("  ERIN ", TextVal("Erin"))
    assert not answers_match("no", BoolTextVal("yes"))


def test_parse_answer_as_targets_expected_variant():
    assert parse_answer_as("4", IntVal(0)) == IntVal(4)
    assert parse_answer_as("2.750", DecVal(Decimal("0.00"), 2)) == DecVal(Decimal("2.75"), 2)
    assert parse_answer_as("2/4", FractionVal(1, 3)) == FractionVal(1, 2)
    assert parse_answer_as("Yes.", BoolTextVal("no")) == BoolTextVal("yes")
    # unparseable for the variant falls back to text (rejected downstream)
    assert parse_answer_as("maybe", IntVal(0)) == TextVal("maybe")


@given(st.text(max_size=60))
def test_normalize_idempotent(text):
    once = normalize_answer_text(text)
    if isinstance(once, str):
        assert normalize_answer_text(once) == once
    else:
        assert isinstance(once, Fraction)
