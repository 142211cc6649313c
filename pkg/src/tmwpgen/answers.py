"""Answer values: the typed answers a sample can carry, their canonical text
forms, and the normalization rules shared by the quality filters and the
evaluator.

Numeric answers are kept exact end to end: integers, `decimal.Decimal` with a
declared scale, and reduced fractions. Comparison never goes through binary
floats.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Optional, Union


class AnswerError(ValueError):
    """Raised for malformed or invariant-violating answer values."""


@dataclass(frozen=True)
class IntVal:
    value: int

    def validate(self) -> None:
        if not isinstance(self.value, int) or isinstance(self.value, bool):
            raise AnswerError(f"IntVal requires an int, got {self.value!r}")


@dataclass(frozen=True)
class DecVal:
    """Exact decimal with a declared scale (digits after the point)."""

    value: Decimal
    scale: int = 2

    def validate(self) -> None:
        if not isinstance(self.value, Decimal):
            raise AnswerError(f"DecVal requires a Decimal, got {self.value!r}")
        if self.scale < 0:
            raise AnswerError(f"DecVal scale must be >= 0, got {self.scale}")
        quantum = Decimal(1).scaleb(-self.scale)
        if self.value != self.value.quantize(quantum):
            raise AnswerError(
                f"DecVal {self.value} does not fit declared scale {self.scale}"
            )


@dataclass(frozen=True)
class TextVal:
    text: str

    def validate(self) -> None:
        if not isinstance(self.text, str) or not self.text.strip():
            raise AnswerError("TextVal requires non-empty text")


@dataclass(frozen=True)
class BoolTextVal:
    """A yes/no style answer; `pair` is the admissible label pair."""

    text: str
    pair: tuple[str, str] = ("yes", "no")

    def validate(self) -> None:
        if self.text not in self.pair:
            raise AnswerError(
                f"BoolTextVal text {self.text!r} not in pair {self.pair!r}"
            )


@dataclass(frozen=True)
class FractionVal:
    numerator: int
    denominator: int

    def validate(self) -> None:
        if self.denominator < 1:
            raise AnswerError(
                f"FractionVal denominator must be >= 1, got {self.denominator}"
            )
        if self.numerator < 0:
            raise AnswerError(
                f"FractionVal numerator must be >= 0, got {self.numerator}"
            )
        if math.gcd(self.numerator, self.denominator) != 1:
            raise AnswerError(
                f"FractionVal {self.numerator}/{self.denominator} not in lowest terms"
            )


AnswerValue = Union[IntVal, DecVal, TextVal, BoolTextVal, FractionVal]


def fraction_value(numerator: int, denominator: int) -> FractionVal:
    """Build a FractionVal reduced to lowest terms (0/x canonicalizes to 0/1)."""
    if denominator == 0:
        raise AnswerError("fraction denominator must be non-zero")
    frac = Fraction(numerator, denominator)
    if frac < 0:
        raise AnswerError("fraction answers must be non-negative")
    return FractionVal(frac.numerator, frac.denominator)


def format_answer(value: AnswerValue) -> str:
    """Canonical machine-comparable text for the `answer` field.

    Currency decimals are rendered bare ("2.75", no "$"); fractions render as
    "num/den" with denominator 1 collapsing to the bare integer.
    """
    if isinstance(value, IntVal):
        return str(value.value)
    if isinstance(value, DecVal):
        quantum = Decimal(1).scaleb(-value.scale)
        return str(value.value.quantize(quantum))
    if isinstance(value, FractionVal):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (TextVal, BoolTextVal)):
        return value.text
    raise AnswerError(f"unknown answer value {value!r}")


_NUMBER_RE = re.compile(r"^[+-]?(\d[\d,]*)(\.\d+)?$")
_FRACTION_RE = re.compile(r"^([+-]?\d[\d,]*)\s*/\s*(\d[\d,]*)$")


def parse_rational(text: str) -> Optional[Fraction]:
    """Parse "X", "X.YY", "$X.YY", "1,234.5", or "p/q" into an exact Fraction.

    Returns None when the text is not one of those numeric forms.
    """
    s = text.strip().strip("$").strip()
    if not s:
        return None
    m = _FRACTION_RE.match(s)
    if m:
        den = int(m.group(2).replace(",", ""))
        if den == 0:
            return None
        return Fraction(int(m.group(1).replace(",", "")), den)
    m = _NUMBER_RE.match(s)
    if not m:
        return None
    try:
        return Fraction(Decimal(s.replace(",", "")))
    except (InvalidOperation, ValueError):
        return None


NormalizedAnswer = Union[Fraction, str]


def normalize_answer_text(raw: str) -> NormalizedAnswer:
    """Shared normalization: strip whitespace, currency symbols, and a
    terminal period; casefold; numeric forms become exact Fractions."""
    s = raw.strip()
    if s.endswith("."):
        s = s[:-1].rstrip()
    rational = parse_rational(s)
    if rational is not None:
        return rational
    return s.casefold()


def answer_to_rational(value: AnswerValue) -> Optional[Fraction]:
    if isinstance(value, IntVal):
        return Fraction(value.value)
    if isinstance(value, DecVal):
        return Fraction(value.value)
    if isinstance(value, FractionVal):
        return Fraction(value.numerator, value.denominator)
    return None


def normalized_form(value: AnswerValue) -> NormalizedAnswer:
    rational = answer_to_rational(value)
    if rational is not None:
        return rational
    return normalize_answer_text(format_answer(value))


def answers_match(raw: str, expected: AnswerValue) -> bool:
    """True iff raw text denotes the same answer as `expected` after
    normalization (exact rational comparison for numeric forms)."""
    return normalize_answer_text(raw) == normalized_form(expected)


def parse_answer_as(raw: str, like: AnswerValue) -> AnswerValue:
    """Parse raw text into the same variant as `like` when possible.

    Falls back to TextVal when the text does not fit the variant; the
    consistency check then rejects the mismatch downstream.
    """
    rational = parse_rational(raw.strip().rstrip("."))
    if isinstance(like, IntVal) and rational is not None and rational.denominator == 1:
        return IntVal(int(rational))
    if isinstance(like, DecVal) and rational is not None:
        dec = Decimal(rational.numerator) / Decimal(rational.denominator)
        quantum = Decimal(1).scaleb(-like.scale)
        quantized = dec.quantize(quantum)
        if Fraction(quantized) == rational:
            return DecVal(quantized, like.scale)
    if isinstance(like, FractionVal) and rational is not None and rational >= 0:
        return FractionVal(rational.numerator, rational.denominator)
    if isinstance(like, BoolTextVal):
        cleaned = raw.strip().rstrip(".").strip().casefold()
        for label in like.pair:
            if cleaned == label.casefold():
                return BoolTextVal(label, like.pair)
    if isinstance(like, TextVal):
        cleaned = raw.strip()
        if cleaned.endswith("."):
            cleaned = cleaned[:-1].rstrip()
        if cleaned:
            return TextVal(cleaned)
    return TextVal(raw.strip() or raw)
