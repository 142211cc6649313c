"""Answer oracles and step-by-step solution rendering for the question
families: stem-and-leaf counting (types 1-11), price-list trading (12-17),
two-row comparison (18-19), table probability (20-21), and basic statistics
(22-25).

Every oracle is pure and exact (ints, Decimal, Fraction). `instantiate`
cross-checks each computed answer against `brute_force_reference`, a
deliberately naive second path over the rendered table.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .answers import (
    AnswerValue,
    DecVal,
    FractionVal,
    IntVal,
    TextVal,
    format_answer,
    fraction_value,
    parse_rational,
)
from .schema import TableSpec


class GeneratorError(ValueError):
    """Raised when an oracle precondition is violated."""


class EmptyPlot(GeneratorError):
    pass


class LengthMismatch(GeneratorError):
    pass


class NegativeRemainder(GeneratorError):
    pass


class TieValues(GeneratorError):
    pass


class MissingRow(GeneratorError):
    pass


class ZeroTotal(GeneratorError):
    pass


class MissingCategory(GeneratorError):
    pass


class AmbiguousMode(GeneratorError):
    pass


class IndivisibleValues(GeneratorError):
    pass


FAMILY_GROUPS = ("stem_leaf", "trading", "comparison", "probability", "stats")

STEM_LEAF_PREDICATES = (
    "count_value",
    "range_cc",  # at least start, at most end
    "range_co",  # at least start, fewer than end
    "range_oo",  # greater than start, fewer than end
    "range_oc",  # greater than start, at most end
    "below_strict",
    "below_weak",
    "above_weak",
    "above_strict",
    "min",
    "max",
)


@dataclass(frozen=True)
class GeneratorFamily:
    """Tagged family descriptor; exactly one parameter set per group."""

    group: str
    predicate: Optional[str] = None  # stem_leaf
    mode: Optional[str] = None  # trading: total/remaining; probability: joint_cell/category_fraction
    item_count: Optional[int] = None  # trading
    direction: Optional[str] = None  # comparison: more/less
    stat: Optional[str] = None  # stats: mean/median/mode/average

    def validate(self) -> None:
        if self.group == "stem_leaf":
            if self.predicate not in STEM_LEAF_PREDICATES:
                raise GeneratorError(f"unknown stem-leaf predicate {self.predicate!r}")
        elif self.group == "trading":
            if self.mode not in ("total", "remaining"):
                raise GeneratorError(f"unknown trading mode {self.mode!r}")
            if self.item_count not in (1, 2, 3):
                raise GeneratorError(f"trading item_count must be 1..3, got {self.item_count!r}")
        elif self.group == "comparison":
            if self.direction not in ("more", "less"):
                raise GeneratorError(f"unknown comparison direction {self.direction!r}")
        elif self.group == "probability":
            if self.mode not in ("joint_cell", "category_fraction"):
                raise GeneratorError(f"unknown probability mode {self.mode!r}")
        elif self.group == "stats":
            if self.stat not in ("mean", "median", "mode", "average"):
                raise GeneratorError(f"unknown stat {self.stat!r}")
        else:
            raise GeneratorError(f"unknown family group {self.group!r}")

    def to_dict(self) -> dict:
        out = {"group": self.group}
        for key in ("predicate", "mode", "item_count", "direction", "stat"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @staticmethod
    def from_dict(data: Mapping) -> "GeneratorFamily":
        family = GeneratorFamily(
            group=data.get("group", ""),
            predicate=data.get("predicate"),
            mode=data.get("mode"),
            item_count=data.get("item_count"),
            direction=data.get("direction"),
            stat=data.get("stat"),
        )
        family.validate()
        return family


# ---------------------------------------------------------------- stem-leaf


@dataclass(frozen=True)
class StemLeafPlot:
    stems: tuple[int, ...]
    leaves: tuple[tuple[int, ...], ...]

    def validate(self) -> None:
        if len(self.stems) != len(self.leaves):
            raise GeneratorError("stems and leaf rows must align")
        if list(self.stems) != sorted(set(self.stems)) or any(s < 0 for s in self.stems):
            raise GeneratorError("stems must be strictly increasing non-negative integers")
        for row in self.leaves:
            if any(not 0 <= d <= 9 for d in row):
                raise GeneratorError("leaves must be digits 0-9")
            if list(row) != sorted(row):
                raise GeneratorError("leaf rows must be sorted non-decreasing")


def stem_leaf_values(plot: StemLeafPlot) -> list[int]:
    """Multiset of 10*stem + leaf, order-preserving within stems."""
    return [10 * stem + leaf for stem, row in zip(plot.stems, plot.leaves) for leaf in row]


@dataclass(frozen=True)
class StemLeafPredicate:
    kind: str
    value: Optional[int] = None
    start: Optional[int] = None
    end: Optional[int] = None

    def matches(self, x: int) -> bool:
        if self.kind == "count_value":
            return x == self.value
        if self.kind == "range_cc":
            return self.start <= x <= self.end
        if self.kind == "range_co":
            return self.start <= x < self.end
        if self.kind == "range_oo":
            return self.start < x < self.end
        if self.kind == "range_oc":
            return self.start < x <= self.end
        if self.kind == "below_strict":
            return x < self.value
        if self.kind == "below_weak":
            return x <= self.value
        if self.kind == "above_weak":
            return x >= self.value
        if self.kind == "above_strict":
            return x > self.value
        raise GeneratorError(f"unknown predicate kind {self.kind!r}")


def count_matching(plot: StemLeafPlot, pred: StemLeafPredicate) -> int:
    if pred.kind in ("range_cc", "range_co", "range_oo", "range_oc") and not pred.start < pred.end:
        raise GeneratorError("range predicates require start < end")
    return sum(1 for x in stem_leaf_values(plot) if pred.matches(x))


def stem_leaf_extreme(plot: StemLeafPlot, which: str) -> int:
    values = stem_leaf_values(plot)
    if not values:
        raise EmptyPlot("plot has no leaves")
    if which == "min":
        return min(values)
    if which == "max":
        return max(values)
    raise GeneratorError(f"which must be min or max, got {which!r}")


# ------------------------------------------------------------------ trading


def trading_total(prices: Sequence[tuple[str, Decimal]], quantities: Sequence[int]) -> Decimal:
    """Sum of price * quantity, exact at scale 2."""
    if len(prices) != len(quantities):
        raise LengthMismatch(f"{len(prices)} prices vs {len(quantities)} quantities")
    if not 1 <= len(prices) <= 3:
        raise LengthMismatch("trading supports 1 to 3 item kinds")
    total = Decimal("0.00")
    for (_, price), qty in zip(prices, quantities):
        if qty < 1:
            raise GeneratorError(f"quantities must be positive, got {qty}")
        total += price * qty
    return total.quantize(Decimal("0.01"))


def trading_remaining(budget: Decimal, prices: Sequence[tuple[str, Decimal]], quantities: Sequence[int]) -> Decimal:
    total = trading_total(prices, quantities)
    remaining = (budget - total).quantize(Decimal("0.01"))
    if remaining < 0:
        raise NegativeRemainder(f"budget {budget} < total {total}")
    return remaining


# --------------------------------------------------------------- comparison


def _numeric_cell(table: TableSpec, row_label: str, column: str) -> Fraction:
    if column not in table.columns:
        raise MissingRow(f"column {column!r} not in table")
    col_idx = table.columns.index(column)
    for row in table.rows:
        if row[0] == row_label:
            value = parse_rational(row[col_idx])
            if value is None:
                raise MissingRow(f"cell for {row_label!r} / {column!r} is not numeric")
            return value
    raise MissingRow(f"row {row_label!r} not in table")


def compare_rows(table: TableSpec, column: str, row1: str, row2: str, direction: str) -> str:
    """Label of the row with the greater (more) or smaller (less) cell."""
    v1 = _numeric_cell(table, row1, column)
    v2 = _numeric_cell(table, row2, column)
    if v1 == v2:
        raise TieValues(f"{row1!r} and {row2!r} both have {v1}")
    if direction == "more":
        return row1 if v1 > v2 else row2
    if direction == "less":
        return row1 if v1 < v2 else row2
    raise GeneratorError(f"direction must be more or less, got {direction!r}")


# -------------------------------------------------------------- probability


def _count_cells(table: TableSpec) -> list[list[int]]:
    grid = []
    for row in table.rows:
        counts = []
        for cell in row[1:]:
            if not cell.isdigit():
                raise GeneratorError(f"count cell {cell!r} is not a non-negative integer")
            counts.append(int(cell))
        grid.append(counts)
    return grid


def joint_probability(table: TableSpec, row: str, col: str) -> FractionVal:
    """P(row and col) in a two-way count table, in lowest terms."""
    if col not in table.columns[1:]:
        raise MissingRow(f"column {col!r} not in table")
    col_idx = table.columns.index(col) - 1
    grid = _count_cells(table)
    total = sum(sum(r) for r in grid)
    if total == 0:
        raise ZeroTotal("grand total is zero")
    for label_row, counts in zip(table.rows, grid):
        if label_row[0] == row:
            return fraction_value(counts[col_idx], total)
    raise MissingRow(f"row {row!r} not in table")


def category_fraction(table: TableSpec, category: str) -> FractionVal:
    """freq(category) / total frequency, in lowest terms."""
    grid = _count_cells(table)
    total = sum(sum(r) for r in grid)
    if total == 0:
        raise ZeroTotal("total frequency is zero")
    for label_row, counts in zip(table.rows, grid):
        if label_row[0] == category:
            return fraction_value(counts[0], total)
    raise MissingCategory(f"category {category!r} not in table")


# -------------------------------------------------------------------- stats


def _exact_quotient(num: int, den: int) -> AnswerValue:
    frac = Fraction(num, den)
    if frac.denominator == 1:
        return IntVal(int(frac))
    for scale in (1, 2):
        scaled = frac * 10**scale
        if scaled.denominator == 1:
            return DecVal(Decimal(int(scaled)).scaleb(-scale), scale)
    raise IndivisibleValues(f"{num}/{den} has no exact representation at scale <= 2")


def stat_value(values: Sequence[int], stat: str) -> AnswerValue:
    if not values:
        raise GeneratorError("values must be non-empty")
    if stat in ("mean", "average"):
        return _exact_quotient(sum(values), len(values))
    if stat == "median":
        ordered = sorted(values)
        mid = len(ordered) // 2
        if len(ordered) % 2 == 1:
            return IntVal(ordered[mid])
        return _exact_quotient(ordered[mid - 1] + ordered[mid], 2)
    if stat == "mode":
        counts = Counter(values)
        top = max(counts.values())
        modes = [v for v, c in counts.items() if c == top]
        if len(modes) != 1:
            raise AmbiguousMode(f"values {sorted(modes)} all appear {top} times")
        return IntVal(modes[0])
    raise GeneratorError(f"unknown stat {stat!r}")


# ---------------------------------------------------- table-driven plumbing


def plot_from_table(table: TableSpec) -> StemLeafPlot:
    stems = tuple(int(row[0]) for row in table.rows)
    leaves = tuple(tuple(int(d) for d in row[1].split()) for row in table.rows)
    plot = StemLeafPlot(stems, leaves)
    plot.validate()
    return plot


def stats_values_from_table(table: TableSpec) -> list[int]:
    values = []
    for row in table.rows:
        cell = row[-1]
        if not cell.lstrip("-").isdigit():
            raise GeneratorError(f"stats cell {cell!r} is not an integer")
        values.append(int(cell))
    return values


def prices_from_table(table: TableSpec, items: Sequence[str]) -> list[tuple[str, Decimal]]:
    prices = []
    for item in items:
        for row in table.rows:
            if row[0] == item:
                prices.append((item, Decimal(row[1].lstrip("$"))))
                break
        else:
            raise MissingRow(f"item {item!r} not in price list")
    return prices


def _predicate_from_binding(family: GeneratorFamily, params: Mapping) -> StemLeafPredicate:
    kind = family.predicate
    if kind == "count_value":
        return StemLeafPredicate(kind, value=int(params["count_value"]))
    if kind in ("range_cc", "range_co", "range_oo", "range_oc"):
        return StemLeafPredicate(kind, start=int(params["range_start"]), end=int(params["range_end"]))
    if kind in ("below_strict", "below_weak", "above_weak", "above_strict"):
        return StemLeafPredicate(kind, value=int(params["threshold"]))
    raise GeneratorError(f"predicate {kind!r} takes no parameters")


def _trading_items(family: GeneratorFamily, params: Mapping) -> tuple[list[str], list[int]]:
    if family.item_count == 1:
        names = [str(params["products"])]
        quantities = [int(params["number"])]
    else:
        names = [str(params[f"product{i}s"]) for i in range(1, family.item_count + 1)]
        quantities = [int(params[f"number{i}"]) for i in range(1, family.item_count + 1)]
    return names, quantities


def family_oracle(family: GeneratorFamily, params: Mapping, table: TableSpec) -> AnswerValue:
    """Compute the answer for `family` from the rendered table plus the
    question parameters (thresholds, item names, labels) in `params`.

    Parameter keys are canonical: count_value/range_start/range_end/threshold
    (stem-leaf), number(s)/product(s)/budget (trading), column/row1/row2
    (comparison), row/col/category (probability).
    """
    family.validate()
    if family.group == "stem_leaf":
        plot = plot_from_table(table)
        if family.predicate in ("min", "max"):
            return IntVal(stem_leaf_extreme(plot, family.predicate))
        return IntVal(count_matching(plot, _predicate_from_binding(family, params)))
    if family.group == "trading":
        names, quantities = _trading_items(family, params)
        prices = prices_from_table(table, names)
        if family.mode == "total":
            return DecVal(trading_total(prices, quantities), 2)
        return DecVal(trading_remaining(Decimal(str(params["budget"])), prices, quantities), 2)
    if family.group == "comparison":
        label = compare_rows(
            table, str(params["column"]), str(params["row1"]), str(params["row2"]), family.direction
        )
        return TextVal(label)
    if family.group == "probability":
        if family.mode == "joint_cell":
            return joint_probability(table, str(params["row"]), str(params["col"]))
        return category_fraction(table, str(params["category"]))
    if family.group == "stats":
        return stat_value(stats_values_from_table(table), family.stat)
    raise GeneratorError(f"unknown family group {family.group!r}")


def brute_force_reference(family: GeneratorFamily, params: Mapping, table: TableSpec) -> AnswerValue:
    """Naive second computation path used as an internal cross-check.

    Enumerates the rendered table cell by cell; trading runs in integer
    cents; stats scan sorted copies. Kept deliberately separate from the
    primary oracles.
    """
    family.validate()
    if family.group == "stem_leaf":
        values = []
        for row in table.rows:
            for digit in row[1].split():
                values.append(int(row[0]) * 10 + int(digit))
        if family.predicate == "min":
            if not values:
                raise EmptyPlot("plot has no leaves")
            best = values[0]
            for x in values[1:]:
                if x < best:
                    best = x
            return IntVal(best)
        if family.predicate == "max":
            if not values:
                raise EmptyPlot("plot has no leaves")
            best = values[0]
            for x in values[1:]:
                if x > best:
                    best = x
            return IntVal(best)
        pred = _predicate_from_binding(family, params)
        count = 0
        for x in values:
            if pred.matches(x):
                count += 1
        return IntVal(count)
    if family.group == "trading":
        names, quantities = _trading_items(family, params)
        cents_by_item = {}
        for row in table.rows:
            price = row[1].lstrip("$")
            whole, frac = price.split(".")
            cents_by_item[row[0]] = int(whole) * 100 + int(frac)
        total_cents = 0
        for name, qty in zip(names, quantities):
            if name not in cents_by_item:
                raise MissingRow(f"item {name!r} not in price list")
            total_cents += cents_by_item[name] * qty
        if family.mode == "remaining":
            budget = str(params["budget"])
            whole, _, frac = budget.partition(".")
            budget_cents = int(whole) * 100 + int((frac + "00")[:2])
            if budget_cents < total_cents:
                raise NegativeRemainder(f"budget {budget} below total")
            total_cents = budget_cents - total_cents
        return DecVal(Decimal(total_cents).scaleb(-2), 2)
    if family.group == "comparison":
        cells = {}
        col_idx = list(table.columns).index(str(params["column"]))
        for row in table.rows:
            cells[row[0]] = parse_rational(row[col_idx])
        v1, v2 = cells[str(params["row1"])], cells[str(params["row2"])]
        if v1 == v2:
            raise TieValues("equal cells")
        if (v1 > v2) == (family.direction == "more"):
            return TextVal(str(params["row1"]))
        return TextVal(str(params["row2"]))
    if family.group == "probability":
        total = 0
        favorable = 0
        if family.mode == "joint_cell":
            col_idx = list(table.columns).index(str(params["col"]))
            for row in table.rows:
                for i, cell in enumerate(row[1:], start=1):
                    total += int(cell)
                    if i == col_idx and row[0] == str(params["row"]):
                        favorable += int(cell)
        else:
            for row in table.rows:
                total += int(row[1])
                if row[0] == str(params["category"]):
                    favorable += int(row[1])
            if str(params["category"]) not in [r[0] for r in table.rows]:
                raise MissingCategory(str(params["category"]))
        if total == 0:
            raise ZeroTotal("zero total")
        return fraction_value(favorable, total)
    if family.group == "stats":
        values = [int(row[-1]) for row in table.rows]
        n = len(values)
        if family.stat in ("mean", "average"):
            return _exact_quotient(sum(values), n)
        if family.stat == "median":
            ordered = sorted(values)
            if n % 2 == 1:
                return IntVal(ordered[n // 2])
            return _exact_quotient(ordered[n // 2 - 1] + ordered[n // 2], 2)
        counts: dict[int, int] = {}
        for x in values:
            counts[x] = counts.get(x, 0) + 1
        best_count = max(counts.values())
        modes = [v for v, c in counts.items() if c == best_count]
        if len(modes) != 1:
            raise AmbiguousMode(f"modes {sorted(modes)}")
        return IntVal(modes[0])
    raise GeneratorError(f"unknown family group {family.group!r}")


# ------------------------------------------------------- solution rendering

# Derived slots each family may reference in solution step patterns, beyond
# the template's own placeholders.
DERIVED_SLOTS = {
    "stem_leaf": {"values_list", "matching_list", "match_count", "n_values", "answer"},
    "trading": {"purchase_expr", "total", "answer"},
    "comparison": {"value1", "value2", "answer"},
    "probability": {"favorable", "total", "answer"},
    "stats": {"values_csv", "sorted_csv", "n_values", "sum", "sum_expr", "answer"},
}


def _fmt_money(amount: Decimal) -> str:
    return f"${amount.quantize(Decimal('0.01'))}"


def derived_slots(family: GeneratorFamily, params: Mapping, table: TableSpec, answer: AnswerValue) -> dict:
    """Computed values available to solution step patterns."""
    slots: dict[str, str] = {"answer": format_answer(answer)}
    if family.group == "stem_leaf":
        values = stem_leaf_values(plot_from_table(table))
        slots["values_list"] = ", ".join(str(v) for v in values)
        slots["n_values"] = str(len(values))
        if family.predicate not in ("min", "max", "count_value"):
            pred = _predicate_from_binding(family, params)
            matching = [v for v in values if pred.matches(v)]
            slots["matching_list"] = ", ".join(str(v) for v in matching) if matching else "none"
            slots["match_count"] = str(len(matching))
        elif family.predicate == "count_value":
            target = int(params["count_value"])
            slots["match_count"] = str(sum(1 for v in values if v == target))
    elif family.group == "trading":
        names, quantities = _trading_items(family, params)
        prices = prices_from_table(table, names)
        terms = [f"{_fmt_money(price)} * {qty}" for (_, price), qty in zip(prices, quantities)]
        slots["purchase_expr"] = " + ".join(terms)
        slots["total"] = _fmt_money(trading_total(prices, quantities))
    elif family.group == "comparison":
        slots["value1"] = str(_numeric_cell(table, str(params["row1"]), str(params["column"])))
        slots["value2"] = str(_numeric_cell(table, str(params["row2"]), str(params["column"])))
    elif family.group == "probability":
        grid = _count_cells(table)
        slots["total"] = str(sum(sum(r) for r in grid))
        if family.mode == "joint_cell":
            col_idx = list(table.columns).index(str(params["col"])) - 1
            for label_row, counts in zip(table.rows, grid):
                if label_row[0] == str(params["row"]):
                    slots["favorable"] = str(counts[col_idx])
        else:
            for label_row, counts in zip(table.rows, grid):
                if label_row[0] == str(params["category"]):
                    slots["favorable"] = str(counts[0])
    elif family.group == "stats":
        values = stats_values_from_table(table)
        slots["values_csv"] = ", ".join(str(v) for v in values)
        slots["sorted_csv"] = ", ".join(str(v) for v in sorted(values))
        slots["n_values"] = str(len(values))
        slots["sum"] = str(sum(values))
        slots["sum_expr"] = " + ".join(str(v) for v in values)
    return slots


def render_solution(
    family: GeneratorFamily,
    params: Mapping,
    table: TableSpec,
    steps: Sequence[str],
    answer: AnswerValue,
    substitute,
) -> str:
    """Numbered steps plus the single terminal answer line.

    `substitute` is the template engine's pattern substitution (it knows how
    to resolve {placeholder} and {placeholder.attr} references); derived
    family slots are layered on top of the binding.
    """
    if len(steps) < 3:
        raise GeneratorError("solutions need at least 3 steps")
    extra = derived_slots(family, params, table, answer)
    lines = [f"({i}) {substitute(step, extra)}" for i, step in enumerate(steps, start=1)]
    lines.append(f"The answer is {format_answer(answer)}.")
    return "\n".join(lines)
