import random
from decimal import Decimal
from fractions import Fraction

import pytest

from tmwpgen.answers import DecVal, FractionVal, IntVal, TextVal, format_answer
from tmwpgen.generators import (
    AmbiguousMode,
    EmptyPlot,
    GeneratorFamily,
    LengthMismatch,
    MissingCategory,
    MissingRow,
    NegativeRemainder,
    StemLeafPlot,
    StemLeafPredicate,
    TieValues,
    ZeroTotal,
    brute_force_reference,
    category_fraction,
    compare_rows,
    count_matching,
    family_oracle,
    joint_probability,
    stat_value,
    stem_leaf_extreme,
    stem_leaf_values,
    trading_remaining,
    trading_total,
)
from tmwpgen.schema import make_table

from reference import ref_count, ref_mean, ref_median, ref_mode, ref_plot_values

PLOT = StemLeafPlot(stems=(6, 7), leaves=((4, 6, 6), (0, 2)))


def test_stem_leaf_values_enumeration():
    assert stem_leaf_values(PLOT) == [64, 66, 66, 70, 72]
    assert stem_leaf_values(StemLeafPlot((1, 2), ((), ()))) == []
    assert stem_leaf_values(StemLeafPlot((0,), ((3,),))) == [3]


def test_count_matching_boundary_semantics():
    # computed by brute force; >= includes both 66s (the spec prose's "3"
    # miscounts its own example plot, see decisions ledger)
    assert ref_count([64, 66, 66, 70, 72], "above_weak", 66) == 4
    assert count_matching(PLOT, StemLeafPredicate("above_weak", value=66)) == 4
    assert count_matching(PLOT, StemLeafPredicate("above_strict", value=66)) == 2
    assert count_matching(PLOT, StemLeafPredicate("count_value", value=99)) == 0
    assert count_matching(PLOT, StemLeafPredicate("range_cc", start=1, end=99)) == 5


def test_count_matching_all_predicate_kinds():
    values = stem_leaf_values(PLOT)
    cases = [
        ("count_value", {"value": 66}, 2),
        ("range_cc", {"start": 66, "end": 70}, 3),
        ("range_co", {"start": 66, "end": 70}, 2),
        ("range_oo", {"start": 64, "end": 72}, 3),
        ("range_oc", {"start": 64, "end": 72}, 4),
        ("below_strict", {"value": 66}, 1),
        ("below_weak", {"value": 66}, 3),
    ]
    for kind, params, expected in cases:
        a = params.get("value", params.get("start"))
        b = params.get("end")
        assert ref_count(values, kind, a, b) == expected, kind
        assert count_matching(PLOT, StemLeafPredicate(kind, **params)) == expected, kind


def test_boundary_identities_random_plots():
    rng = random.Random(11)
    for _ in range(300):
        stems = tuple(sorted(rng.sample(range(1, 10), rng.randint(2, 5))))
        leaves = tuple(
            tuple(sorted(rng.randint(0, 9) for _ in range(rng.randint(0, 6)))) for _ in stems
        )
        plot = StemLeafPlot(stems, leaves)
        values = stem_leaf_values(plot)
        t = rng.randint(10, 99)
        weak_above = count_matching(plot, StemLeafPredicate("above_weak", value=t))
        strict_above = count_matching(plot, StemLeafPredicate("above_strict", value=t))
        assert weak_above - strict_above == values.count(t)
        weak_below = count_matching(plot, StemLeafPredicate("below_weak", value=t))
        strict_below = count_matching(plot, StemLeafPredicate("below_strict", value=t))
        assert weak_below - strict_below == values.count(t)
        a, b = sorted(rng.sample(range(10, 100), 2))
        cc = count_matching(plot, StemLeafPredicate("range_cc", start=a, end=b))
        co = count_matching(plot, StemLeafPredicate("range_co", start=a, end=b))
        oo = count_matching(plot, StemLeafPredicate("range_oo", start=a, end=b))
        oc = count_matching(plot, StemLeafPredicate("range_oc", start=a, end=b))
        assert cc - co == values.count(b)
        assert oc - oo == values.count(b)
        assert cc - oc == values.count(a)
        assert co - oo == values.count(a)


def test_stem_leaf_extremes():
    assert stem_leaf_extreme(PLOT, "min") == 64
    assert stem_leaf_extreme(PLOT, "max") == 72
    singleton = StemLeafPlot((0,), ((3,),))
    assert stem_leaf_extreme(singleton, "min") == stem_leaf_extreme(singleton, "max") == 3
    with pytest.raises(EmptyPlot):
        stem_leaf_extreme(StemLeafPlot((1,), ((),)), "min")


def test_trading_total():
    assert trading_total([("pen", Decimal("1.25"))], [1]) == Decimal("1.25")
    assert trading_total(
        [("pencil", Decimal("0.50")), ("pen", Decimal("1.25"))], [2, 1]
    ) == Decimal("2.25")
    with pytest.raises(LengthMismatch):
        trading_total([("pen", Decimal("1.25"))], [1, 2])


def test_trading_remaining():
    prices = [("pencil", Decimal("0.50")), ("pen", Decimal("1.25"))]
    assert trading_remaining(Decimal("5.00"), prices, [2, 1]) == Decimal("2.75")
    assert trading_remaining(Decimal("2.25"), prices, [2, 1]) == Decimal("0.00")
    with pytest.raises(NegativeRemainder):
        trading_remaining(Decimal("2.00"), prices, [2, 1])


COMPARE_TABLE = make_table(["Name", "Points"], [["Ava", "7"], ["Ben", "3"]])


def test_compare_rows():
    assert compare_rows(COMPARE_TABLE, "Points", "Ava", "Ben", "more") == "Ava"
    assert compare_rows(COMPARE_TABLE, "Points", "Ava", "Ben", "less") == "Ben"
    tie = make_table(["Name", "Points"], [["Ava", "7"], ["Ben", "7"]])
    with pytest.raises(TieValues):
        compare_rows(tie, "Points", "Ava", "Ben", "more")
    with pytest.raises(MissingRow):
        compare_rows(COMPARE_TABLE, "Points", "Ava", "Cy", "more")


def test_joint_probability():
    whole = make_table(["", "A"], [["x", "4"]], "two-way-count")
    assert joint_probability(whole, "x", "A") == FractionVal(1, 1)
    grid = make_table(["", "A", "B"], [["x", "1", "2"], ["y", "3", "4"]], "two-way-count")
    assert joint_probability(grid, "x", "B") == FractionVal(1, 5)
    zeros = make_table(["", "A", "B"], [["x", "0", "2"], ["y", "3", "5"]], "two-way-count")
    assert joint_probability(zeros, "x", "A") == FractionVal(0, 1)
    empty = make_table(["", "A"], [["x", "0"]], "two-way-count")
    with pytest.raises(ZeroTotal):
        joint_probability(empty, "x", "A")


def test_category_fraction():
    table = make_table(["Color", "Frequency"], [["red", "2"], ["blue", "2"]], "frequency")
    assert category_fraction(table, "red") == FractionVal(1, 2)
    single = make_table(["Color", "Frequency"], [["red", "3"]], "frequency")
    assert category_fraction(single, "red") == FractionVal(1, 1)
    with pytest.raises(MissingCategory):
        category_fraction(table, "green")


def test_stat_value():
    assert stat_value([5, 5, 5], "mean") == IntVal(5)
    assert stat_value([1, 3, 3, 7], "median") == IntVal(3)
    assert stat_value([1, 3, 3, 7], "mode") == IntVal(3)
    assert stat_value([1, 2], "median") == DecVal(Decimal("1.5"), 1)
    assert stat_value([2, 3], "mean") == DecVal(Decimal("2.5"), 1)
    with pytest.raises(AmbiguousMode):
        stat_value([1, 1, 2, 2], "mode")


def _random_stem_leaf_case(rng):
    stems = tuple(sorted(rng.sample(range(1, 10), rng.randint(2, 5))))
    leaves = tuple(
        tuple(sorted(rng.randint(0, 9) for _ in range(rng.randint(1, 6)))) for _ in stems
    )
    table = make_table(
        ["Stem", "Leaf"],
        [[str(s), " ".join(str(d) for d in row)] for s, row in zip(stems, leaves)],
        "stem-leaf",
    )
    predicate = rng.choice(
        ["count_value", "range_cc", "range_co", "range_oo", "range_oc",
         "below_strict", "below_weak", "above_weak", "above_strict", "min", "max"]
    )
    params = {}
    if predicate == "count_value":
        params["count_value"] = rng.randint(10, 99)
    elif predicate.startswith("range"):
        a, b = sorted(rng.sample(range(10, 100), 2))
        params.update(range_start=a, range_end=b)
    elif predicate not in ("min", "max"):
        params["threshold"] = rng.randint(10, 99)
    family = GeneratorFamily("stem_leaf", predicate=predicate)
    expected = None
    values = ref_plot_values(stems, leaves)
    if predicate == "min":
        expected = IntVal(min(values))
    elif predicate == "max":
        expected = IntVal(max(values))
    elif predicate == "count_value":
        expected = IntVal(ref_count(values, predicate, params["count_value"]))
    elif predicate.startswith("range"):
        expected = IntVal(ref_count(values, predicate, params["range_start"], params["range_end"]))
    else:
        expected = IntVal(ref_count(values, predicate, params["threshold"]))
    return family, params, table, expected


def test_oracle_matches_reference_stem_leaf():
    rng = random.Random(101)
    for _ in range(500):
        family, params, table, expected = _random_stem_leaf_case(rng)
        assert family_oracle(family, params, table) == expected
        assert brute_force_reference(family, params, table) == expected


def test_oracle_matches_reference_stats():
    rng = random.Random(102)
    for _ in range(500):
        n = rng.randint(3, 9)
        values = [rng.randint(1, 60) for _ in range(n)]
        table = make_table(
            ["Name", "Value"], [[f"p{i}", str(v)] for i, v in enumerate(values)]
        )
        mean = ref_mean(values)
        if mean.denominator == 1:
            got = family_oracle(GeneratorFamily("stats", stat="mean"), {}, table)
            assert got == IntVal(mean.numerator)
        median = ref_median(values)
        got = family_oracle(GeneratorFamily("stats", stat="median"), {}, table)
        if median.denominator == 1:
            assert got == IntVal(median.numerator)
        else:
            assert Fraction(got.value) == median
        mode = ref_mode(values)
        if mode is None:
            with pytest.raises(AmbiguousMode):
                family_oracle(GeneratorFamily("stats", stat="mode"), {}, table)
        else:
            assert family_oracle(GeneratorFamily("stats", stat="mode"), {}, table) == IntVal(mode)


def test_render_solution_structure(db, small_corpus):
    for sample in small_corpus:
        lines = sample.solution.splitlines()
        numbered = [line for line in lines if line.startswith("(")]
        assert len(numbered) >= 3
        assert sample.solution.count("The answer is") == 1
        assert lines[-1] == f"The answer is {format_answer(sample.answer)}."


def test_mean_solution_shows_division(db):
    # constant-list instantiation: craft the binding directly
    from tmwpgen.templates import PlaceholderBinding, instantiate

    tpl = db.get(22)
    values = {f"value{i}": 5 for i in range(1, 7)}
    names = {f"who{i}": name for i, name in enumerate(["Ava", "Ben", "Carla", "Dev", "Erin", "Felix"], 1)}
    problem = instantiate(tpl, PlaceholderBinding({**values, **names}))
    assert problem.a_star == IntVal(5)
    assert "(5 + 5 + 5 + 5 + 5 + 5) / 6 = 5" in problem.s_star
    assert problem.s_star.endswith("The answer is 5.")
