"""Built-in template database: 25 question types over five families.

Types 1-11 read stem-and-leaf plots, 12-17 are price-list trading problems,
18-19 compare two table rows (multiple choice), 20-21 ask for probabilities
or fractions, and 22-25 ask for basic statistics. Numeric ranges and pools
are artifact choices and can be overridden by a user DB file.
"""

from __future__ import annotations

# Structured pools expose attributes referenced as {placeholder.attr};
# plain pools substitute directly.
POOLS = {
    "people": [
        {"first": "Ava", "pronoun": "she"},
        {"first": "Noah", "pronoun": "he"},
        {"first": "Mia", "pronoun": "she"},
        {"first": "Liam", "pronoun": "he"},
        {"first": "Zoe", "pronoun": "she"},
        {"first": "Owen", "pronoun": "he"},
        {"first": "Ruby", "pronoun": "she"},
        {"first": "Eli", "pronoun": "he"},
        {"first": "Ivy", "pronoun": "she"},
        {"first": "Max", "pronoun": "he"},
        {"first": "Nora", "pronoun": "she"},
        {"first": "Leo", "pronoun": "he"},
        {"first": "Isla", "pronoun": "she"},
        {"first": "Finn", "pronoun": "he"},
        {"first": "Cora", "pronoun": "she"},
        {"first": "Jude", "pronoun": "he"},
    ],
    "school_items": [
        {"singular": "pencil", "plural": "pencils"},
        {"singular": "pen", "plural": "pens"},
        {"singular": "eraser", "plural": "erasers"},
        {"singular": "notebook", "plural": "notebooks"},
        {"singular": "marker", "plural": "markers"},
        {"singular": "ruler", "plural": "rulers"},
        {"singular": "folder", "plural": "folders"},
        {"singular": "crayon", "plural": "crayons"},
        {"singular": "glue stick", "plural": "glue sticks"},
        {"singular": "highlighter", "plural": "highlighters"},
    ],
    "market_items": [
        {"singular": "apple", "plural": "apples"},
        {"singular": "banana", "plural": "bananas"},
        {"singular": "muffin", "plural": "muffins"},
        {"singular": "bagel", "plural": "bagels"},
        {"singular": "orange", "plural": "oranges"},
        {"singular": "pear", "plural": "pears"},
        {"singular": "cookie", "plural": "cookies"},
        {"singular": "pretzel", "plural": "pretzels"},
    ],
    "student_names": [
        "Ava", "Ben", "Carla", "Dev", "Erin", "Felix", "Gina", "Hugo", "Iris", "Jack",
        "Kira", "Luis", "Maya", "Nate", "Opal", "Pete", "Quinn", "Rosa", "Sam", "Tess",
    ],
    "plot_topics": [
        "Quiz scores",
        "Points per game",
        "Daily visitor counts",
        "Minutes spent reading",
        "Plant heights (cm)",
        "Pages read per night",
        "Weights of parcels (kg)",
        "Race finish times (seconds)",
    ],
    "measure_columns": [
        "Points scored",
        "Pages read",
        "Stickers collected",
        "Laps swum",
        "Tickets sold",
        "Cans recycled",
    ],
    "survey_groups": [
        "Boys", "Girls", "Teachers", "Students", "Members", "Visitors", "Adults", "Children",
    ],
    "survey_options": ["Walk", "Bike", "Bus", "Car", "Train", "Ferry"],
    "colors": ["red", "green", "blue", "yellow", "purple", "orange", "silver", "black"],
    "collection_items": ["marbles", "beads", "buttons", "balloons", "stickers", "tokens"],
}

MAX_STEM_ROWS = 5


def _int(lo, hi):
    return {"kind": "int_range", "lo": lo, "hi": hi}


def _dec(lo, hi, scale=2):
    return {"kind": "dec_range", "lo": lo, "hi": hi, "scale": scale}


def _cat(pool):
    return {"kind": "category", "pool": pool, "count": 1, "distinct": True}


def _digits(lo, hi):
    return {"kind": "digit_list", "len": [lo, hi], "sorted": True}


def _rel(op, *args):
    return {"op": op, "args": list(args)}


def _stem_leaf_constraints(extra):
    """Shared plot placeholders: stems 1-9 strictly increasing, 1-6 sorted
    leaves per row."""
    constraints = [
        {
            "placeholder": "stems",
            "domain": _digits(3, MAX_STEM_ROWS),
            "relations": [
                _rel("strictly_increasing", "stems"),
                _rel("element_ge", "stems", "1"),
            ],
        },
        {"placeholder": "topic", "domain": _cat("plot_topics")},
    ]
    for i in range(1, MAX_STEM_ROWS + 1):
        constraints.append({"placeholder": f"leaves_{i}", "domain": _digits(1, 6)})
    return constraints + extra


_STEM_LEAF_TABLE = {
    "layout": "stem-leaf",
    "title": "{topic}",
    "columns": ["Stem", "Leaf"],
    "stem_leaf": {"stems": "stems", "leaf_prefix": "leaves_"},
}

_PLOT_INTRO = "The stem-and-leaf plot lists each value as a stem (tens digit) paired with a leaf (ones digit)."
_PLOT_READ = "Reading every row, the values are {values_list}."


def _stem_leaf_count_template(type_id, question, phrase, predicate, extra_constraints):
    return {
        "type_id": type_id,
        "family": {"group": "stem_leaf", "predicate": predicate},
        "answer_rule": f"stem_leaf.{predicate}",
        "grade_range": [5, 8],
        "question": question,
        "table": _STEM_LEAF_TABLE,
        "solution": [
            _PLOT_INTRO,
            _PLOT_READ,
            f"The values that are {phrase} are: {{matching_list}}.",
            "Counting them gives {match_count}.",
        ],
        "constraints": _stem_leaf_constraints(extra_constraints),
    }


_RANGE_CONSTRAINTS = [
    {
        "placeholder": "range_start",
        "domain": _int(10, 99),
        "relations": [_rel("within_plot_range", "range_start", "stems", "leaves_")],
    },
    {
        "placeholder": "range_end",
        "domain": _int(10, 99),
        "relations": [
            _rel("lt", "range_start", "range_end"),
            _rel("within_plot_range", "range_end", "stems", "leaves_"),
        ],
    },
]

_THRESHOLD_CONSTRAINT = [
    {
        "placeholder": "threshold",
        "domain": _int(10, 99),
        "relations": [_rel("within_plot_range", "threshold", "stems", "leaves_")],
    },
]


def _trading_constraints(pool, rows, price_lo, price_hi):
    """One structured item + price placeholder pair per table row; items must
    be pairwise distinct. Asked-about items come first, then decoys."""
    constraints = [{"placeholder": "name", "domain": _cat("people")}]
    names = [ph for ph, _ in rows]
    for i, (ph, price_ph) in enumerate(rows):
        spec = {"placeholder": ph, "domain": _cat(pool)}
        if i == len(rows) - 1:
            spec["relations"] = [_rel("all_different", *names)]
        constraints.append(spec)
        constraints.append({"placeholder": price_ph, "domain": _dec(price_lo, price_hi)})
    return constraints


_GIVES_PRICES = "The table gives the price of each item."


def _stats_constraints(k, value_domain, relations):
    constraints = []
    names = [f"who{i}" for i in range(1, k + 1)]
    for i in range(1, k + 1):
        spec = {"placeholder": f"who{i}", "domain": _cat("student_names")}
        if i == k:
            spec["relations"] = [_rel("all_different", *names)] + relations
        constraints.append(spec)
        constraints.append({"placeholder": f"value{i}", "domain": value_domain})
    return constraints


def _stats_rows(k):
    return [["{who%d}" % i, "{value%d}" % i] for i in range(1, k + 1)]


TEMPLATES = [
    # ------------------------------------------------------ stem-leaf 1-11
    {
        "type_id": 1,
        "family": {"group": "stem_leaf", "predicate": "count_value"},
        "answer_rule": "stem_leaf.count_value",
        "grade_range": [5, 8],
        "question": "How many times does {count_value} appear in the stem-and-leaf plot?",
        "table": _STEM_LEAF_TABLE,
        "solution": [
            _PLOT_INTRO,
            _PLOT_READ,
            "Scan the list for {count_value}.",
            "The count of values equal to {count_value} is {match_count}.",
        ],
        "constraints": _stem_leaf_constraints(
            [
                {
                    "placeholder": "count_value",
                    "domain": _int(10, 99),
                    "relations": [_rel("in_plot", "count_value", "stems", "leaves_")],
                }
            ]
        ),
    },
    _stem_leaf_count_template(
        2,
        "How many numbers are at least {range_start} and at most {range_end}?",
        "at least {range_start} and at most {range_end}",
        "range_cc",
        _RANGE_CONSTRAINTS,
    ),
    _stem_leaf_count_template(
        3,
        "How many numbers are at least {range_start} but fewer than {range_end}?",
        "at least {range_start} but fewer than {range_end}",
        "range_co",
        _RANGE_CONSTRAINTS,
    ),
    _stem_leaf_count_template(
        4,
        "How many numbers are greater than {range_start} but fewer than {range_end}?",
        "greater than {range_start} but fewer than {range_end}",
        "range_oo",
        _RANGE_CONSTRAINTS,
    ),
    _stem_leaf_count_template(
        5,
        "How many numbers are greater than {range_start} and at most {range_end}?",
        "greater than {range_start} and at most {range_end}",
        "range_oc",
        _RANGE_CONSTRAINTS,
    ),
    _stem_leaf_count_template(
        6,
        "How many numbers are fewer than {threshold}?",
        "fewer than {threshold}",
        "below_strict",
        _THRESHOLD_CONSTRAINT,
    ),
    _stem_leaf_count_template(
        7,
        "How many numbers are at most {threshold}?",
        "at most {threshold}",
        "below_weak",
        _THRESHOLD_CONSTRAINT,
    ),
    _stem_leaf_count_template(
        8,
        "How many numbers are at least {threshold}?",
        "at least {threshold}",
        "above_weak",
        _THRESHOLD_CONSTRAINT,
    ),
    _stem_leaf_count_template(
        9,
        "How many numbers are greater than {threshold}?",
        "greater than {threshold}",
        "above_strict",
        _THRESHOLD_CONSTRAINT,
    ),
    {
        "type_id": 10,
        "family": {"group": "stem_leaf", "predicate": "min"},
        "answer_rule": "stem_leaf.min",
        "grade_range": [5, 8],
        "question": "What is the smallest number in the dataset?",
        "table": _STEM_LEAF_TABLE,
        "solution": [
            _PLOT_INTRO,
            _PLOT_READ,
            "The smallest value comes from the first leaf of the lowest stem: {answer}.",
        ],
        "constraints": _stem_leaf_constraints([]),
    },
    {
        "type_id": 11,
        "family": {"group": "stem_leaf", "predicate": "max"},
        "answer_rule": "stem_leaf.max",
        "grade_range": [5, 8],
        "question": "What is the largest number in the dataset?",
        "table": _STEM_LEAF_TABLE,
        "solution": [
            _PLOT_INTRO,
            _PLOT_READ,
            "The largest value comes from the last leaf of the highest stem: {answer}.",
        ],
        "constraints": _stem_leaf_constraints([]),
    },
    # -------------------------------------------------------- trading 12-17
    {
        "type_id": 12,
        "family": {"group": "trading", "mode": "total", "item_count": 1},
        "answer_rule": "trading.total",
        "grade_range": [3, 7],
        "question": "How much money does {name.first} need to buy {number} {products.plural}?",
        "table": {
            "layout": "price-list",
            "columns": ["Item", "Price"],
            "rows": [
                ["{decoy1.singular}", "${dprice1}"],
                ["{products.singular}", "${price}"],
                ["{decoy2.singular}", "${dprice2}"],
                ["{decoy3.singular}", "${dprice3}"],
            ],
        },
        "solution": [
            _GIVES_PRICES,
            "Each {products.singular} costs ${price}.",
            "Multiply the price by the number bought: {purchase_expr} = {total}.",
            "So {name.first} needs {total}.",
        ],
        "constraints": _trading_constraints(
            "school_items",
            [("products", "price"), ("decoy1", "dprice1"), ("decoy2", "dprice2"), ("decoy3", "dprice3")],
            "0.15",
            "4.95",
        )
        + [{"placeholder": "number", "domain": _int(2, 5)}],
    },
    {
        "type_id": 13,
        "family": {"group": "trading", "mode": "total", "item_count": 2},
        "answer_rule": "trading.total",
        "grade_range": [3, 7],
        "question": "How much money does {name.first} need to buy {number1} {product1s.plural} and {number2} {product2s.plural}?",
        "table": {
            "layout": "price-list",
            "columns": ["Item", "Price"],
            "rows": [
                ["{product1s.singular}", "${price1}"],
                ["{decoy1.singular}", "${dprice1}"],
                ["{product2s.singular}", "${price2}"],
                ["{decoy2.singular}", "${dprice2}"],
            ],
        },
        "solution": [
            _GIVES_PRICES,
            "Each {product1s.singular} costs ${price1} and each {product2s.singular} costs ${price2}.",
            "Multiply each price by the number bought and add: {purchase_expr} = {total}.",
            "So {name.first} needs {total}.",
        ],
        "constraints": _trading_constraints(
            "school_items",
            [("product1s", "price1"), ("product2s", "price2"), ("decoy1", "dprice1"), ("decoy2", "dprice2")],
            "0.15",
            "4.95",
        )
        + [
            {"placeholder": "number1", "domain": _int(2, 5)},
            {"placeholder": "number2", "domain": _int(2, 5)},
        ],
    },
    {
        "type_id": 14,
        "family": {"group": "trading", "mode": "total", "item_count": 3},
        "answer_rule": "trading.total",
        "grade_range": [3, 7],
        "question": (
            "How much money does {name.first} need to buy {number1} {product1s.plural}, "
            "{number2} {product2s.plural}, and {number3} {product3s.plural}?"
        ),
        "table": {
            "layout": "price-list",
            "columns": ["Item", "Price"],
            "rows": [
                ["{product1s.singular}", "${price1}"],
                ["{product2s.singular}", "${price2}"],
                ["{decoy1.singular}", "${dprice1}"],
                ["{product3s.singular}", "${price3}"],
            ],
        },
        "solution": [
            _GIVES_PRICES,
            (
                "Each {product1s.singular} costs ${price1}, each {product2s.singular} costs ${price2}, "
                "and each {product3s.singular} costs ${price3}."
            ),
            "Multiply each price by the number bought and add: {purchase_expr} = {total}.",
            "So {name.first} needs {total}.",
        ],
        "constraints": _trading_constraints(
            "market_items",
            [
                ("product1s", "price1"),
                ("product2s", "price2"),
                ("product3s", "price3"),
                ("decoy1", "dprice1"),
            ],
            "0.35",
            "6.95",
        )
        + [
            {"placeholder": "number1", "domain": _int(2, 5)},
            {"placeholder": "number2", "domain": _int(2, 5)},
            {"placeholder": "number3", "domain": _int(2, 5)},
        ],
    },
    {
        "type_id": 15,
        "family": {"group": "trading", "mode": "remaining", "item_count": 1},
        "answer_rule": "trading.remaining",
        "grade_range": [3, 7],
        "context": "{name.first} has ${budget}.",
        "question": "How much money will {name.first} have left if {name.pronoun} buys {number} {products.plural}?",
        "table": {
            "layout": "price-list",
            "columns": ["Item", "Price"],
            "rows": [
                ["{decoy1.singular}", "${dprice1}"],
                ["{products.singular}", "${price}"],
                ["{decoy2.singular}", "${dprice2}"],
            ],
        },
        "solution": [
            _GIVES_PRICES,
            "Each {products.singular} costs ${price}.",
            "Cost of the purchase: {purchase_expr} = {total}.",
            "Subtract the cost from {name.first}'s money: ${budget} - {total} = ${answer}.",
        ],
        "constraints": _trading_constraints(
            "school_items",
            [("products", "price"), ("decoy1", "dprice1"), ("decoy2", "dprice2")],
            "0.15",
            "4.95",
        )
        + [
            {"placeholder": "number", "domain": _int(2, 5)},
            {
                "placeholder": "budget",
                "domain": _dec("10.00", "40.00"),
                "relations": [_rel("budget_covers", "budget", "number", "price")],
            },
        ],
    },
    {
        "type_id": 16,
        "family": {"group": "trading", "mode": "remaining", "item_count": 2},
        "answer_rule": "trading.remaining",
        "grade_range": [3, 7],
        "context": "{name.first} has ${budget}.",
        "question": (
            "How much money will {name.first} have left if {name.pronoun} buys "
            "{number1} {product1s.plural} and {number2} {product2s.plural}?"
        ),
        "table": {
            "layout": "price-list",
            "columns": ["Item", "Price"],
            "rows": [
                ["{product1s.singular}", "${price1}"],
                ["{product2s.singular}", "${price2}"],
                ["{decoy1.singular}", "${dprice1}"],
                ["{decoy2.singular}", "${dprice2}"],
            ],
        },
        "solution": [
            _GIVES_PRICES,
            "Each {product1s.singular} costs ${price1} and each {product2s.singular} costs ${price2}.",
            "Cost of the purchase: {purchase_expr} = {total}.",
            "Subtract the cost from {name.first}'s money: ${budget} - {total} = ${answer}.",
        ],
        "constraints": _trading_constraints(
            "school_items",
            [("product1s", "price1"), ("product2s", "price2"), ("decoy1", "dprice1"), ("decoy2", "dprice2")],
            "0.15",
            "4.95",
        )
        + [
            {"placeholder": "number1", "domain": _int(2, 5)},
            {"placeholder": "number2", "domain": _int(2, 5)},
            {
                "placeholder": "budget",
                "domain": _dec("20.00", "60.00"),
                "relations": [
                    _rel("budget_covers", "budget", "number1", "price1", "number2", "price2")
                ],
            },
        ],
    },
    {
        "type_id": 17,
        "family": {"group": "trading", "mode": "remaining", "item_count": 3},
        "answer_rule": "trading.remaining",
        "grade_range": [3, 7],
        "context": "{name.first} has ${budget}.",
        "question": (
            "How much money does {name.first} have left if {name.pronoun} buys {number1} "
            "{product1s.plural}, {number2} {product2s.plural}, and {number3} {product3s.plural}?"
        ),
        "table": {
            "layout": "price-list",
            "columns": ["Item", "Price"],
            "rows": [
                ["{decoy1.singular}", "${dprice1}"],
                ["{product1s.singular}", "${price1}"],
                ["{decoy2.singular}", "${dprice2}"],
                ["{product2s.singular}", "${price2}"],
                ["{product3s.singular}", "${price3}"],
            ],
        },
        "solution": [
            _GIVES_PRICES,
            (
                "Each {product1s.singular} costs ${price1}, each {product2s.singular} costs ${price2}, "
                "and each {product3s.singular} costs ${price3}."
            ),
            "Cost of the purchase: {purchase_expr} = {total}.",
            "Subtract the cost from {name.first}'s money: ${budget} - {total} = ${answer}.",
        ],
        "constraints": _trading_constraints(
            "market_items",
            [
                ("product1s", "price1"),
                ("product2s", "price2"),
                ("product3s", "price3"),
                ("decoy1", "dprice1"),
                ("decoy2", "dprice2"),
            ],
            "0.35",
            "6.95",
        )
        + [
            {"placeholder": "number1", "domain": _int(2, 5)},
            {"placeholder": "number2", "domain": _int(2, 5)},
            {"placeholder": "number3", "domain": _int(2, 5)},
            {
                "placeholder": "budget",
                "domain": _dec("30.00", "95.00"),
                "relations": [
                    _rel(
                        "budget_covers",
                        "budget",
                        "number1",
                        "price1",
                        "number2",
                        "price2",
                        "number3",
                        "price3",
                    )
                ],
            },
        ],
    },
    # ------------------------------------------------------ comparison 18-19
    {
        "type_id": 18,
        "family": {"group": "comparison", "direction": "more"},
        "answer_rule": "comparison.more",
        "grade_range": [3, 7],
        "question": "Which category has more value for {column}, {row1} or {row2}?",
        "choice_rule": "pair:row1,row2",
        "table": {
            "layout": "key-value",
            "title": "{column}",
            "columns": ["Name", "{column}"],
            "rows": [
                ["{row1}", "{value1}"],
                ["{decoy1}", "{value3}"],
                ["{row2}", "{value2}"],
                ["{decoy2}", "{value4}"],
            ],
        },
        "solution": [
            "Look up the {column} values for {row1} and {row2} in the table.",
            "{row1} has {value1} and {row2} has {value2}.",
            "Compare the two numbers and pick the greater one.",
            "{answer} has the greater value.",
        ],
        "constraints": [
            {"placeholder": "column", "domain": _cat("measure_columns")},
            {"placeholder": "row1", "domain": _cat("student_names")},
            {"placeholder": "row2", "domain": _cat("student_names")},
            {"placeholder": "decoy1", "domain": _cat("student_names")},
            {"placeholder": "decoy2", "domain": _cat("student_names")},
            {"placeholder": "value1", "domain": _int(12, 98)},
            {
                "placeholder": "value2",
                "domain": _int(12, 98),
                "relations": [
                    _rel("ne", "value1", "value2"),
                    _rel("all_different", "row1", "row2", "decoy1", "decoy2"),
                ],
            },
            {"placeholder": "value3", "domain": _int(12, 98)},
            {"placeholder": "value4", "domain": _int(12, 98)},
        ],
    },
    {
        "type_id": 19,
        "family": {"group": "comparison", "direction": "less"},
        "answer_rule": "comparison.less",
        "grade_range": [3, 7],
        "question": "Which category has less value for {column}, {row1} or {row2}?",
        "choice_rule": "pair:row1,row2",
        "table": {
            "layout": "key-value",
            "title": "{column}",
            "columns": ["Name", "{column}"],
            "rows": [
                ["{decoy1}", "{value3}"],
                ["{row1}", "{value1}"],
                ["{row2}", "{value2}"],
                ["{decoy2}", "{value4}"],
            ],
        },
        "solution": [
            "Look up the {column} values for {row1} and {row2} in the table.",
            "{row1} has {value1} and {row2} has {value2}.",
            "Compare the two numbers and pick the smaller one.",
            "{answer} has the smaller value.",
        ],
        "constraints": [
            {"placeholder": "column", "domain": _cat("measure_columns")},
            {"placeholder": "row1", "domain": _cat("student_names")},
            {"placeholder": "row2", "domain": _cat("student_names")},
            {"placeholder": "decoy1", "domain": _cat("student_names")},
            {"placeholder": "decoy2", "domain": _cat("student_names")},
            {"placeholder": "value1", "domain": _int(12, 98)},
            {
                "placeholder": "value2",
                "domain": _int(12, 98),
                "relations": [
                    _rel("ne", "value1", "value2"),
                    _rel("all_different", "row1", "row2", "decoy1", "decoy2"),
                ],
            },
            {"placeholder": "value3", "domain": _int(12, 98)},
            {"placeholder": "value4", "domain": _int(12, 98)},
        ],
    },
    # ----------------------------------------------------- probability 20-21
    {
        "type_id": 20,
        "family": {"group": "probability", "mode": "joint_cell"},
        "answer_rule": "probability.joint_cell",
        "grade_range": [5, 8],
        "question": "What is the probability that a randomly selected item is {row} and {col}?",
        "table": {
            "layout": "two-way-count",
            "title": "Survey results",
            "columns": ["", "{col_a}", "{col_b}"],
            "rows": [
                ["{row_a}", "{c11}", "{c12}"],
                ["{row_b}", "{c21}", "{c22}"],
            ],
        },
        "solution": [
            "Every item falls into exactly one cell of the two-way table.",
            "Add all four cells to get the total number of items: {total}.",
            "The cell for {row} and {col} holds {favorable} items.",
            "The probability is {favorable} out of {total}, which in lowest terms is {answer}.",
        ],
        "constraints": [
            {"placeholder": "row_a", "domain": _cat("survey_groups")},
            {
                "placeholder": "row_b",
                "domain": _cat("survey_groups"),
                "relations": [_rel("all_different", "row_a", "row_b")],
            },
            {"placeholder": "col_a", "domain": _cat("survey_options")},
            {
                "placeholder": "col_b",
                "domain": _cat("survey_options"),
                "relations": [_rel("all_different", "col_a", "col_b")],
            },
            {
                "placeholder": "row",
                "domain": _cat("survey_groups"),
                "relations": [_rel("one_of", "row", "row_a", "row_b")],
            },
            {
                "placeholder": "col",
                "domain": _cat("survey_options"),
                "relations": [_rel("one_of", "col", "col_a", "col_b")],
            },
            {"placeholder": "c11", "domain": _int(1, 15)},
            {"placeholder": "c12", "domain": _int(1, 15)},
            {"placeholder": "c21", "domain": _int(1, 15)},
            {"placeholder": "c22", "domain": _int(1, 15)},
        ],
    },
    {
        "type_id": 21,
        "family": {"group": "probability", "mode": "category_fraction"},
        "answer_rule": "probability.category_fraction",
        "grade_range": [5, 8],
        "question": "What fraction of {items} in the table belong to {category}?",
        "table": {
            "layout": "frequency",
            "title": "Bag of {items}",
            "columns": ["Color", "Frequency"],
            "rows": [
                ["{cat1}", "{f1}"],
                ["{cat2}", "{f2}"],
                ["{cat3}", "{f3}"],
                ["{cat4}", "{f4}"],
            ],
        },
        "solution": [
            "The table counts the {items} of each color.",
            "Add the frequencies to get the total number of {items}: {total}.",
            "{favorable} of the {items} are {category}.",
            "The fraction is {favorable} out of {total}, which in lowest terms is {answer}.",
        ],
        "constraints": [
            {"placeholder": "items", "domain": _cat("collection_items")},
            {"placeholder": "cat1", "domain": _cat("colors")},
            {"placeholder": "cat2", "domain": _cat("colors")},
            {"placeholder": "cat3", "domain": _cat("colors")},
            {
                "placeholder": "cat4",
                "domain": _cat("colors"),
                "relations": [_rel("all_different", "cat1", "cat2", "cat3", "cat4")],
            },
            {
                "placeholder": "category",
                "domain": _cat("colors"),
                "relations": [_rel("one_of", "category", "cat1", "cat2", "cat3", "cat4")],
            },
            {"placeholder": "f1", "domain": _int(1, 12)},
            {"placeholder": "f2", "domain": _int(1, 12)},
            {"placeholder": "f3", "domain": _int(1, 12)},
            {"placeholder": "f4", "domain": _int(1, 12)},
        ],
    },
    # ----------------------------------------------------------- stats 22-25
    {
        "type_id": 22,
        "family": {"group": "stats", "stat": "mean"},
        "answer_rule": "stats.mean",
        "grade_range": [3, 7],
        "question": "What is the mean of the numbers?",
        "table": {
            "layout": "key-value",
            "title": "Pages read last month",
            "columns": ["Name", "Number of pages"],
            "rows": _stats_rows(6),
        },
        "solution": [
            "The table lists the number of pages each person read.",
            "Read the numbers from the table: {values_csv}.",
            "Add them: {sum_expr} = {sum}.",
            "Divide the sum by how many numbers there are, so the mean is ({sum_expr}) / {n_values} = {answer}.",
        ],
        "constraints": _stats_constraints(
            6, _int(62, 98), [_rel("sum_divisible", *[f"value{i}" for i in range(1, 7)])]
        ),
    },
    {
        "type_id": 23,
        "family": {"group": "stats", "stat": "median"},
        "answer_rule": "stats.median",
        "grade_range": [3, 7],
        "question": "What is the median of the numbers?",
        "table": {
            "layout": "key-value",
            "title": "Minutes practiced this week",
            "columns": ["Name", "Minutes practiced"],
            "rows": _stats_rows(7),
        },
        "solution": [
            "The table lists the minutes each person practiced.",
            "Read the numbers from the table: {values_csv}.",
            "Order them from least to greatest: {sorted_csv}.",
            "The middle value of the {n_values} numbers is {answer}.",
        ],
        "constraints": _stats_constraints(7, _int(15, 60), []),
    },
    {
        "type_id": 24,
        "family": {"group": "stats", "stat": "mode"},
        "answer_rule": "stats.mode",
        "grade_range": [3, 7],
        "question": "What is the mode of the numbers?",
        "table": {
            "layout": "key-value",
            "title": "Library books checked out",
            "columns": ["Name", "Number of books"],
            "rows": _stats_rows(8),
        },
        "solution": [
            "The table lists how many books each person checked out.",
            "Read the numbers from the table: {values_csv}.",
            "Count how often each number appears.",
            "The number that appears most often is {answer}.",
        ],
        "constraints": _stats_constraints(
            8, _int(3, 11), [_rel("unique_mode", *[f"value{i}" for i in range(1, 9)])]
        ),
    },
    {
        "type_id": 25,
        "family": {"group": "stats", "stat": "average"},
        "answer_rule": "stats.average",
        "grade_range": [3, 7],
        "question": "What is the average of the numbers?",
        "table": {
            "layout": "key-value",
            "title": "Points scored in the tournament",
            "columns": ["Name", "Points scored"],
            "rows": _stats_rows(5),
        },
        "solution": [
            "The table lists the points each person scored.",
            "Read the numbers from the table: {values_csv}.",
            "Add them: {sum_expr} = {sum}.",
            "Divide the sum by how many numbers there are, so the average is ({sum_expr}) / {n_values} = {answer}.",
        ],
        "constraints": _stats_constraints(
            5, _int(41, 97), [_rel("sum_divisible", *[f"value{i}" for i in range(1, 6)])]
        ),
    },
]
