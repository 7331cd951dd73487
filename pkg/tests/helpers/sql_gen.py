"""Random dialect programs and tables for executor cross-checks.

The numeric domain is chosen so the package executor and the brute-force
reference are bit-for-bit comparable: cells and literals are quarter
multiples with bounded magnitude, and aggregate arguments stay inside the
exactly-representable range (sums and products never round). Everything
else (division, ROUND, comparisons) is a single IEEE operation applied in
identical order by both evaluators.
"""

from __future__ import annotations

import random

from tablequest.analyzer.ast import (
    Aggregate,
    Binary,
    ColumnRef,
    FuncCall,
    Literal,
    OrderItem,
    SelectCore,
    SelectItem,
    Statement,
    Unary,
)
from tablequest.core.types import StructuredTable

_TEXT_POOL = (
    "alpha", "beta", "gamma", "delta", "Great Smoky", "NP", "north", "south",
    "a", "b", "", "x y", "O'Brien",
)
_NUMERIC_TEXT_POOL = ("12", "1,250", "45%", " 7 ", "0.5")
_LIKE_PATTERNS = ("%", "a%", "%a", "%a%", "alpha", "%NP", "x%y", "")


def _quarter(rng: random.Random) -> float:
    return rng.randrange(-4000, 4001) / 4.0


def random_table(rng: random.Random) -> StructuredTable:
    n_cols = rng.randint(1, 5)
    names = tuple(f"c{i}" for i in range(n_cols))
    kinds = [rng.choice(("num", "num", "text", "mixed")) for _ in range(n_cols)]
    n_rows = rng.choice((0, rng.randint(1, 8), rng.randint(1, 40)))

    def cell(kind: str):
        if rng.random() < 0.08:
            return None
        if kind == "mixed":
            kind = rng.choice(("num", "text"))
        if kind == "num":
            return _quarter(rng)
        if rng.random() < 0.2:
            return rng.choice(_NUMERIC_TEXT_POOL)
        return rng.choice(_TEXT_POOL)

    rows = tuple(
        tuple(cell(kinds[i]) for i in range(n_cols)) for _ in range(n_rows)
    )
    return StructuredTable(names, rows)


def _column(rng: random.Random, table: StructuredTable) -> ColumnRef:
    return ColumnRef(rng.choice(table.columns))


def _literal(rng: random.Random):
    roll = rng.random()
    if roll < 0.5:
        return Literal(_quarter(rng))
    if roll < 0.8:
        return Literal(rng.choice(_TEXT_POOL + _NUMERIC_TEXT_POOL))
    if roll < 0.9:
        return Literal(None)
    return Literal(rng.random() < 0.5)


def _agg_arg(rng: random.Random, table: StructuredTable):
    """Aggregate arguments that accumulate exactly in both evaluators."""
    roll = rng.random()
    if roll < 0.6:
        return _column(rng, table)
    if roll < 0.8:
        return Binary(rng.choice(("+", "-")), _column(rng, table), _column(rng, table))
    return Binary("*", _column(rng, table), Literal(float(rng.randint(-5, 5))))


def _aggregate(rng: random.Random, table: StructuredTable) -> Aggregate:
    func = rng.choice(("COUNT", "SUM", "AVG", "MIN", "MAX"))
    if func == "COUNT" and rng.random() < 0.4:
        return Aggregate("COUNT", None)
    return Aggregate(func, _agg_arg(rng, table))


def scalar_expr(rng: random.Random, table: StructuredTable, depth: int = 0):
    """Row-level expression over the table's columns."""
    if depth >= 3 or rng.random() < 0.3:
        return _column(rng, table) if rng.random() < 0.6 else _literal(rng)
    roll = rng.random()
    nxt = depth + 1
    if roll < 0.30:
        op = rng.choice(("+", "-", "*", "/"))
        return Binary(op, scalar_expr(rng, table, nxt), scalar_expr(rng, table, nxt))
    if roll < 0.50:
        op = rng.choice(("=", "!=", "<", "<=", ">", ">="))
        return Binary(op, scalar_expr(rng, table, nxt), scalar_expr(rng, table, nxt))
    if roll < 0.60:
        return Binary("LIKE", scalar_expr(rng, table, nxt),
                      Literal(rng.choice(_LIKE_PATTERNS)))
    if roll < 0.75:
        op = rng.choice(("AND", "OR"))
        return Binary(op, bool_expr(rng, table, nxt), bool_expr(rng, table, nxt))
    if roll < 0.80:
        return Unary("NOT", bool_expr(rng, table, nxt))
    if roll < 0.88:
        return Unary("-", scalar_expr(rng, table, nxt))
    if roll < 0.95:
        return FuncCall("ROUND", (scalar_expr(rng, table, nxt),
                                  Literal(float(rng.randint(0, 2)))))
    return FuncCall("ABS", (scalar_expr(rng, table, nxt),))


def bool_expr(rng: random.Random, table: StructuredTable, depth: int = 0):
    """Expression that is structurally boolean."""
    if depth >= 3 or rng.random() < 0.5:
        op = rng.choice(("=", "!=", "<", "<=", ">", ">="))
        return Binary(op, scalar_expr(rng, table, depth + 1),
                      scalar_expr(rng, table, depth + 1))
    roll = rng.random()
    if roll < 0.3:
        return Binary("LIKE", scalar_expr(rng, table, depth + 1),
                      Literal(rng.choice(_LIKE_PATTERNS)))
    if roll < 0.7:
        op = rng.choice(("AND", "OR"))
        return Binary(op, bool_expr(rng, table, depth + 1),
                      bool_expr(rng, table, depth + 1))
    return Unary("NOT", bool_expr(rng, table, depth + 1))


def _grouped_item(rng: random.Random, table: StructuredTable, keys: tuple):
    roll = rng.random()
    if roll < 0.4 and keys:
        return rng.choice(keys)
    if roll < 0.8:
        return _aggregate(rng, table)
    inner = _aggregate(rng, table)
    if rng.random() < 0.5:
        return Binary(rng.choice(("+", "-", "*", "/")), inner, _literal(rng))
    return FuncCall("ROUND", (inner, Literal(float(rng.randint(0, 2)))))


def _core(rng: random.Random, table: StructuredTable, n_items: int) -> SelectCore:
    where = bool_expr(rng, table) if rng.random() < 0.6 else None
    group_by: tuple = ()
    if rng.random() < 0.35:
        n_keys = rng.randint(1, min(2, len(table.columns)))
        key_names = rng.sample(list(table.columns), n_keys)
        group_by = tuple(ColumnRef(name) for name in key_names)

    items = []
    for i in range(n_items):
        alias = f"o{i}" if rng.random() < 0.5 else None
        if group_by:
            expr = _grouped_item(rng, table, group_by)
        elif rng.random() < 0.3:
            expr = _grouped_item(rng, table, ())  # whole-table aggregate
        else:
            expr = scalar_expr(rng, table)
        items.append(SelectItem(expr, alias))

    # aggregates and bare columns cannot mix without GROUP BY; rebuild the
    # offending scalar items as aggregates to keep the program well formed
    if not group_by:
        from tablequest.analyzer.ast import contains_aggregate

        if any(contains_aggregate(i.expr) for i in items):
            items = [
                i if contains_aggregate(i.expr)
                else SelectItem(_aggregate(rng, table), i.alias)
                for i in items
            ]
    return SelectCore(tuple(items), "data", where, group_by, False)


def random_statement(rng: random.Random, table: StructuredTable) -> Statement:
    n_cores = 1 if rng.random() < 0.75 else rng.randint(2, 3)
    n_items = rng.randint(1, 3)
    cores = tuple(_core(rng, table, n_items) for _ in range(n_cores))
    set_ops = tuple(
        rng.choice(("UNION", "UNION ALL")) for _ in range(n_cores - 1)
    )

    order_by: tuple = ()
    if rng.random() < 0.5:
        names = []
        for i, item in enumerate(cores[0].items):
            names.append(item.alias if item.alias else None)
        candidates = [n for n in names if n]
        picks = []
        for _ in range(rng.randint(1, 2)):
            if candidates and rng.random() < 0.7:
                picks.append(ColumnRef(rng.choice(candidates)))
            elif n_cores == 1 and not cores[0].group_by and not any(
                _has_aggregate(i.expr) for i in cores[0].items
            ):
                picks.append(scalar_expr(rng, table))
            elif candidates:
                picks.append(ColumnRef(rng.choice(candidates)))
        if picks:
            order_by = tuple(
                OrderItem(p, rng.random() < 0.5) for p in picks
            )

    limit = rng.randint(0, 10) if rng.random() < 0.4 else None
    return Statement(cores, set_ops, order_by, limit)


def _has_aggregate(expr) -> bool:
    from tablequest.analyzer.ast import contains_aggregate

    return contains_aggregate(expr)


def random_case(rng: random.Random) -> tuple[Statement, StructuredTable]:
    table = random_table(rng)
    return random_statement(rng, table), table
