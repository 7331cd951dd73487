"""Closed SQL dialect: AST, parser, executor, and the answer stage."""

from .answer import (
    Analysis,
    HEAD_ROWS,
    MAX_ATTEMPTS,
    ProgramValidationError,
    analyze,
    empty_table_analysis,
    generate_sql,
    result_to_answer,
    validate_program,
)
from .ast import (
    AGGREGATE_FUNCS,
    Aggregate,
    Binary,
    ColumnRef,
    Expr,
    FuncCall,
    Literal,
    OrderItem,
    SCALAR_FUNCS,
    SelectCore,
    SelectItem,
    Statement,
    Unary,
    contains_aggregate,
    is_boolean_expr,
    referenced_columns,
    render_expr,
    render_identifier,
    render_statement,
    walk,
)
from .executor import (
    QueryResult,
    SqlExecutionError,
    SqlTypeError,
    Value,
    execute_equijoin,
    execute_sql,
    execute_statement,
    round_half_away,
)
from .parser import SqlParseError, parse_sql, tokenize

__all__ = [
    "AGGREGATE_FUNCS",
    "Aggregate",
    "Analysis",
    "Binary",
    "ColumnRef",
    "Expr",
    "FuncCall",
    "HEAD_ROWS",
    "Literal",
    "MAX_ATTEMPTS",
    "OrderItem",
    "ProgramValidationError",
    "QueryResult",
    "SCALAR_FUNCS",
    "SelectCore",
    "SelectItem",
    "SqlExecutionError",
    "SqlParseError",
    "SqlTypeError",
    "Statement",
    "Unary",
    "Value",
    "analyze",
    "contains_aggregate",
    "empty_table_analysis",
    "execute_equijoin",
    "execute_sql",
    "execute_statement",
    "generate_sql",
    "is_boolean_expr",
    "parse_sql",
    "referenced_columns",
    "render_expr",
    "render_identifier",
    "render_statement",
    "result_to_answer",
    "round_half_away",
    "tokenize",
    "validate_program",
    "walk",
]
