"""Core value model: CSV round-trips, blacklist boundaries, source logging."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tablequest.core.csvio import (
    CsvFormatError,
    csv_to_table,
    format_number,
    parse_cell,
    parse_number,
    table_to_csv,
    tables_equal,
    text_to_table,
)
from tablequest.core.matching import answers_match, numbers_match
from tablequest.core.tableops import (
    expand_table,
    is_superset,
    normalize_column_name,
    normalize_columns,
)
from tablequest.core.types import (
    Answer,
    Blacklist,
    LogicalClock,
    MalformedDomainError,
    Query,
    QueryKind,
    SourceAgent,
    SourceLog,
    StructuredTable,
    TaskInstance,
    blacklist_matches,
)


# ---- numeric cell rule -------------------------------------------------------


@pytest.mark.parametrize(
    "text,expected",
    [
        ("12", 12.0),
        ("-3.5", -3.5),
        ("1,234,567", 1234567.0),
        ("45%", 45.0),
        ("  7 ", 7.0),
        ("6.02e23", 6.02e23),
        ("1 234", None),  # internal space is not a separator
        ("12_000", None),
        ("nan", None),
        ("inf", None),
        ("-inf", None),
        ("", None),
        ("7%x", None),
        ("abc", None),
    ],
)
def test_parse_number(text, expected):
    assert parse_number(text) == expected


def test_parse_cell_empty_is_null():
    assert parse_cell("") is None
    assert parse_cell("x") == "x"
    assert parse_cell("3") == 3.0


def test_format_number_never_minus_zero():
    assert format_number(-0.0) == "0"
    assert format_number(2.5) == "2.5"
    assert format_number(1e20) == "1e+20"


# ---- csv round trip ----------------------------------------------------------

# NUL cannot pass through the csv framing layer, so it is out of scope
_column_names = st.text(
    st.characters(blacklist_categories=("Cs",), blacklist_characters="\r\n\x00"),
    min_size=1,
    max_size=12,
).filter(lambda s: s == s.strip() and s.strip() != "")

_text_cells = st.text(
    st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
    max_size=20,
).filter(lambda s: s != "" and parse_number(s) is None)

_cells = st.one_of(
    st.none(),
    st.floats(allow_nan=False, allow_infinity=False),
    _text_cells,
)


@st.composite
def _tables(draw):
    names = draw(
        st.lists(_column_names, min_size=1, max_size=5, unique=True)
    )
    n_rows = draw(st.integers(min_value=0, max_value=8))
    rows = tuple(
        tuple(draw(_cells) for _ in names) for _ in range(n_rows)
    )
    return StructuredTable(tuple(names), rows)


@settings(max_examples=250, deadline=None)
@given(_tables())
def test_csv_round_trip(table):
    again = csv_to_table(table_to_csv(table))
    assert again.columns == table.columns
    assert tables_equal(again, table)


def test_csv_rejects_ragged_rows():
    with pytest.raises(CsvFormatError):
        text_to_table("a,b\n1,2,3\n")


def test_csv_rejects_duplicate_columns():
    with pytest.raises(CsvFormatError):
        text_to_table("a,a\n1,2\n")


def test_csv_rejects_missing_header():
    with pytest.raises(CsvFormatError):
        csv_to_table(b"")
    with pytest.raises(CsvFormatError):
        text_to_table(" ,  \n")


def test_csv_rejects_non_utf8():
    with pytest.raises(CsvFormatError):
        csv_to_table(b"a,b\n\xff\xfe,2\n")


def test_csv_skips_blank_trailing_line():
    table = text_to_table("a\n1\n\n")
    assert table.rows == ((1.0,),)


def test_csv_quoting_survives_framing():
    table = StructuredTable(
        ("name", "note"),
        (("O'Brien, Pat", 'says "hi"'), ("line\nbreak", "c,d")),
    )
    assert tables_equal(csv_to_table(table_to_csv(table)), table)


# ---- structured table invariants ----------------------------------------------


def test_table_rejects_duplicate_columns():
    with pytest.raises(ValueError):
        StructuredTable(("a", "a"), ())


def test_table_rejects_ragged_rows():
    with pytest.raises(ValueError):
        StructuredTable(("a", "b"), ((1.0,),))


def test_table_coerces_int_cells_to_float():
    table = StructuredTable(("a",), ((1,),))
    cell = table.rows[0][0]
    assert isinstance(cell, float) and cell == 1.0


def test_table_head_and_empty():
    table = StructuredTable(("a",), ((1.0,), (2.0,), (3.0,)))
    assert table.head(2).rows == ((1.0,), (2.0,))
    assert not table.is_empty
    assert StructuredTable.empty().is_empty


# ---- blacklist ------------------------------------------------------------------


def test_blacklist_label_boundaries():
    blacklist = Blacklist.of("example.org")
    assert blacklist_matches("https://example.org/data", blacklist)
    assert blacklist_matches("https://sub.example.org/x", blacklist)
    assert blacklist_matches("https://a.b.example.org", blacklist)
    assert not blacklist_matches("https://notexample.org/", blacklist)
    assert not blacklist_matches("https://example.org.evil.net/", blacklist)


def test_blacklist_host_normalization():
    blacklist = Blacklist.of("Example.ORG ")
    assert blacklist_matches("https://EXAMPLE.org/x", blacklist)
    assert blacklist.matches_host("example.org.")


def test_blacklist_ignores_hostless_urls():
    blacklist = Blacklist.of("example.org")
    assert not blacklist_matches("mailto:a@example.org", blacklist)
    assert not blacklist_matches("not a url", blacklist)


@pytest.mark.parametrize(
    "entry", ["https://example.org", "example.org/path", ".example.org",
              "exam ple.org", "localhost"],
)
def test_blacklist_rejects_non_bare_domains(entry):
    with pytest.raises(MalformedDomainError):
        Blacklist(frozenset({entry}))


def test_blacklist_of_drops_blank_entries():
    assert len(Blacklist.of("example.org", " ", "")) == 1


# ---- source log -----------------------------------------------------------------


def test_source_log_first_visit_wins():
    log = SourceLog()
    assert log.add("https://a.example/x", SourceAgent.BROWSER, 1, 5)
    assert not log.add("https://a.example/x", SourceAgent.AUGMENTER, 2, 9)
    entry = next(iter(log))
    assert entry.added_by is SourceAgent.BROWSER
    assert entry.round == 1 and entry.at == 5
    assert "https://a.example/x" in log and len(log) == 1


def test_source_log_extend_preserves_order():
    first = SourceLog()
    first.add("https://a.example", SourceAgent.BROWSER, 1, 1)
    second = SourceLog()
    second.add("https://b.example", SourceAgent.AUGMENTER, 2, 2)
    second.add("https://a.example", SourceAgent.AUGMENTER, 2, 3)
    first.extend(second)
    assert first.urls() == ["https://a.example", "https://b.example"]


def test_logical_clock_monotonic():
    clock = LogicalClock()
    assert [clock(), clock(), clock()] == [1, 2, 3]


# ---- answers and matching --------------------------------------------------------


def test_numbers_match_relative_tolerance():
    assert numbers_match(100.9, 100.0)
    assert not numbers_match(101.1, 100.0)
    assert numbers_match(0.0, 0.0)
    assert not numbers_match(0.001, 0.0)  # zero gold leaves no slack


def test_answers_match_text_casefold_and_trim():
    assert answers_match(Answer.text("  Hawaii "), Answer.text("hawaii"))
    assert not answers_match(Answer.text("Hawaii"), Answer.text("Idaho"))


def test_answers_match_numeric_text_candidate():
    assert answers_match(Answer.text("70,000"), Answer.number(70000))
    assert answers_match(Answer.number(69500.0), Answer.number(70000))
    assert not answers_match(Answer.number(69000.0), Answer.number(70000))


def test_answers_match_boolean_strict():
    assert answers_match(Answer.boolean(True), Answer.boolean(True))
    assert not answers_match(Answer.boolean(False), Answer.boolean(True))
    assert not answers_match(Answer.text("true"), Answer.boolean(True))


def test_answers_match_abstain_candidate_fails():
    assert not answers_match(Answer.abstain(), Answer.text("x"))
    assert not answers_match(Answer.abstain(), Answer.number(1))


def test_answers_match_rejects_abstain_gold():
    with pytest.raises(ValueError):
        answers_match(Answer.text("x"), Answer.abstain())


def test_task_instance_validation():
    query = Query("Is it so?", QueryKind.VERIFICATION)
    table = StructuredTable(("a",), ((1.0,),))
    with pytest.raises(ValueError):
        TaskInstance("bad slug!", query, Blacklist.of(), Answer.boolean(True),
                     table, "SELECT a = 1 FROM t")
    with pytest.raises(ValueError):
        TaskInstance("t", query, Blacklist.of(), Answer.number(3), table,
                     "SELECT a FROM t")
    qa = Query("What is a?", QueryKind.QUESTION_ANSWERING)
    with pytest.raises(ValueError):
        TaskInstance("t", qa, Blacklist.of(), Answer.boolean(True), table,
                     "SELECT a FROM t")


# ---- table expansion ---------------------------------------------------------------


def test_expand_table_fills_matching_rows():
    base = StructuredTable(("year", "births"), ((2022.0, 57540.0),))
    addition = StructuredTable(("year", "deaths"), ((2022.0, 35000.0),))
    merged = expand_table(base, addition)
    assert merged.columns == ("year", "births", "deaths")
    assert merged.rows == ((2022.0, 57540.0, 35000.0),)


def test_expand_table_appends_unmatched_rows():
    base = StructuredTable(("year", "births"), ((2022.0, 57540.0),))
    addition = StructuredTable(("year", "births"), ((2023.0, 54678.0),))
    merged = expand_table(base, addition)
    assert merged.rows == ((2022.0, 57540.0), (2023.0, 54678.0))


def test_expand_table_empty_base_identity():
    addition = StructuredTable(("a",), ((1.0,),))
    assert expand_table(StructuredTable.empty(), addition) == addition


def test_is_superset():
    inner = StructuredTable(("a",), ((1.0,),))
    outer = StructuredTable(("a", "b"), ((1.0, 2.0), (3.0, 4.0)))
    assert is_superset(outer, inner)
    assert not is_superset(inner, outer)


def test_normalize_column_name():
    assert normalize_column_name(" Visitor  Spending ") == "Visitor_Spending"
    table = StructuredTable(("Year ", "births"), ())
    normalized, renames = normalize_columns(table)
    assert normalized.columns == ("Year", "births")
    assert renames == {"Year ": "Year"}


def test_expand_table_idempotent():
    base = StructuredTable(("a", "b"), ((1.0, None), (2.0, "x")))
    addition = StructuredTable(("b", "c"), (("x", 9.0),))
    once = expand_table(base, addition)
    assert expand_table(once, addition) == once
