"""Tiny text folding helpers for column/question token matching."""

from __future__ import annotations

import re

STOPWORDS = frozenset(
    "a an and are as at be by for from has have in is it of on or that the to was what which with".split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def fold_tokens(text: str) -> set[str]:
    """Lowercased alphanumeric tokens, light plural folding, stopwords dropped."""
    tokens = set()
    for tok in _TOKEN_RE.findall(text.lower()):
        if tok in STOPWORDS:
            continue
        if len(tok) > 3 and tok.endswith("s"):
            tok = tok[:-1]
        tokens.add(tok)
    return tokens


def token_overlap(a: str, b: str) -> int:
    return len(fold_tokens(a) & fold_tokens(b))
