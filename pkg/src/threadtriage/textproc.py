"""Tokenization, category-lexicon matching, and lexicon-based sentiment scoring.

The category engine follows the common ``.dic`` dictionary convention: exact
word entries plus trailing-asterisk prefix entries, each mapping to one or
more numbered categories. Matching is exact-entry first, then the longest
matching prefix; one entry may feed several categories. Lexicons are
immutable after loading and all operations here are pure.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not alphanumeric or an apostrophe.

    Apostrophes survive only word-internally ("i'm" stays, "'em" -> "em").
    """
    tokens: list[str] = []
    buf: list[str] = []
    for ch in text.lower():
        if ch.isalnum() or ch == "'":
            buf.append(ch)
        elif buf:
            tokens.append("".join(buf))
            buf = []
    if buf:
        tokens.append("".join(buf))
    return [t for t in (tok.strip("'") for tok in tokens) if t]


def is_numeric_token(token: str) -> bool:
    """Pure-digit tokens count as numeric and are excluded from vocabularies."""
    return token.isdigit()


@dataclass(frozen=True)
class CategoryLexicon:
    categories: tuple[tuple[int, str], ...]  # (id, name), in declaration order
    exact_entries: dict[str, frozenset[int]]
    prefix_entries: dict[str, frozenset[int]]

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    @property
    def category_names(self) -> list[str]:
        return [name for _, name in self.categories]

    def category_position(self) -> dict[int, int]:
        return {cid: i for i, (cid, _) in enumerate(self.categories)}

    def match(self, token: str) -> frozenset[int]:
        """Category ids for a token: exact entry wins, else the longest prefix."""
        hit = self.exact_entries.get(token)
        if hit is not None:
            return hit
        for length in range(len(token), 0, -1):
            hit = self.prefix_entries.get(token[:length])
            if hit is not None:
                return hit
        return frozenset()


def load_dic(source) -> CategoryLexicon:
    """Parse a percent-delimited .dic dictionary.

    Layout: optional ``#`` comment lines, a ``%`` line, ``<id><TAB><name>``
    category lines, a ``%`` line, then ``<word[*]><TAB><id>[<TAB><id>...]``
    entry lines.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]

    section = 0  # 0 = preamble, 1 = categories, 2 = entries
    categories: list[tuple[int, str]] = []
    ids: set[int] = set()
    names: set[str] = set()
    exact: dict[str, frozenset[int]] = {}
    prefix: dict[str, frozenset[int]] = {}

    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "%":
            section += 1
            if section > 2:
                raise DataError(f"line {line_no}: unexpected extra '%' delimiter")
            continue
        if section == 0:
            raise DataError(f"line {line_no}: content before the first '%' header")
        parts = line.split("\t")
        if section == 1:
            if len(parts) != 2:
                raise DataError(f"line {line_no}: malformed category line {line!r}")
            try:
                cid = int(parts[0])
            except ValueError:
                raise DataError(f"line {line_no}: category id {parts[0]!r} is not an integer")
            name = parts[1].strip()
            if cid in ids:
                raise DataError(f"line {line_no}: duplicate category id {cid}")
            if not name or name in names:
                raise DataError(f"line {line_no}: missing or duplicate category name {name!r}")
            ids.add(cid)
            names.add(name)
            categories.append((cid, name))
        else:
            if len(parts) < 2:
                raise DataError(f"line {line_no}: malformed entry line {line!r}")
            word = parts[0].strip().lower()
            try:
                cats = frozenset(int(p) for p in parts[1:])
            except ValueError:
                raise DataError(f"line {line_no}: non-integer category id in entry {word!r}")
            undeclared = cats - ids
            if undeclared:
                raise DataError(
                    f"line {line_no}: entry {word!r} references undeclared "
                    f"category {sorted(undeclared)[0]}"
                )
            if word.endswith("*"):
                stem = word[:-1]
                if not stem:
                    raise DataError(f"line {line_no}: empty prefix entry")
                prefix[stem] = prefix.get(stem, frozenset()) | cats
            else:
                if not word:
                    raise DataError(f"line {line_no}: empty entry word")
                exact[word] = exact.get(word, frozenset()) | cats
    if section < 2:
        raise DataError("malformed dictionary: expected two '%' delimiters")
    return CategoryLexicon(
        categories=tuple(categories), exact_entries=exact, prefix_entries=prefix
    )


def category_rates(tokens, lexicon: CategoryLexicon) -> np.ndarray:
    """Per-category match rates: matching tokens / all tokens. Zeros when empty."""
    pos = lexicon.category_position()
    counts = np.zeros(lexicon.n_categories)
    if not tokens:
        return counts
    for token in tokens:
        for cid in lexicon.match(token):
            counts[pos[cid]] += 1
    return counts / len(tokens)


@dataclass(frozen=True)
class SentimentLexicon:
    entries: dict[str, tuple[float, float]]  # token -> (polarity, subjectivity)


def load_sentiment_csv(source) -> SentimentLexicon:
    """Read a ``token,polarity,subjectivity`` CSV (header required)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(source))
    if not rows or [c.strip() for c in rows[0]] != ["token", "polarity", "subjectivity"]:
        raise DataError("sentiment lexicon must start with header token,polarity,subjectivity")
    entries: dict[str, tuple[float, float]] = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise DataError(f"sentiment lexicon line {i}: expected 3 columns")
        token = row[0].strip().lower()
        try:
            polarity, subjectivity = float(row[1]), float(row[2])
        except ValueError:
            raise DataError(f"sentiment lexicon line {i}: non-numeric score")
        if not -1.0 <= polarity <= 1.0:
            raise DataError(f"sentiment lexicon line {i}: polarity out of [-1, 1]")
        if not 0.0 <= subjectivity <= 1.0:
            raise DataError(f"sentiment lexicon line {i}: subjectivity out of [0, 1]")
        entries[token] = (polarity, subjectivity)
    return SentimentLexicon(entries=entries)


def sentiment_score(tokens, sentlex: SentimentLexicon) -> tuple[float, float]:
    """Mean (polarity, subjectivity) over tokens found in the lexicon; (0, 0) if none."""
    matched = [sentlex.entries[t] for t in tokens if t in sentlex.entries]
    if not matched:
        return 0.0, 0.0
    polarity = sum(m[0] for m in matched) / len(matched)
    subjectivity = sum(m[1] for m in matched) / len(matched)
    return polarity, subjectivity
