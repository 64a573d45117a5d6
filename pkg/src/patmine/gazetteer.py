"""Entity-type lexicon: load, validate, and query.

A gazetteer maps an entity-type name (e.g. ``app``) to a set of lexical
entries.  Entries are case-folded phrases of one to four tokens; multi-word
entries are matched at token granularity by the annotator in
:mod:`patmine.linguistics`.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

MAX_PHRASE_TOKENS = 4


class GazetteerFormatError(ValueError):
    """Raised when a gazetteer file violates the format contract."""


class Gazetteer:
    """Immutable mapping from entity-type name to its set of lexical entries.

    Safe to share across threads once constructed.
    """

    def __init__(self, entries: Mapping[str, Iterable[str]]):
        normalized: dict[str, frozenset[str]] = {}
        for key, terms in entries.items():
            key = key.strip()
            if not key:
                raise GazetteerFormatError("empty entity-type name")
            folded = frozenset(t.strip().casefold() for t in terms)
            if not folded or "" in folded:
                raise GazetteerFormatError(f"entity type {key!r} has an empty entry set or empty term")
            for t in folded:
                if len(t.split()) > MAX_PHRASE_TOKENS:
                    raise GazetteerFormatError(f"entity type {key!r}: term {t!r} exceeds {MAX_PHRASE_TOKENS} tokens")
            normalized[key] = folded
        self.entries: dict[str, frozenset[str]] = normalized
        index: dict[str, set[str]] = {}
        for key, folded in normalized.items():
            for t in folded:
                index.setdefault(t, set()).add(key)
        self._index: dict[str, frozenset[str]] = {t: frozenset(k) for t, k in index.items()}
        self.max_phrase_len: int = max((len(t.split()) for t in self._index), default=1)

    @property
    def keys(self) -> frozenset[str]:
        return frozenset(self.entries)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __repr__(self) -> str:
        return f"Gazetteer({len(self.entries)} types, {len(self._index)} terms)"


def load_gazetteer(path: str | Path | None = None) -> Gazetteer:
    """Parse a gazetteer file; with no path, load the bundled default.

    Format: one ``type_name: term1, term2, ...`` line per entity type,
    ``#`` comments and blank lines ignored.  Repeated lines for the same
    type merge their term lists.
    """
    if path is None:
        text = resources.files("patmine.data").joinpath("gazetteer.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise GazetteerFormatError(f"line {lineno}: expected 'type: term, term, ...'")
        key, _, rest = line.partition(":")
        terms = [t for t in (s.strip() for s in rest.split(",")) if t]
        if not terms:
            raise GazetteerFormatError(f"line {lineno}: entity type {key.strip()!r} has no terms")
        entries.setdefault(key.strip(), []).extend(terms)
    if not entries:
        raise GazetteerFormatError("gazetteer file defines no entity types")
    return Gazetteer(entries)


def lookup(gaz: Gazetteer, phrase: str) -> frozenset[str]:
    """All entity-type names whose entry set contains the case-folded phrase."""
    return gaz._index.get(phrase.casefold(), frozenset())
