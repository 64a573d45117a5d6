"""Tokenization, part-of-speech tagging, and entity annotation.

Turns raw review text into the :class:`Document` representation that all
pattern matching operates on: an ordered list of tokens, each carrying its
surface form, a case-folded norm, a Penn Treebank POS tag, and the set of
gazetteer entity types covering it.

POS tagging sits behind a small provider interface.  Two providers ship:

* :class:`RuleTagger` -- a deterministic baseline (lexicon of a few hundred
  frequent words, suffix rules, default ``NN``).  Matching correctness must
  not depend on tagger quality, so this is intentionally simple.
* pre-tagged input -- :func:`documents_from_pretagged` trusts tags supplied
  in the input file and only adds entity annotations.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .gazetteer import Gazetteer, lookup

_PUNCT = set(string.punctuation)
# clitics split off the end of a word, longest first
_CLITICS = ("n't", "'re", "'ve", "'ll", "'m", "'d", "'s")


@dataclass(frozen=True)
class Token:
    """One token of a review.

    ``norm`` is the case-folded surface form; ``entity_types`` holds every
    gazetteer key whose entry set covers this token (including via a
    multi-word phrase).
    """

    surface: str
    norm: str
    pos: str
    entity_types: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Document:
    review_id: str
    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str) -> list[str]:
    """Split text into surface tokens.

    Whitespace separates chunks; leading/trailing punctuation is peeled off
    into separate tokens (runs of the same character, e.g. ``...``, stay
    together); English contractions are split PTB-style, so ``can't``
    becomes ``ca`` + ``n't`` and ``haven't`` becomes ``have`` + ``n't``.
    """
    out: list[str] = []
    for chunk in text.split():
        out.extend(_split_chunk(chunk))
    return out


def _split_chunk(chunk: str) -> list[str]:
    lead: list[str] = []
    trail: list[str] = []
    while chunk and chunk[0] in _PUNCT:
        run = 1
        while run < len(chunk) and chunk[run] == chunk[0]:
            run += 1
        lead.append(chunk[:run])
        chunk = chunk[run:]
    while chunk and chunk[-1] in _PUNCT:
        run = 1
        while run < len(chunk) and chunk[-1 - run] == chunk[-1]:
            run += 1
        trail.append(chunk[-run:])
        chunk = chunk[:-run]
    core = _split_contraction(chunk) if chunk else []
    return lead + core + list(reversed(trail))


def _split_contraction(word: str) -> list[str]:
    folded = word.casefold()
    if folded == "cannot":
        return [word[:3], word[3:]]
    for clitic in _CLITICS:
        if folded.endswith(clitic) and len(word) > len(clitic):
            cut = len(word) - len(clitic)
            return [word[:cut], word[cut:]]
    return [word]


class PosTagger(Protocol):
    def tag(self, tokens: Sequence[str]) -> list[str]: ...


def load_tagset(path: str | Path | None = None) -> frozenset[str]:
    """Tagset file: one tag per line, '#' comments allowed.

    A line consisting of a single '#' is the Penn Treebank pound-sign tag,
    not a comment.
    """
    if path is None:
        text = resources.files("patmine.data").joinpath("tagset.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    tags = [ln.strip() for ln in text.splitlines()]
    return frozenset(t for t in tags if t and (t == "#" or not t.startswith("#")))


def _load_lexicon() -> dict[str, str]:
    text = resources.files("patmine.data").joinpath("tag_lexicon.txt").read_text(encoding="utf-8")
    lex: dict[str, str] = {}
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        word, tag = ln.rsplit(None, 1)
        lex[word.casefold()] = tag
    return lex


class RuleTagger:
    """Deterministic baseline tagger: lexicon, then shape/suffix rules, then NN.

    Every emitted tag is a member of the declared tagset.
    """

    _SENTENCE_END = {".", "!", "?"}

    def __init__(self, tagset: frozenset[str] | None = None):
        self.tagset = tagset if tagset is not None else load_tagset()
        self.lexicon = _load_lexicon()
        bad = set(self.lexicon.values()) - self.tagset
        if bad:
            raise ValueError(f"lexicon uses tags outside the tagset: {sorted(bad)}")

    def tag(self, tokens: Sequence[str]) -> list[str]:
        return [self._tag_one(t) for t in tokens]

    def _tag_one(self, surface: str) -> str:
        # case-insensitive throughout, so annotation is stable under case changes
        norm = surface.casefold()
        if norm in self.lexicon:
            return self.lexicon[norm]
        if all(c in _PUNCT for c in surface):
            return self._punct_tag(surface)
        if _is_number(norm):
            return "CD"
        return self._suffix_tag(norm)

    def _punct_tag(self, surface: str) -> str:
        c = surface[0]
        if c in self._SENTENCE_END:
            return "."
        if c == ",":
            return ","
        if c in "\"'`":
            return "''"
        if c == "(":
            return "-LRB-"
        if c == ")":
            return "-RRB-"
        if c == "#":
            return "#"
        if c == "$":
            return "$"
        if c in ";:-/":
            return ":"
        return "SYM"

    @staticmethod
    def _suffix_tag(norm: str) -> str:
        if norm.endswith("ing") and len(norm) > 4:
            return "VBG"
        if norm.endswith("ed") and len(norm) > 3:
            return "VBD"
        if norm.endswith("ly") and len(norm) > 3:
            return "RB"
        if norm.endswith(("tion", "ment", "ness", "ity")):
            return "NN"
        if norm.endswith("s") and not norm.endswith("ss") and len(norm) > 3:
            return "NNS"
        return "NN"


def _is_number(norm: str) -> bool:
    stripped = norm.replace(",", "").replace(".", "")
    return stripped.isdigit() and bool(stripped)


def tag_pos(tokens: Sequence[str], tagger: PosTagger | None = None) -> list[str]:
    """One Penn Treebank tag per surface token; deterministic."""
    if tagger is None:
        tagger = _default_tagger()
    return tagger.tag(tokens)


_DEFAULT_TAGGER: RuleTagger | None = None


def _default_tagger() -> RuleTagger:
    global _DEFAULT_TAGGER
    if _DEFAULT_TAGGER is None:
        _DEFAULT_TAGGER = RuleTagger()
    return _DEFAULT_TAGGER


def _entity_spans(norms: Sequence[str], gaz: Gazetteer) -> list[frozenset[str]]:
    """Entity types covering each token; multi-word entries mark every covered token."""
    covered: list[set[str]] = [set() for _ in norms]
    max_len = min(gaz.max_phrase_len, len(norms))
    for start in range(len(norms)):
        for length in range(1, max_len + 1):
            if start + length > len(norms):
                break
            phrase = " ".join(norms[start : start + length])
            for key in lookup(gaz, phrase):
                for k in range(start, start + length):
                    covered[k].add(key)
    return [frozenset(s) for s in covered]


def annotate(review, gazetteer: Gazetteer, tagger: PosTagger | None = None) -> Document:
    """Build the annotated Document for a review.

    Pure function of (review text, gazetteer, tagger): identical inputs give
    identical Documents.  ``review`` needs ``id`` and ``text`` attributes.
    """
    surfaces = tokenize(review.text)
    tags = tag_pos(surfaces, tagger)
    norms = [s.casefold() for s in surfaces]
    entities = _entity_spans(norms, gazetteer)
    tokens = tuple(
        Token(surface=s, norm=n, pos=p, entity_types=e)
        for s, n, p, e in zip(surfaces, norms, tags, entities)
    )
    return Document(review_id=review.id, tokens=tokens)


def documents_from_pretagged(
    path: str | Path, gazetteer: Gazetteer, tagset: frozenset[str] | None = None
) -> list[Document]:
    """Load the pre-tagged JSONL variant: ``{"id": ..., "tokens": [{"surface", "pos"}]}``.

    Tags are passed through untouched but validated against the tagset;
    entity annotation is applied here.
    """
    tagset = tagset if tagset is not None else load_tagset()
    docs: list[Document] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                review_id = obj["id"]
                pairs = [(t["surface"], t["pos"]) for t in obj["tokens"]]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"line {lineno}: malformed pre-tagged record ({exc})") from exc
            for _, pos in pairs:
                if pos not in tagset:
                    raise ValueError(f"line {lineno}: tag {pos!r} not in the declared tagset")
            norms = [s.casefold() for s, _ in pairs]
            entities = _entity_spans(norms, gazetteer)
            tokens = tuple(
                Token(surface=s, norm=n, pos=p, entity_types=e)
                for (s, p), n, e in zip(pairs, norms, entities)
            )
            docs.append(Document(review_id=review_id, tokens=tokens))
    return docs
