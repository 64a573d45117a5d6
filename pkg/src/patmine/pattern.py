"""Lexico-semantic pattern trees and their matching engine.

A pattern is an immutable AST over two node families:

* function nodes -- ``Sequence``, ``And``, ``Or``, ``Not``, ``Repetition``;
* terminal nodes -- ``Literal``, ``Pos``, ``Wildcard``, ``EntityType`` --
  each a predicate over exactly one token.

Matching semantics
------------------
Token-level nodes (terminals and ``And``/``Or``/``Not`` combinations of
them) consume exactly one token.  A ``Sequence`` matches its children
contiguously, in order, with no gaps; positional freedom comes from the
document-level existential over start positions, and an explicit gap is
written as ``REP(*)``.  A ``Repetition`` greedily consumes the maximal run
of consecutive tokens matching its single token-level child and succeeds
only if the run has length >= 2.  A document matches a pattern iff some
start position yields a span match.

The textual DSL mirrors the tree shape::

    SEQ(lit(please), pos(VB))
    OR(lit(however|but), lit(not|n't))
    SEQ(ent(software update), REP(*), lit(stars))

``lit`` holds alternative token norms separated by ``|``; an ``OR`` whose
children are all literals is semantically identical to a multi-valued
``lit`` and the printer canonicalizes it to one.

Patterns and groups are immutable values; matching is pure and safe to run
concurrently across documents and patterns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence as Seq

from .corpus import FeedbackType
from .linguistics import Document, Token

MAX_DEPTH_DEFAULT = 5
MAX_CHILDREN_DEFAULT = 4

# characters that would break the DSL round trip if they appeared in values
_FORBIDDEN_VALUE_CHARS = set("()|\n\t")


class Kind(Enum):
    SEQUENCE = "sequence"
    AND = "and"
    OR = "or"
    NOT = "not"
    REPETITION = "repetition"
    LITERAL = "literal"
    POS = "pos"
    WILDCARD = "wildcard"
    ENTITY = "entity_type"


FUNCTION_KINDS = frozenset({Kind.SEQUENCE, Kind.AND, Kind.OR, Kind.NOT, Kind.REPETITION})
TERMINAL_KINDS = frozenset({Kind.LITERAL, Kind.POS, Kind.WILDCARD, Kind.ENTITY})
TOKEN_FUNCTION_KINDS = frozenset({Kind.AND, Kind.OR, Kind.NOT})
# node kinds that consume exactly one token
TOKEN_LEVEL_KINDS = TERMINAL_KINDS | TOKEN_FUNCTION_KINDS

_MIN_ARITY = {Kind.SEQUENCE: 1, Kind.AND: 2, Kind.OR: 1, Kind.NOT: 1, Kind.REPETITION: 1}
_MAX_ARITY_FIXED = {Kind.REPETITION: 1}


class PatternInvariantError(ValueError):
    """A tree violates a structural invariant; the message names the rule."""


class DslSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


@dataclass(frozen=True)
class PatternNode:
    kind: Kind
    values: frozenset[str] = frozenset()
    children: tuple["PatternNode", ...] = ()

    @property
    def value(self) -> str:
        """The single value of a Pos/EntityType terminal."""
        return next(iter(self.values))

    def __repr__(self) -> str:
        return f"PatternNode<{print_dsl(self, canonical=False)}>"


# -- constructors -----------------------------------------------------------


def lit(*values: str) -> PatternNode:
    return PatternNode(Kind.LITERAL, values=frozenset(v.casefold() for v in values))


def pos(tag: str) -> PatternNode:
    return PatternNode(Kind.POS, values=frozenset({tag}))


def ent(key: str) -> PatternNode:
    return PatternNode(Kind.ENTITY, values=frozenset({key.casefold()}))


def wildcard() -> PatternNode:
    return PatternNode(Kind.WILDCARD)


def seq(*children: PatternNode) -> PatternNode:
    return PatternNode(Kind.SEQUENCE, children=tuple(children))


def and_(*children: PatternNode) -> PatternNode:
    return PatternNode(Kind.AND, children=tuple(children))


def or_(*children: PatternNode) -> PatternNode:
    return PatternNode(Kind.OR, children=tuple(children))


def not_(*children: PatternNode) -> PatternNode:
    return PatternNode(Kind.NOT, children=tuple(children))


def rep(child: PatternNode) -> PatternNode:
    return PatternNode(Kind.REPETITION, children=(child,))


# -- structure helpers ------------------------------------------------------


def is_token_level(node: PatternNode) -> bool:
    """True for nodes that consume exactly one token when matching."""
    if node.kind in TERMINAL_KINDS:
        return True
    if node.kind in TOKEN_FUNCTION_KINDS:
        return all(is_token_level(c) for c in node.children)
    return False


def depth(node: PatternNode) -> int:
    if not node.children:
        return 1
    return 1 + max(depth(c) for c in node.children)


def size(node: PatternNode) -> int:
    return 1 + sum(size(c) for c in node.children)


def iter_nodes(node: PatternNode) -> Iterator[PatternNode]:
    yield node
    for c in node.children:
        yield from iter_nodes(c)


def validate(
    node: PatternNode,
    max_depth: int = MAX_DEPTH_DEFAULT,
    max_children: int = MAX_CHILDREN_DEFAULT,
) -> None:
    """Check every structural invariant; raise PatternInvariantError naming the rule."""
    if node.kind is Kind.NOT:
        raise PatternInvariantError("root-not-forbidden: a bare Not root would match almost everything")
    d = depth(node)
    if d > max_depth:
        raise PatternInvariantError(f"max-depth: tree depth {d} exceeds limit {max_depth}")
    for n in iter_nodes(node):
        _validate_node(n, max_children)


def _validate_node(n: PatternNode, max_children: int) -> None:
    if n.kind in TERMINAL_KINDS:
        if n.children:
            raise PatternInvariantError(f"terminal-no-children: {n.kind.value} node must be a leaf")
        _validate_values(n)
        return
    lo = _MIN_ARITY[n.kind]
    hi = _MAX_ARITY_FIXED.get(n.kind, max_children)
    if not (lo <= len(n.children) <= hi):
        raise PatternInvariantError(
            f"arity: {n.kind.value} requires between {lo} and {hi} children, got {len(n.children)}"
        )
    if n.values:
        raise PatternInvariantError(f"function-no-values: {n.kind.value} node carries terminal values")
    if n.kind is not Kind.SEQUENCE:
        for c in n.children:
            if not is_token_level(c):
                raise PatternInvariantError(
                    f"token-level-children: {n.kind.value} child {c.kind.value} is not token-level"
                )


def _validate_values(n: PatternNode) -> None:
    expected = {Kind.LITERAL: "1+", Kind.POS: "1", Kind.ENTITY: "1", Kind.WILDCARD: "0"}[n.kind]
    count = len(n.values)
    ok = (expected == "1+" and count >= 1) or (expected == "1" and count == 1) or (expected == "0" and count == 0)
    if not ok:
        raise PatternInvariantError(f"value-arity: {n.kind.value} expects {expected} value(s), got {count}")
    for v in n.values:
        if not v or v != v.strip():
            raise PatternInvariantError(f"value-shape: {n.kind.value} value {v!r} is empty or has outer whitespace")
        if set(v) & _FORBIDDEN_VALUE_CHARS:
            raise PatternInvariantError(f"value-shape: {n.kind.value} value {v!r} contains a reserved character")
        if n.kind is not Kind.ENTITY and any(ch.isspace() for ch in v):
            raise PatternInvariantError(f"value-shape: {n.kind.value} value {v!r} may not contain whitespace")


# -- matching ---------------------------------------------------------------


def token_match(node: PatternNode, token: Token) -> bool:
    """Evaluate a token-level node against one token."""
    kind = node.kind
    if kind is Kind.LITERAL:
        return token.norm in node.values
    if kind is Kind.POS:
        return token.pos == node.value
    if kind is Kind.WILDCARD:
        return True
    if kind is Kind.ENTITY:
        return node.value in token.entity_types
    if kind is Kind.AND:
        return all(token_match(c, token) for c in node.children)
    if kind is Kind.OR:
        return any(token_match(c, token) for c in node.children)
    if kind is Kind.NOT:
        return not any(token_match(c, token) for c in node.children)
    raise ValueError(f"token_match requires a token-level node, got {kind.value}")


def span_match(node: PatternNode, doc: Document, start: int) -> Optional[int]:
    """Number of tokens consumed by a match beginning exactly at ``start``, or None."""
    tokens = doc.tokens
    if not 0 <= start <= len(tokens):
        raise ValueError(f"start {start} out of range for a {len(tokens)}-token document")
    kind = node.kind
    if kind in TOKEN_LEVEL_KINDS:
        if start < len(tokens) and token_match(node, tokens[start]):
            return 1
        return None
    if kind is Kind.SEQUENCE:
        i = start
        for child in node.children:
            consumed = span_match(child, doc, i)
            if consumed is None:
                return None
            i += consumed
        return i - start
    # Repetition: greedy maximal run of its token-level child, minimum length 2
    child = node.children[0]
    i = start
    while i < len(tokens) and token_match(child, tokens[i]):
        i += 1
    run = i - start
    return run if run >= 2 else None


def doc_match(pattern: PatternNode, doc: Document) -> bool:
    """True iff the pattern matches at some start position of the document."""
    return any(span_match(pattern, doc, i) is not None for i in range(len(doc.tokens)))


# -- compiled matcher -------------------------------------------------------
#
# The recursive matcher above is the reference implementation.  Evolutionary
# search evaluates the same tree against thousands of documents, so trees can
# also be compiled once into nested closures running on plain tuples.  The
# two routes must agree everywhere; the test suite checks them against each
# other and against an independent brute-force matcher.

PreparedDoc = tuple[tuple[str, ...], tuple[str, ...], tuple[frozenset, ...], int]


def prepare_document(doc: Document) -> PreparedDoc:
    norms = tuple(t.norm for t in doc.tokens)
    tags = tuple(t.pos for t in doc.tokens)
    ents = tuple(t.entity_types for t in doc.tokens)
    return norms, tags, ents, len(norms)


def _compile_token_pred(node: PatternNode) -> Callable:
    kind = node.kind
    if kind is Kind.LITERAL:
        vals = node.values
        return lambda N, T, E, i: N[i] in vals
    if kind is Kind.POS:
        tag = node.value
        return lambda N, T, E, i: T[i] == tag
    if kind is Kind.WILDCARD:
        return lambda N, T, E, i: True
    if kind is Kind.ENTITY:
        key = node.value
        return lambda N, T, E, i: key in E[i]
    preds = tuple(_compile_token_pred(c) for c in node.children)
    if kind is Kind.AND:
        return lambda N, T, E, i: all(p(N, T, E, i) for p in preds)
    if kind is Kind.OR:
        return lambda N, T, E, i: any(p(N, T, E, i) for p in preds)
    if kind is Kind.NOT:
        return lambda N, T, E, i: not any(p(N, T, E, i) for p in preds)
    raise ValueError(f"not a token-level node: {kind.value}")


def _compile_span(node: PatternNode) -> Callable:
    kind = node.kind
    if kind in TOKEN_LEVEL_KINDS:
        pred = _compile_token_pred(node)

        def tok_span(N, T, E, n, i, _p=pred):
            return 1 if i < n and _p(N, T, E, i) else None

        return tok_span
    if kind is Kind.SEQUENCE:
        spans = tuple(_compile_span(c) for c in node.children)

        def seq_span(N, T, E, n, i, _spans=spans):
            j = i
            for s in _spans:
                consumed = s(N, T, E, n, j)
                if consumed is None:
                    return None
                j += consumed
            return j - i

        return seq_span
    pred = _compile_token_pred(node.children[0])

    def rep_span(N, T, E, n, i, _p=pred):
        j = i
        while j < n and _p(N, T, E, j):
            j += 1
        run = j - i
        return run if run >= 2 else None

    return rep_span


def compile_matcher(node: PatternNode) -> Callable[[PreparedDoc], bool]:
    """Compile a tree into a fast document predicate over prepared documents."""
    span = _compile_span(node)

    def match(prep: PreparedDoc, _span=span) -> bool:
        N, T, E, n = prep
        for i in range(n):
            if _span(N, T, E, n, i) is not None:
                return True
        return False

    return match


# -- groups -----------------------------------------------------------------


class Provenance(str, Enum):
    MANUAL = "manual"
    LEARNED = "learned"


@dataclass(frozen=True)
class PatternGroup:
    """Ordered disjunction of patterns for one feedback type."""

    feedback_type: FeedbackType
    patterns: tuple[PatternNode, ...]
    provenance: Provenance = Provenance.MANUAL


def group_label(group: PatternGroup, doc: Document) -> bool:
    """True iff any pattern in the group matches the document."""
    if not group.patterns:
        raise ValueError("group_label requires a non-empty pattern group")
    return any(doc_match(p, doc) for p in group.patterns)


# -- DSL --------------------------------------------------------------------

_FUNC_NAMES = {"SEQ": Kind.SEQUENCE, "AND": Kind.AND, "OR": Kind.OR, "NOT": Kind.NOT, "REP": Kind.REPETITION}
_TERMINAL_NAMES = {"lit", "pos", "ent"}


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def skip_ws(self) -> None:
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise DslSyntaxError(f"expected {ch!r}", self.i)
        self.i += 1

    def read_name(self) -> str:
        start = self.i
        while self.i < len(self.text) and (self.text[self.i].isalpha() or self.text[self.i] == "_"):
            self.i += 1
        return self.text[start : self.i]

    def read_until_close(self) -> str:
        start = self.i
        while self.i < len(self.text) and self.text[self.i] != ")":
            self.i += 1
        if self.i >= len(self.text):
            raise DslSyntaxError("unterminated terminal argument", start)
        return self.text[start : self.i]


def parse_dsl(
    text: str,
    max_depth: int = MAX_DEPTH_DEFAULT,
    max_children: int = MAX_CHILDREN_DEFAULT,
) -> PatternNode:
    """Parse the pattern DSL into a validated tree.

    Raises DslSyntaxError (with offset) for malformed syntax and
    PatternInvariantError (naming the rule) for structurally invalid trees.
    """
    s = _Scanner(text)
    node = _parse_node(s)
    s.skip_ws()
    if s.i != len(s.text):
        raise DslSyntaxError("unexpected trailing input", s.i)
    validate(node, max_depth=max_depth, max_children=max_children)
    return node


def _parse_node(s: _Scanner) -> PatternNode:
    s.skip_ws()
    if s.peek() == "*":
        s.i += 1
        return wildcard()
    name_at = s.i
    name = s.read_name()
    if not name:
        raise DslSyntaxError("expected a node", s.i)
    s.skip_ws()
    s.expect("(")
    upper = name.upper()
    if upper in _FUNC_NAMES:
        children = [_parse_node(s)]
        s.skip_ws()
        while s.peek() == ",":
            s.i += 1
            children.append(_parse_node(s))
            s.skip_ws()
        s.expect(")")
        return PatternNode(_FUNC_NAMES[upper], children=tuple(children))
    lower = name.lower()
    if lower not in _TERMINAL_NAMES:
        raise DslSyntaxError(f"unknown node type {name!r}", name_at)
    raw = s.read_until_close()
    s.expect(")")
    if lower == "lit":
        parts = [p.strip() for p in raw.split("|")]
        if any(not p for p in parts):
            raise DslSyntaxError("empty literal alternative", name_at)
        return lit(*parts)
    value = raw.strip()
    if not value:
        raise DslSyntaxError(f"{lower} requires a value", name_at)
    if lower == "pos":
        return pos(value)
    return ent(value)


def canonicalize(node: PatternNode) -> PatternNode:
    """Canonical form: an Or whose children are all literals collapses into
    one multi-valued literal (the two are semantically identical)."""
    if node.kind in TERMINAL_KINDS:
        return node
    children = tuple(canonicalize(c) for c in node.children)
    if node.kind is Kind.OR and all(c.kind is Kind.LITERAL for c in children):
        merged: set[str] = set()
        for c in children:
            merged |= c.values
        return PatternNode(Kind.LITERAL, values=frozenset(merged))
    return PatternNode(node.kind, children=children)


def print_dsl(node: PatternNode, canonical: bool = True) -> str:
    """Render a tree in the DSL; inverse of parse_dsl up to canonicalization."""
    if canonical:
        node = canonicalize(node)
    return _render(node)


def _render(node: PatternNode) -> str:
    kind = node.kind
    if kind is Kind.WILDCARD:
        return "*"
    if kind is Kind.LITERAL:
        return f"lit({'|'.join(sorted(node.values))})"
    if kind is Kind.POS:
        return f"pos({node.value})"
    if kind is Kind.ENTITY:
        return f"ent({node.value})"
    name = {Kind.SEQUENCE: "SEQ", Kind.AND: "AND", Kind.OR: "OR", Kind.NOT: "NOT", Kind.REPETITION: "REP"}[kind]
    return f"{name}({', '.join(_render(c) for c in node.children)})"


# -- serialization ----------------------------------------------------------


def node_to_json_dict(node: PatternNode) -> dict:
    return {
        "kind": node.kind.value,
        "values": sorted(node.values),
        "children": [node_to_json_dict(c) for c in node.children],
    }


def node_from_json_dict(obj: Mapping) -> PatternNode:
    node = PatternNode(
        kind=Kind(obj["kind"]),
        values=frozenset(obj.get("values", ())),
        children=tuple(node_from_json_dict(c) for c in obj.get("children", ())),
    )
    return node


def group_to_json_dict(group: PatternGroup) -> dict:
    return {
        "feedback_type": group.feedback_type.value,
        "provenance": group.provenance.value,
        "patterns": [node_to_json_dict(p) for p in group.patterns],
        "dsl": [print_dsl(p) for p in group.patterns],
    }


def group_from_json_dict(obj: Mapping) -> PatternGroup:
    patterns = tuple(node_from_json_dict(p) for p in obj["patterns"])
    for p in patterns:
        validate(p)
    return PatternGroup(
        feedback_type=FeedbackType(obj["feedback_type"]),
        patterns=patterns,
        provenance=Provenance(obj.get("provenance", "manual")),
    )


def save_group(group: PatternGroup, path: str | Path) -> None:
    """Write a group as JSON (`.json`) or one DSL pattern per line (anything else)."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(group_to_json_dict(group), fh, sort_keys=True, indent=2)
            fh.write("\n")
        return
    lines = [
        f"# feedback_type: {group.feedback_type.value}",
        f"# provenance: {group.provenance.value}",
    ]
    lines += [print_dsl(p) for p in group.patterns]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_group_dsl(text: str) -> PatternGroup:
    """Parse a DSL group file body: one pattern per line, '#' comments, with
    optional '# feedback_type:' and '# provenance:' headers."""
    feedback_type = FeedbackType.DEFECT
    provenance = Provenance.MANUAL
    patterns: list[PatternNode] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("feedback_type:"):
                feedback_type = FeedbackType(body.split(":", 1)[1].strip())
            elif body.startswith("provenance:"):
                provenance = Provenance(body.split(":", 1)[1].strip())
            continue
        patterns.append(parse_dsl(line))
    return PatternGroup(feedback_type=feedback_type, patterns=tuple(patterns), provenance=provenance)


def load_group(path: str | Path) -> PatternGroup:
    path = Path(path)
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            return group_from_json_dict(json.load(fh))
    return parse_group_dsl(path.read_text(encoding="utf-8"))
