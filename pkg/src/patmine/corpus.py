"""Review corpus handling.

Ingests raw reviews from JSONL or CSV, aggregates annotator votes into gold
labels by majority voting, computes inter-annotator agreement, and produces
deterministic train/test splits:

* ``test``          -- 20% of all reviews, sampled uniformly by seed;
* ``gold_train``    -- labeled reviews outside the test set;
* ``distant_train`` -- all reviews outside the test set (the noisy-label pool).

All corpus artifacts are immutable after load and safe for concurrent reads.

File formats
------------
JSONL: one object per line,
``{"id": str, "text": str, "labels": {"defect": bool?, "improvement": bool?},
"votes": {"defect": [bool], "improvement": [bool]}?}``.
``labels`` wins over ``votes`` when both are present.

CSV: header ``id,text,defect_votes,improvement_votes``; vote cells are
``t``/``f`` characters joined by ``;`` (empty cell = no votes).

Splits export as
``{"seed": int, "test": [id], "gold_train": [id], "distant_train": [id]}``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from random import Random
from typing import Iterable, Mapping, Sequence

from .gazetteer import Gazetteer
from .linguistics import Document, PosTagger, Token, annotate

log = logging.getLogger(__name__)

TEST_FRACTION = 0.20


class CorpusFormatError(ValueError):
    """Raised for malformed or inconsistent corpus input files."""


class FeedbackType(str, Enum):
    DEFECT = "defect"
    IMPROVEMENT = "improvement"

    def __str__(self) -> str:  # cleaner CLI/report output
        return self.value


@dataclass(frozen=True)
class AnnotatorVote:
    feedback_type: FeedbackType
    value: bool
    annotator_id: str


@dataclass(frozen=True)
class RawReview:
    id: str
    text: str
    annotations: tuple[AnnotatorVote, ...] = ()
    explicit_labels: Mapping[FeedbackType, bool] | None = None

    def votes_for(self, feedback_type: FeedbackType) -> list[AnnotatorVote]:
        return [v for v in self.annotations if v.feedback_type is feedback_type]


@dataclass(frozen=True)
class LabeledExample:
    document: Document
    labels: Mapping[FeedbackType, bool]


@dataclass(frozen=True)
class DatasetSplit:
    test: frozenset[str]
    gold_train: frozenset[str]
    distant_train: frozenset[str]
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "test": sorted(self.test),
            "gold_train": sorted(self.gold_train),
            "distant_train": sorted(self.distant_train),
        }

    @staticmethod
    def from_json_dict(obj: Mapping) -> "DatasetSplit":
        return DatasetSplit(
            test=frozenset(obj["test"]),
            gold_train=frozenset(obj["gold_train"]),
            distant_train=frozenset(obj["distant_train"]),
            seed=int(obj["seed"]),
        )


# ---------------------------------------------------------------------------
# ingestion


def ingest(path: str | Path, format: str = "jsonl") -> list[RawReview]:
    """Read reviews from ``path``; ``format`` is ``jsonl`` or ``csv``.

    Rejects duplicate review ids and malformed records, naming the offending
    id or line number.
    """
    if format == "jsonl":
        reviews = _ingest_jsonl(path)
    elif format == "csv":
        reviews = _ingest_csv(path)
    else:
        raise CorpusFormatError(f"unknown corpus format {format!r} (expected jsonl or csv)")
    seen: set[str] = set()
    for r in reviews:
        if r.id in seen:
            raise CorpusFormatError(f"duplicate review id {r.id!r}")
        seen.add(r.id)
    return reviews


def _parse_bool(value, lineno: int):
    if isinstance(value, bool):
        return value
    raise CorpusFormatError(f"line {lineno}: expected a JSON boolean, got {value!r}")


def _votes_from_lists(obj: Mapping, lineno: int) -> tuple[AnnotatorVote, ...]:
    votes: list[AnnotatorVote] = []
    for ft in FeedbackType:
        raw = obj.get(ft.value)
        if raw is None:
            continue
        if not isinstance(raw, list):
            raise CorpusFormatError(f"line {lineno}: votes for {ft.value!r} must be a list of booleans")
        for k, v in enumerate(raw):
            votes.append(AnnotatorVote(ft, _parse_bool(v, lineno), annotator_id=f"a{k}"))
    return tuple(votes)


def _ingest_jsonl(path: str | Path) -> list[RawReview]:
    reviews: list[RawReview] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise CorpusFormatError(f"line {lineno}: record must be an object with 'id' and 'text'")
            rid, text = obj["id"], obj["text"]
            if not isinstance(rid, str) or not rid:
                raise CorpusFormatError(f"line {lineno}: 'id' must be a non-empty string")
            if not isinstance(text, str) or not text:
                raise CorpusFormatError(f"line {lineno}: 'text' must be a non-empty string")
            labels = None
            if "labels" in obj and obj["labels"] is not None:
                labels = {}
                for k, v in obj["labels"].items():
                    try:
                        ft = FeedbackType(k)
                    except ValueError:
                        raise CorpusFormatError(f"line {lineno}: unknown feedback type {k!r} in labels") from None
                    labels[ft] = _parse_bool(v, lineno)
            votes = _votes_from_lists(obj.get("votes") or {}, lineno)
            reviews.append(RawReview(id=rid, text=text, annotations=votes, explicit_labels=labels))
    return reviews


_CSV_HEADER = ["id", "text", "defect_votes", "improvement_votes"]


def _parse_vote_cell(cell: str, ft: FeedbackType, lineno: int) -> list[AnnotatorVote]:
    cell = cell.strip()
    if not cell:
        return []
    votes = []
    for k, ch in enumerate(cell.split(";")):
        ch = ch.strip()
        if ch not in ("t", "f"):
            raise CorpusFormatError(f"line {lineno}: vote {ch!r} is not 't' or 'f'")
        votes.append(AnnotatorVote(ft, ch == "t", annotator_id=f"a{k}"))
    return votes


def _ingest_csv(path: str | Path) -> list[RawReview]:
    reviews: list[RawReview] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusFormatError("line 1: empty CSV file") from None
        if header != _CSV_HEADER:
            raise CorpusFormatError(f"line 1: CSV header must be {','.join(_CSV_HEADER)}")
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != 4:
                raise CorpusFormatError(f"line {lineno}: expected 4 columns, got {len(row)}")
            rid, text, defect_cell, improvement_cell = row
            if not rid or not text:
                raise CorpusFormatError(f"line {lineno}: empty id or text")
            votes = _parse_vote_cell(defect_cell, FeedbackType.DEFECT, lineno) + _parse_vote_cell(
                improvement_cell, FeedbackType.IMPROVEMENT, lineno
            )
            reviews.append(RawReview(id=rid, text=text, annotations=tuple(votes)))
    return reviews


# ---------------------------------------------------------------------------
# gold labels


def majority_vote(votes: Sequence, *, context: str = "") -> bool:
    """True iff strictly more than half the votes are true.

    An exact tie resolves to False (the rare-positive classes make the
    negative default precision-preserving) and is logged as a diagnostic.
    Accepts AnnotatorVotes or plain booleans.
    """
    values = [v.value if isinstance(v, AnnotatorVote) else bool(v) for v in votes]
    if not values:
        raise ValueError("majority_vote requires at least one vote")
    yes = sum(values)
    if 2 * yes == len(values):
        log.warning("majority_vote: exact tie (%d/%d)%s; resolved to False", yes, len(values), f" for {context}" if context else "")
        return False
    return 2 * yes > len(values)


def resolve_labels(review: RawReview) -> dict[FeedbackType, bool]:
    """Gold labels for one review: explicit labels win over vote aggregation."""
    if review.explicit_labels is not None:
        return dict(review.explicit_labels)
    labels: dict[FeedbackType, bool] = {}
    for ft in FeedbackType:
        votes = review.votes_for(ft)
        if votes:
            labels[ft] = majority_vote(votes, context=f"review {review.id} / {ft.value}")
    return labels


# ---------------------------------------------------------------------------
# inter-annotator agreement


def _clean_count_table(counts: Sequence[Sequence[int]]) -> list[list[int]]:
    """Keep only rows whose total matches the modal rating count; report the rest."""
    rows = [list(map(int, row)) for row in counts]
    if not rows:
        raise ValueError("agreement statistics require at least one review")
    totals = [sum(r) for r in rows]
    modal = max(sorted(set(totals)), key=totals.count)
    kept = [r for r, t in zip(rows, totals) if t == modal]
    dropped = len(rows) - len(kept)
    if dropped:
        log.warning("agreement: excluded %d review(s) with a rating count different from the modal %d", dropped, modal)
    return kept


def fleiss_kappa(counts: Sequence[Sequence[int]]) -> float:
    """Fleiss' kappa over a reviews-by-categories count table.

    Each row gives per-category vote counts for one review; all retained rows
    must share the same number of ratings n >= 2 (rows with a deviating count
    are excluded and reported).  When expected agreement is 1 (all votes in a
    single category) the value is 1.0 by convention.
    """
    rows = _clean_count_table(counts)
    if len(rows) < 2:
        raise ValueError("fleiss_kappa requires at least 2 reviews with the modal rating count")
    n = sum(rows[0])
    if n < 2:
        raise ValueError("fleiss_kappa requires at least 2 ratings per review")
    n_reviews = len(rows)
    n_categories = len(rows[0])
    p_observed = sum(
        (sum(c * c for c in row) - n) / (n * (n - 1)) for row in rows
    ) / n_reviews
    category_shares = [
        sum(row[j] for row in rows) / (n_reviews * n) for j in range(n_categories)
    ]
    p_expected = sum(p * p for p in category_shares)
    if p_expected >= 1.0:
        log.warning("fleiss_kappa: expected agreement is 1 (single-category votes); returning 1.0 by convention")
        return 1.0
    return (p_observed - p_expected) / (1.0 - p_expected)


def percent_agreement(counts: Sequence[Sequence[int]]) -> float:
    """Raw observed agreement in [0, 1]: mean per-review pairwise agreement.

    This is the chance-uncorrected companion to :func:`fleiss_kappa`; report
    the two separately since they answer different questions.
    """
    rows = _clean_count_table(counts)
    n = sum(rows[0])
    if n < 2:
        raise ValueError("percent_agreement requires at least 2 ratings per review")
    return sum((sum(c * c for c in row) - n) / (n * (n - 1)) for row in rows) / len(rows)


def vote_count_table(reviews: Iterable[RawReview], feedback_type: FeedbackType) -> list[list[int]]:
    """Per-review [positive, negative] vote counts for one feedback type."""
    table = []
    for r in reviews:
        votes = r.votes_for(feedback_type)
        if votes:
            yes = sum(v.value for v in votes)
            table.append([yes, len(votes) - yes])
    return table


# ---------------------------------------------------------------------------
# splitting


def split(reviews: Sequence[RawReview], seed: int) -> DatasetSplit:
    """Deterministic split: 20% test sampled uniformly over ALL reviews first,
    then gold_train = labeled reviews outside test, distant_train = all
    reviews outside test."""
    if not reviews:
        raise ValueError("split requires a non-empty review list")
    ids = sorted(r.id for r in reviews)
    n_test = round(TEST_FRACTION * len(ids))
    rng = Random(seed)
    test = frozenset(rng.sample(ids, n_test))
    labeled = {r.id for r in reviews if resolve_labels(r)}
    gold_train = frozenset(labeled - test)
    distant_train = frozenset(set(ids) - test)
    return DatasetSplit(test=test, gold_train=gold_train, distant_train=distant_train, seed=seed)


# ---------------------------------------------------------------------------
# prepared corpus (annotated documents + labels + split)


@dataclass
class PreparedCorpus:
    """Output of the ingest pipeline: annotated documents, gold labels, split."""

    documents: dict[str, Document]
    labels: dict[str, dict[FeedbackType, bool]]
    split: DatasetSplit
    texts: dict[str, str] = field(default_factory=dict)

    def documents_for(self, ids: Iterable[str]) -> list[Document]:
        return [self.documents[i] for i in sorted(ids)]

    def labeled_for(self, ids: Iterable[str], feedback_type: FeedbackType) -> list[tuple[Document, bool]]:
        """(document, label) pairs restricted to ids labeled for the given type."""
        out = []
        for i in sorted(ids):
            lbl = self.labels.get(i, {})
            if feedback_type in lbl:
                out.append((self.documents[i], lbl[feedback_type]))
        return out


def prepare(
    reviews: Sequence[RawReview],
    gazetteer: Gazetteer,
    seed: int,
    tagger: PosTagger | None = None,
) -> PreparedCorpus:
    documents = {r.id: annotate(r, gazetteer, tagger) for r in reviews}
    labels = {r.id: lbls for r in reviews if (lbls := resolve_labels(r))}
    return PreparedCorpus(
        documents=documents,
        labels=labels,
        split=split(reviews, seed),
        texts={r.id: r.text for r in reviews},
    )


def save_prepared(corpus: PreparedCorpus, path: str | Path) -> None:
    docs = []
    for rid in sorted(corpus.documents):
        doc = corpus.documents[rid]
        docs.append(
            {
                "id": rid,
                "text": corpus.texts.get(rid, ""),
                "tokens": [
                    {"surface": t.surface, "pos": t.pos, "entities": sorted(t.entity_types)}
                    for t in doc.tokens
                ],
                "labels": {ft.value: v for ft, v in sorted(corpus.labels.get(rid, {}).items())},
            }
        )
    payload = {"seed": corpus.split.seed, "split": corpus.split.to_json_dict(), "documents": docs}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def load_prepared(path: str | Path) -> PreparedCorpus:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    documents: dict[str, Document] = {}
    labels: dict[str, dict[FeedbackType, bool]] = {}
    texts: dict[str, str] = {}
    for rec in payload["documents"]:
        rid = rec["id"]
        tokens = tuple(
            Token(
                surface=t["surface"],
                norm=t["surface"].casefold(),
                pos=t["pos"],
                entity_types=frozenset(t.get("entities", ())),
            )
            for t in rec["tokens"]
        )
        documents[rid] = Document(review_id=rid, tokens=tokens)
        if rec.get("labels"):
            labels[rid] = {FeedbackType(k): bool(v) for k, v in rec["labels"].items()}
        texts[rid] = rec.get("text", "")
    return PreparedCorpus(
        documents=documents,
        labels=labels,
        split=DatasetSplit.from_json_dict(payload["split"]),
        texts=texts,
    )
