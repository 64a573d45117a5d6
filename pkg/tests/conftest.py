import json
from importlib import resources

import pytest

from patmine.corpus import RawReview
from patmine.gazetteer import Gazetteer, load_gazetteer
from patmine.linguistics import Document, Token, annotate


@pytest.fixture(scope="session")
def default_gazetteer() -> Gazetteer:
    return load_gazetteer()


@pytest.fixture(scope="session")
def reference_fixture() -> dict:
    text = resources.files("patmine.data").joinpath("patterns/reference_fixture.json").read_text(encoding="utf-8")
    return json.loads(text)


def make_doc(words, tags=None, entities=None, review_id="doc") -> Document:
    """Build a Document directly from aligned token attribute lists."""
    tags = tags or ["NN"] * len(words)
    entities = entities or [frozenset()] * len(words)
    tokens = tuple(
        Token(surface=w, norm=w.casefold(), pos=t, entity_types=frozenset(e))
        for w, t, e in zip(words, tags, entities)
    )
    return Document(review_id=review_id, tokens=tokens)


def annotate_text(text, gazetteer, review_id="doc") -> Document:
    return annotate(RawReview(id=review_id, text=text), gazetteer)


@pytest.fixture
def doc_builder():
    return make_doc
