"""Deterministic synthetic review corpus with planted signals.

Two signal families define the positive class of the ``defect`` task:

* family A -- the literal ``please`` immediately followed by a base-form
  verb ("please add offline access");
* family B -- a singular-noun token immediately followed by the literal
  ``crashes`` ("the widget crashes on startup").

The ``improvement`` task reuses family A alone.

The negative pool plants decoys that make shortcuts imprecise:

* ``please`` followed by a non-verb kills ``please *``;
* adverbs or determiners before ``crashes`` kill ``* crashes``;
* nouns followed by base-form verbs ("the app sync feature is fine") kill
  any single pattern that merges the two families with OR terminals;
* signal verbs in other contexts keep bare POS terminals unattractive.

No single tree in the pattern language can cover both families precisely,
so a correct learner must produce at least two patterns.  All output is a
pure function of (n, seed).
"""

from __future__ import annotations

import argparse
import json
from random import Random
from typing import Sequence

from .corpus import FeedbackType, PreparedCorpus, RawReview, prepare
from .gazetteer import load_gazetteer

VERBS_A = ["add", "support", "include", "sync"]
NOUNS_B = ["app", "widget", "editor", "camera"]

_REQUEST_OBJECTS = [
    "dark mode", "more fonts", "offline access", "better search",
    "folders for tags", "a quick toolbar", "larger text", "photo markup",
]
_REQUEST_PREFIXES = ["", "could you", "can you", "would you", "next time"]
_CRASH_LEADS = ["the", "my", "this"]
_CRASH_TAILS = [
    "every time", "on startup", "when i rotate the screen", "after a few seconds",
    "constantly", "when typing", "twice a day", "",
]
_PLEASE_DECOY_TAILS = [
    "no more ads", "more languages", "the old layout again", "a dark theme next",
    "no popups", "more colour choices",
]
_NOUN_VERB_TAILS = ["option is fine", "feature works well", "button looks great", "setting is handy"]
_CRASH_DECOYS = [
    "it never crashes",
    "never crashes anymore",
    "rarely crashes these days",
    "no crashes at all",
    "zero crashes since i got it",
    "hardly crashes now",
    "crashes happen to other tools not this one",
]
_VERB_ELSEWHERE = [
    "i use it to {verb} photos",
    "you can {verb} everything",
    "easy to {verb} notes",
    "nice that i can {verb} across devices",
]
# mention the same request objects and crash tails in negatives, so that the
# planted adjacency structure is the only reliable signal
_FILLER_TEMPLATES = [
    "i really enjoy this {noun}",
    "the {noun} is very {adj}",
    "been using it for {num} {unit} now",
    "does everything i want and more",
    "my notes and lists stay organized",
    "best {noun} i have ever tried",
    "the new look is {adj}",
    "not bad at all honestly",
    "works well on my tablet",
    "the {noun} could be {adj} but i am happy",
    "five {unit} of daily use and counting",
    "good value for the money",
    "the new version looks {adj}",
    "no problems since the last update",
    "love that it has {object}",
    "{object} works {adv} well",
    "using {object} every day",
    "{adj} and stable {tail}",
    "loads fast {tail}",
    "no lag {tail} anymore",
    "could you ask for more honestly",
    "can you believe how {adj} this is",
    "next time i will buy the premium version",
]
_FILLER_NOUNS = ["design", "layout", "theme", "experience", "setup", "calendar", "archive", "backup"]
_FILLER_ADJS = ["great", "nice", "useful", "solid", "clean", "fast", "smooth", "simple"]
_FILLER_NUMS = ["two", "three", "six", "ten"]
_FILLER_UNITS = ["weeks", "months", "days"]
_FILLER_ADVS = ["really", "very", "surprisingly"]


def _fill(template: str, rng: Random) -> str:
    return template.format(
        noun=rng.choice(_FILLER_NOUNS),
        adj=rng.choice(_FILLER_ADJS),
        num=rng.choice(_FILLER_NUMS),
        unit=rng.choice(_FILLER_UNITS),
        verb=rng.choice(VERBS_A),
        object=rng.choice(_REQUEST_OBJECTS),
        tail=rng.choice([t for t in _CRASH_TAILS if t]),
        adv=rng.choice(_FILLER_ADVS),
    )


def _request_sentence(rng: Random) -> str:
    prefix = rng.choice(_REQUEST_PREFIXES)
    body = f"please {rng.choice(VERBS_A)} {rng.choice(_REQUEST_OBJECTS)}"
    return f"{prefix} {body}".strip() + " ."


def _crash_sentence(rng: Random) -> str:
    lead = rng.choice(_CRASH_LEADS)
    tail = rng.choice(_CRASH_TAILS)
    return f"{lead} {rng.choice(NOUNS_B)} crashes {tail}".strip() + " ."


def _negative_sentence(kind: str, rng: Random) -> str:
    if kind == "please_decoy":
        text = f"please {rng.choice(_PLEASE_DECOY_TAILS)}"
    elif kind == "noun_verb_decoy":
        text = f"the {rng.choice(NOUNS_B)} {rng.choice(VERBS_A)} {rng.choice(_NOUN_VERB_TAILS)}"
    elif kind == "crash_decoy":
        text = rng.choice(_CRASH_DECOYS)
    elif kind == "verb_elsewhere":
        text = _fill(rng.choice(_VERB_ELSEWHERE), rng)
    else:
        text = _fill(rng.choice(_FILLER_TEMPLATES), rng)
    return text + " ."


def make_reviews(n: int = 2000, seed: int = 42) -> list[RawReview]:
    """Generate n fully labeled synthetic reviews (a pure function of n, seed)."""
    rng = Random(seed)
    quotas = {
        "request": round(0.125 * n),
        "crash": round(0.125 * n),
        "please_decoy": round(0.04 * n),
        "noun_verb_decoy": round(0.06 * n),
        "crash_decoy": round(0.05 * n),
        "verb_elsewhere": round(0.05 * n),
    }
    kinds = [k for k, count in quotas.items() for _ in range(count)]
    kinds += ["filler"] * (n - len(kinds))
    rng.shuffle(kinds)
    width = len(str(n - 1))
    reviews = []
    for i, kind in enumerate(kinds):
        if kind == "request":
            text = _request_sentence(rng)
            labels = {FeedbackType.DEFECT: True, FeedbackType.IMPROVEMENT: True}
        elif kind == "crash":
            text = _crash_sentence(rng)
            labels = {FeedbackType.DEFECT: True, FeedbackType.IMPROVEMENT: False}
        else:
            text = _negative_sentence(kind, rng)
            labels = {FeedbackType.DEFECT: False, FeedbackType.IMPROVEMENT: False}
        reviews.append(RawReview(id=f"syn-{i:0{width}d}", text=text, explicit_labels=labels))
    return reviews


def make_prepared(n: int = 2000, seed: int = 42) -> PreparedCorpus:
    """Synthetic reviews annotated with the default gazetteer and split by the same seed."""
    return prepare(make_reviews(n, seed), load_gazetteer(), seed=seed)


def write_jsonl(reviews: Sequence[RawReview], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reviews:
            fh.write(json.dumps({
                "id": r.id,
                "text": r.text,
                "labels": {ft.value: v for ft, v in sorted(r.explicit_labels.items())},
            }, sort_keys=True) + "\n")


def main(argv: Sequence[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Write the synthetic benchmark corpus as JSONL.")
    parser.add_argument("--out", required=True)
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args(argv)
    write_jsonl(make_reviews(args.n, args.seed), args.out)
    print(f"wrote {args.n} synthetic reviews to {args.out}")


if __name__ == "__main__":
    main()
