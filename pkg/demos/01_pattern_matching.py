"""Tour of the pattern language and its matcher.

Patterns are trees: Sequence/And/Or/Not/Repetition combine token-level
predicates (literal, POS tag, entity type, wildcard).  A document matches
when some start position yields a contiguous span match.  Run:

    python demos/01_pattern_matching.py
"""

from patmine import load_gazetteer, parse_dsl, print_dsl
from patmine.corpus import RawReview
from patmine.linguistics import annotate
from patmine.pattern import doc_match, span_match

gazetteer = load_gazetteer()


def show(doc):
    print(f"  tokens: {[t.surface for t in doc.tokens]}")
    print(f"  pos   : {[t.pos for t in doc.tokens]}")
    ents = {t.surface: sorted(t.entity_types) for t in doc.tokens if t.entity_types}
    print(f"  ents  : {ents}")


print("=== annotation ===")
review = RawReview(id="r1", text="Please add an option to sync, the app crashes after updates!")
doc = annotate(review, gazetteer)
show(doc)

print("\n=== matching the bundled reference patterns ===")
examples = [
    ("SEQ(lit(please), pos(VB))", "Please add Google now integration."),
    ("SEQ(lit(i), lit(ca|can), lit(n't|not))", "I can't remove the numbers in lists anymore."),
    ("OR(ent(software bug), ent(software update))",
     "The last few months of updates haven't changed or lessened the lag."),
    ("SEQ(lit(5), lit(stars))", "Colour coding for repetitive tasks can fetch 5 stars."),
]
for dsl, sentence in examples:
    pattern = parse_dsl(dsl)
    target = annotate(RawReview(id="x", text=sentence), gazetteer)
    print(f"  {dsl:<48} vs {sentence!r:<58} -> {doc_match(pattern, target)}")

print("\n=== span semantics ===")
pattern = parse_dsl("SEQ(lit(please), pos(VB))")
target = annotate(RawReview(id="x", text="Could you please add dark mode"), gazetteer)
for start in range(len(target.tokens)):
    consumed = span_match(pattern, target, start)
    marker = f"consumes {consumed} tokens" if consumed else "-"
    print(f"  start {start} ({target.tokens[start].surface:>6}): {marker}")

print("\n=== gaps are explicit: REP(*) ===")
gap_pattern = parse_dsl("SEQ(lit(please), REP(*), lit(mode))")
print(f"  {print_dsl(gap_pattern)} on 'please add the dark mode' ->",
      doc_match(gap_pattern, annotate(RawReview(id="x", text="please add the dark mode"), gazetteer)))

print("\n=== canonicalization ===")
tree = parse_dsl("OR(lit(however), lit(but))")
print(f"  OR of literals prints as a multi-valued literal: {print_dsl(tree)}")
