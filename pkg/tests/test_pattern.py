import json
from random import Random

import pytest

from conftest import annotate_text, make_doc
from oracles import brute_doc_match, random_doc, random_token, random_tree
from patmine.corpus import FeedbackType
from patmine.linguistics import Document
from patmine.pattern import (
    DslSyntaxError,
    Kind,
    PatternGroup,
    PatternInvariantError,
    canonicalize,
    compile_matcher,
    doc_match,
    ent,
    group_label,
    lit,
    load_group,
    node_from_json_dict,
    node_to_json_dict,
    not_,
    or_,
    parse_dsl,
    pos,
    prepare_document,
    print_dsl,
    rep,
    save_group,
    seq,
    span_match,
    token_match,
    validate,
    wildcard,
)


class TestTokenMatch:
    def test_literal_alternatives_casefold(self, doc_builder):
        doc = doc_builder(["However"])
        assert token_match(lit("however", "but"), doc.tokens[0])

    def test_wildcard(self, doc_builder):
        doc = doc_builder(["anything"], tags=["JJ"])
        assert token_match(wildcard(), doc.tokens[0])

    def test_not_literal(self, doc_builder):
        doc = doc_builder(["n't"], tags=["RB"])
        assert not token_match(not_(lit("not", "n't")), doc.tokens[0])

    def test_and_pos_literal(self, doc_builder):
        from patmine.pattern import and_

        doc = doc_builder(["add"], tags=["VB"])
        assert token_match(and_(lit("add"), pos("VB")), doc.tokens[0])
        assert not token_match(and_(lit("add"), pos("NN")), doc.tokens[0])

    def test_entity(self, doc_builder):
        doc = doc_builder(["evernote"], entities=[{"app"}])
        assert token_match(ent("app"), doc.tokens[0])
        assert not token_match(ent("device"), doc.tokens[0])

    def test_pos_exact(self, doc_builder):
        doc = doc_builder(["add"], tags=["VB"])
        assert token_match(pos("VB"), doc.tokens[0])
        assert not token_match(pos("VBD"), doc.tokens[0])

    def test_sequence_rejected(self, doc_builder):
        doc = doc_builder(["x"])
        with pytest.raises(ValueError, match="token-level"):
            token_match(seq(lit("x")), doc.tokens[0])


class TestSpanMatch:
    def test_please_vb_consumes_two(self, default_gazetteer):
        doc = annotate_text("Please add Google now integration.", default_gazetteer)
        pattern = seq(lit("please"), pos("VB"))
        assert span_match(pattern, doc, 0) == 2

    def test_at_document_end(self, doc_builder):
        doc = doc_builder(["a"])
        assert span_match(lit("a"), doc, 1) is None
        assert span_match(seq(lit("a")), doc, 1) is None

    def test_repetition_greedy_run(self, doc_builder):
        doc = doc_builder(["the", "note", "book", "crashed"], tags=["DT", "NN", "NN", "VBD"])
        assert span_match(rep(pos("NN")), doc, 1) == 2
        assert span_match(rep(pos("NN")), doc, 0) is None  # run of zero
        assert span_match(rep(pos("NN")), doc, 2) is None  # run of one

    def test_sequence_contiguous(self, doc_builder):
        doc = doc_builder(["please", "kindly", "add"], tags=["UH", "RB", "VB"])
        assert span_match(seq(lit("please"), pos("VB")), doc, 0) is None
        assert doc_match(seq(lit("please"), rep(wildcard())), doc)

    def test_out_of_range_start(self, doc_builder):
        doc = doc_builder(["a"])
        with pytest.raises(ValueError):
            span_match(lit("a"), doc, 5)


class TestDocMatch:
    def test_or_root_on_sentence(self, default_gazetteer):
        doc = annotate_text("However I cannot do so from the app", default_gazetteer)
        assert doc_match(or_(lit("however", "but"), lit("not", "n't")), doc)

    def test_empty_document(self):
        doc = Document(review_id="e", tokens=())
        assert not doc_match(wildcard(), doc)

    def test_five_stars(self, default_gazetteer):
        doc = annotate_text("can fetch 5 stars", default_gazetteer)
        assert doc_match(seq(lit("5"), lit("stars")), doc)

    def test_match_survives_appended_tokens(self):
        rng = Random(11)
        checked = 0
        while checked < 200:
            tree = random_tree(rng)
            doc = random_doc(rng)
            if not doc_match(tree, doc):
                continue
            extended = Document(
                review_id=doc.review_id,
                tokens=doc.tokens + tuple(random_token(rng) for _ in range(rng.randint(1, 3))),
            )
            assert doc_match(tree, extended)
            checked += 1


class TestGroupLabel:
    def test_singleton(self, doc_builder):
        doc = doc_builder(["please"])
        group = PatternGroup(FeedbackType.IMPROVEMENT, (seq(lit("please")),))
        assert group_label(group, doc)

    def test_disjunction(self, doc_builder):
        doc = doc_builder(["stars"])
        group = PatternGroup(FeedbackType.IMPROVEMENT, (seq(lit("please")), seq(lit("stars"))))
        assert group_label(group, doc)

    def test_empty_group_rejected(self, doc_builder):
        group = PatternGroup(FeedbackType.DEFECT, ())
        with pytest.raises(ValueError):
            group_label(group, doc_builder(["x"]))

    def test_monotone_under_added_patterns(self):
        rng = Random(23)
        for _ in range(100):
            base = random_tree(rng)
            extra = random_tree(rng)
            doc = random_doc(rng)
            small = PatternGroup(FeedbackType.DEFECT, (base,))
            grown = PatternGroup(FeedbackType.DEFECT, (base, extra))
            if group_label(small, doc):
                assert group_label(grown, doc)


class TestValidate:
    def test_and_arity(self):
        with pytest.raises(PatternInvariantError, match="arity"):
            validate(PatternNodeHelper.and_one())

    def test_bare_not_root_rejected(self):
        with pytest.raises(PatternInvariantError, match="root-not"):
            validate(not_(lit("x")))

    def test_depth_limit(self):
        tree = seq(seq(seq(seq(seq(lit("x"))))))
        with pytest.raises(PatternInvariantError, match="max-depth"):
            validate(tree, max_depth=5)
        validate(tree, max_depth=6)

    def test_token_level_children(self):
        with pytest.raises(PatternInvariantError, match="token-level"):
            validate(seq(or_(seq(lit("a")), lit("b"))))

    def test_repetition_single_child(self):
        bad = PatternNodeHelper.rep_two()
        with pytest.raises(PatternInvariantError, match="arity"):
            validate(bad)

    def test_terminal_values(self):
        with pytest.raises(PatternInvariantError, match="value-arity"):
            validate(seq(PatternNodeHelper.empty_literal()))

    def test_reserved_characters(self):
        with pytest.raises(PatternInvariantError, match="value-shape"):
            validate(seq(lit("a|b")))


class PatternNodeHelper:
    """Builders for structurally invalid trees (the constructors stay permissive)."""

    @staticmethod
    def and_one():
        from patmine.pattern import PatternNode

        return seq(PatternNode(Kind.AND, children=(lit("x"),)))

    @staticmethod
    def rep_two():
        from patmine.pattern import PatternNode

        return seq(PatternNode(Kind.REPETITION, children=(lit("a"), lit("b"))))

    @staticmethod
    def empty_literal():
        from patmine.pattern import PatternNode

        return PatternNode(Kind.LITERAL, values=frozenset())


class TestDsl:
    def test_table_pattern(self):
        tree = parse_dsl("SEQ(lit(please), pos(VB))")
        assert tree == seq(lit("please"), pos("VB"))

    def test_arity_error(self):
        with pytest.raises(PatternInvariantError, match="arity"):
            parse_dsl("AND(lit(x))")

    def test_syntax_error_position(self):
        with pytest.raises(DslSyntaxError) as err:
            parse_dsl("SEQ(lit(a), ")
        assert err.value.position == 12

    def test_unterminated_terminal(self):
        with pytest.raises(DslSyntaxError, match="unterminated"):
            parse_dsl("SEQ(lit(a")

    def test_unknown_node(self):
        with pytest.raises(DslSyntaxError, match="unknown"):
            parse_dsl("FOO(lit(a))")

    def test_trailing_garbage(self):
        with pytest.raises(DslSyntaxError, match="trailing"):
            parse_dsl("SEQ(lit(a)) extra")

    def test_whitespace_insensitive(self):
        tree = parse_dsl("  SEQ ( lit( a | b ) ,\n pos(VB) ) ")
        assert tree == seq(lit("a", "b"), pos("VB"))

    def test_entity_with_space(self):
        assert parse_dsl("SEQ(ent(software update))") == seq(ent("software update"))

    def test_wildcard(self):
        assert parse_dsl("SEQ(*)") == seq(wildcard())

    def test_empty_alternative(self):
        with pytest.raises(DslSyntaxError, match="alternative"):
            parse_dsl("SEQ(lit(a||b))")

    def test_printer_canonicalizes_or_of_literals(self):
        assert print_dsl(or_(lit("a"), lit("b"))) == "lit(a|b)"

    def test_round_trip_random_trees(self):
        rng = Random(7)
        for _ in range(300):
            tree = random_tree(rng, max_depth=4)
            validate(tree)
            reparsed = parse_dsl(print_dsl(tree))
            assert reparsed == canonicalize(tree)
            # semantics preserved even when the shape canonicalizes
            doc = random_doc(rng)
            assert doc_match(tree, doc) == doc_match(reparsed, doc)

    def test_round_trip_identity_on_canonical_trees(self):
        rng = Random(8)
        for _ in range(200):
            tree = canonicalize(random_tree(rng, max_depth=4))
            assert parse_dsl(print_dsl(tree)) == tree


class TestSerialization:
    def test_json_round_trip(self):
        rng = Random(9)
        for _ in range(200):
            tree = random_tree(rng, max_depth=4)
            assert node_from_json_dict(node_to_json_dict(tree)) == tree

    def test_json_shape(self):
        payload = node_to_json_dict(seq(lit("b", "a"), pos("VB")))
        assert payload["kind"] == "sequence"
        assert payload["children"][0] == {"kind": "literal", "values": ["a", "b"], "children": []}

    def test_group_json_file(self, tmp_path):
        group = PatternGroup(FeedbackType.DEFECT, (seq(lit("no"), lit("ability", "option"), lit("to")),))
        path = tmp_path / "g.json"
        save_group(group, path)
        loaded = load_group(path)
        assert loaded == group

    def test_group_dsl_file(self, tmp_path):
        group = PatternGroup(FeedbackType.IMPROVEMENT, (seq(lit("please"), pos("VB")),))
        path = tmp_path / "g.dsl"
        save_group(group, path)
        loaded = load_group(path)
        assert loaded.feedback_type is FeedbackType.IMPROVEMENT
        assert loaded.patterns == group.patterns

    def test_group_json_validates(self, tmp_path):
        path = tmp_path / "bad.json"
        payload = {"feedback_type": "defect", "provenance": "manual",
                   "patterns": [{"kind": "and", "values": [], "children": [{"kind": "literal", "values": ["x"], "children": []}]}]}
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(PatternInvariantError):
            load_group(path)


class TestOracleAgreement:
    def test_brute_force_sample(self):
        rng = Random(101)
        for _ in range(2000):
            tree = random_tree(rng)
            doc = random_doc(rng)
            assert doc_match(tree, doc) == brute_doc_match(tree, doc)

    def test_compiled_matcher_agrees(self):
        rng = Random(102)
        for _ in range(2000):
            tree = random_tree(rng)
            doc = random_doc(rng)
            prep = prepare_document(doc)
            assert compile_matcher(tree)(prep) == doc_match(tree, doc)
