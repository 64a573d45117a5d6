import pytest

from patmine.gazetteer import Gazetteer, GazetteerFormatError, load_gazetteer, lookup


class TestDefaultFile:
    def test_required_types_present(self, default_gazetteer):
        assert {"user", "action", "object", "component", "device", "update"} <= default_gazetteer.keys
        assert {"app", "software bug", "software update"} <= default_gazetteer.keys

    def test_app_terms(self, default_gazetteer):
        assert "app" in lookup(default_gazetteer, "evernote")
        assert lookup(default_gazetteer, "application") == {"app"}

    def test_multiword_term(self, default_gazetteer):
        assert "software update" in lookup(default_gazetteer, "software update")

    def test_absent_term(self, default_gazetteer):
        assert lookup(default_gazetteer, "zzzz") == frozenset()

    def test_case_folded(self, default_gazetteer):
        assert lookup(default_gazetteer, "EVERNOTE") == lookup(default_gazetteer, "evernote")

    def test_roundtrip_every_term(self, default_gazetteer):
        for key, terms in default_gazetteer.entries.items():
            for term in terms:
                assert key in lookup(default_gazetteer, term)


class TestValidation:
    def test_empty_entry_set_names_key(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("x:\n", encoding="utf-8")
        with pytest.raises(GazetteerFormatError, match="'x'"):
            load_gazetteer(path)

    def test_missing_colon(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("just words\n", encoding="utf-8")
        with pytest.raises(GazetteerFormatError, match="line 1"):
            load_gazetteer(path)

    def test_comments_and_merging(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# comment\na: x, y\na: z\n", encoding="utf-8")
        gaz = load_gazetteer(path)
        assert gaz.entries["a"] == {"x", "y", "z"}

    def test_overlong_phrase_rejected(self):
        with pytest.raises(GazetteerFormatError, match="exceeds"):
            Gazetteer({"a": ["one two three four five"]})

    def test_empty_file(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# nothing\n", encoding="utf-8")
        with pytest.raises(GazetteerFormatError):
            load_gazetteer(path)

    def test_terms_case_folded_on_load(self):
        gaz = Gazetteer({"a": ["Evernote"]})
        assert lookup(gaz, "evernote") == {"a"}
