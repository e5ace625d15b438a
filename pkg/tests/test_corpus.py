"""Tests for the snippet data model and the shared tokenizers."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snipsearch.corpus import (
    AnnotatedSnippet,
    NlTokenConfig,
    SnippetCollection,
    load_collection,
    save_collection,
    split_identifier,
    tokenize_code,
    tokenize_natural,
    word_overlap,
)
from snipsearch.errors import DataError
from snipsearch.stemmer import stem


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


def _record(i, **kw):
    rec = {"id": f"s{i}", "description": f"desc {i}", "code": f"x = {i}", "url": None, "tags": []}
    rec.update(kw)
    return rec


class TestLoadCollection:
    def test_three_valid_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_jsonl(path, [_record(i) for i in range(3)])
        coll = load_collection(path)
        assert len(coll) == 3
        assert [s.id for s in coll] == ["s0", "s1", "s2"]

    def test_duplicate_id_names_the_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_jsonl(path, [_record(0, id="a1"), _record(1, id="a1")])
        with pytest.raises(DataError, match="a1"):
            load_collection(path)

    def test_empty_file_warns(self, tmp_path, caplog):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        with caplog.at_level("WARNING"):
            coll = load_collection(path)
        assert len(coll) == 0
        assert any("empty" in r.message for r in caplog.records)

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(_record(0)) + "\n{oops\n")
        with pytest.raises(DataError, match=":2:"):
            load_collection(path)

    def test_empty_description_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_jsonl(path, [_record(0, description="   ")])
        with pytest.raises(DataError, match="description"):
            load_collection(path)

    def test_roundtrip_preserves_order_and_content(self, tmp_path):
        snippets = [
            AnnotatedSnippet(id="b", description="second", code="y = 2\nprint(y)"),
            AnnotatedSnippet(id="a", description="first", code="x = 1", url="http://x", tags=("t",)),
        ]
        coll = SnippetCollection(snippets=snippets, name="two")
        path = tmp_path / "two.jsonl"
        save_collection(coll, path)
        loaded = load_collection(path)
        assert [s.id for s in loaded] == ["b", "a"]
        assert loaded.snippets[0].code == "y = 2\nprint(y)"
        assert loaded.snippets[1].tags == ("t",)


class TestTokenizeNatural:
    def test_question_to_content_words(self):
        assert tokenize_natural("How to plot a histogram?") == ["plot", "histogram"]

    def test_empty(self):
        assert tokenize_natural("") == []

    def test_bag_semantics_keep_duplicates(self):
        assert tokenize_natural("Plotting plots") == ["plot", "plot"]

    def test_no_lemmatize_config(self):
        cfg = NlTokenConfig(lemmatize=False)
        assert tokenize_natural("Plotting plots", cfg) == ["plotting", "plots"]

    def test_underscore_is_boundary(self):
        assert tokenize_natural("read_csv usage", NlTokenConfig(lemmatize=False)) == [
            "read",
            "csv",
            "usage",
        ]

    def test_stopwords_removed_even_when_stemmed(self):
        # "this" stems to "thi"; the removal set covers stemmed forms.
        assert tokenize_natural("this is it") == []

    @given(st.text(max_size=80))
    @settings(max_examples=300, deadline=None)
    def test_idempotent_on_own_output(self, text):
        once = tokenize_natural(text)
        again = tokenize_natural(" ".join(once))
        assert once == again


class TestTokenizeCode:
    def test_identifier_splitting(self):
        assert tokenize_code("myVar_name = 1").identifiers == ("my", "var", "name")

    def test_identifiers_and_comment_words(self):
        ct = tokenize_code('pd.read_json(path, lines=True)  # load frames')
        assert ct.identifiers == ("pd", "read", "json", "path", "lines")
        assert ct.comments == ("load", "frames")

    def test_empty_input(self):
        ct = tokenize_code("")
        assert ct.identifiers == () and ct.comments == () and ct.raw_identifiers == ()

    def test_drops_keywords_literals_operators(self):
        ct = tokenize_code("for k in data:\n    total += k * 2.5\n")
        assert ct.identifiers == ("k", "data", "total", "k")

    def test_string_contents_dropped(self):
        ct = tokenize_code('name = "camelCase ignored"')
        assert ct.identifiers == ("name",)

    def test_string_prefix_not_an_identifier(self):
        ct = tokenize_code(r'pattern = r"\d+"')
        assert ct.identifiers == ("pattern",)

    def test_unterminated_string_counted(self):
        ct = tokenize_code('x = "oops\ny = 1')
        assert ct.skipped_regions == 1
        assert "y" in ct.identifiers

    def test_camel_acronym_run(self):
        assert split_identifier("HTTPServerPort") == ["http", "server", "port"]

    @given(
        st.lists(
            st.from_regex(r"[a-z][a-z0-9]{0,6}", fullmatch=True), min_size=1, max_size=6
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_split_idempotent(self, parts):
        joined = "_".join(parts)
        split = split_identifier(joined)
        assert split_identifier("_".join(split)) == split


class TestWordOverlap:
    def test_paraphrased_query(self):
        stats = word_overlap("check if tf uses gpu", "tell if tensorflow is using gpu")
        assert stats.absolute == 2
        assert stats.relative == 0.5

    def test_identical_strings(self):
        assert word_overlap("plot histogram", "plot histogram").relative == 1.0

    def test_disjoint(self):
        stats = word_overlap("sort list", "open file")
        assert stats.absolute == 0 and stats.relative == 0.0

    def test_empty_query_outcome(self):
        stats = word_overlap("the a", "plot histogram")
        assert stats.empty_query
        assert stats.relative is None

    @given(st.text(max_size=60), st.text(max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_absolute_symmetric_relative_bounded(self, q, d):
        qd = word_overlap(q, d)
        dq = word_overlap(d, q)
        assert qd.absolute == dq.absolute
        if qd.relative is not None:
            assert 0.0 <= qd.relative <= 1.0


class TestStemmer:
    @pytest.mark.parametrize(
        "word,expected",
        [
            ("plotting", "plot"),
            ("plots", "plot"),
            ("uses", "us"),
            ("using", "us"),
            ("use", "us"),
            ("histograms", "histogram"),
            ("sorted", "sort"),
            ("libraries", "librari"),
            ("connection", "connect"),
            ("x", "x"),
        ],
    )
    def test_known_stems(self, word, expected):
        assert stem(word) == expected

    @given(st.from_regex(r"[a-z]{1,12}", fullmatch=True))
    @settings(max_examples=500, deadline=None)
    def test_idempotent(self, word):
        assert stem(stem(word)) == stem(word)
