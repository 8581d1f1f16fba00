"""Canonical dataset format, domain types and the CSV adapters."""

import json

import pytest

from iris.core import (
    Dataset,
    Sample,
    Split,
    StanceLabel,
    adapt_ez,
    adapt_vast,
    load_canonical,
    save_canonical,
)
from iris.errors import DatasetFormatError


def _write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestStanceLabel:
    def test_fixed_order_for_vector_indexing(self):
        assert int(StanceLabel.FAVOR) == 0
        assert int(StanceLabel.AGAINST) == 1
        assert int(StanceLabel.NEUTRAL) == 2

    @pytest.mark.parametrize("text,expected", [
        ("favor", StanceLabel.FAVOR),
        ("FAVOR", StanceLabel.FAVOR),
        ("pro", StanceLabel.FAVOR),
        ("con", StanceLabel.AGAINST),
        ("Against", StanceLabel.AGAINST),
        ("none", StanceLabel.NEUTRAL),
        ("NEUTRAL", StanceLabel.NEUTRAL),
    ])
    def test_alias_mapping(self, text, expected):
        assert StanceLabel.from_string(text) is expected

    def test_unknown_label_rejected(self):
        with pytest.raises(DatasetFormatError):
            StanceLabel.from_string("meh")


class TestCanonicalFormat:
    def test_direct_field_mapping(self, tmp_path):
        path = tmp_path / "d.jsonl"
        _write_lines(path, ['{"id":"a","text":"t","target":"g","stance":"favor"}'])
        ds = load_canonical(path)
        assert len(ds) == 1
        assert ds.samples[0] == Sample(id="a", text="t", target="g",
                                       gold=StanceLabel.FAVOR)

    def test_missing_text_names_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        _write_lines(path, [
            '{"id":"a","text":"t","target":"g","stance":"favor"}',
            '{"id":"b","target":"g","stance":"con"}',
        ])
        with pytest.raises(DatasetFormatError, match=":2:"):
            load_canonical(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        _write_lines(path, ['{"id":"a","text":"t","target":"g"}', "{nope"])
        with pytest.raises(DatasetFormatError, match=":2:"):
            load_canonical(path)

    def test_order_preserved(self, tmp_path):
        path = tmp_path / "d.jsonl"
        _write_lines(path, [
            json.dumps({"id": f"s{i}", "text": f"t{i}", "target": "g"})
            for i in range(3)
        ])
        ds = load_canonical(path)
        assert [s.id for s in ds.samples] == ["s0", "s1", "s2"]
        assert all(s.gold is None for s in ds.samples)

    def test_unknown_stance_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        _write_lines(path, ['{"id":"a","text":"t","target":"g","stance":"up"}'])
        with pytest.raises(DatasetFormatError):
            load_canonical(path)

    def test_round_trip_field_for_field(self, tmp_path):
        samples = tuple(
            Sample(id=f"s{i}", text=f"text {i} with  spaces\tkept",
                   target="the target", gold=StanceLabel(i % 3))
            for i in range(6)
        ) + (Sample(id="u", text="unlabeled", target="g"),)
        ds = Dataset(name="rt", split=Split.DEV, samples=samples)
        path = tmp_path / "rt.jsonl"
        save_canonical(ds, path)
        again = load_canonical(path, name="rt", split=Split.DEV)
        assert again == ds

    def test_deterministic_across_repeated_loads(self, tmp_path):
        path = tmp_path / "d.jsonl"
        _write_lines(path, [
            json.dumps({"id": f"s{i}", "text": "t", "target": "g",
                        "stance": "pro"})
            for i in range(10)
        ])
        assert load_canonical(path) == load_canonical(path)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DatasetFormatError, match="duplicate"):
            Dataset(name="x", split=Split.TRAIN, samples=(
                Sample(id="a", text="t", target="g"),
                Sample(id="a", text="u", target="g"),
            ))


class TestVastAdapter:
    def _write(self, tmp_path, rows):
        path = tmp_path / "vast.csv"
        lines = ["post,new_topic,label"] + rows
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_label_one_is_favor(self, tmp_path):
        path = self._write(tmp_path, ["some post,taxes,1"])
        ds = adapt_vast(path, Split.TRAIN)
        assert ds.samples[0].gold is StanceLabel.FAVOR

    def test_label_two_is_neutral(self, tmp_path):
        path = self._write(tmp_path, ["some post,taxes,2"])
        assert adapt_vast(path, Split.TRAIN).samples[0].gold is StanceLabel.NEUTRAL

    def test_label_zero_is_against(self, tmp_path):
        path = self._write(tmp_path, ["some post,taxes,0"])
        assert adapt_vast(path, Split.TRAIN).samples[0].gold is StanceLabel.AGAINST

    def test_out_of_range_label_rejected(self, tmp_path):
        path = self._write(tmp_path, ["some post,taxes,3"])
        with pytest.raises(DatasetFormatError, match="label 3"):
            adapt_vast(path, Split.TRAIN)

    def test_row_count_matches_file(self, tmp_path):
        # full VAST train has 13477 rows; same property checked small
        rows = [f"post {i},topic {i},{i % 3}" for i in range(37)]
        path = self._write(tmp_path, rows)
        assert len(adapt_vast(path, Split.TRAIN)) == 37

    def test_ids_synthesized_from_row_index(self, tmp_path):
        path = self._write(tmp_path, ["p,t,0", "q,t,1"])
        ds = adapt_vast(path, Split.TEST)
        assert [s.id for s in ds.samples] == ["vast-test-0", "vast-test-1"]

    def test_label_map_total_and_rejecting(self, tmp_path):
        for label in (0, 1, 2):
            path = self._write(tmp_path, [f"p,t,{label}"])
            assert adapt_vast(path, Split.TRAIN).samples[0].gold is not None
        path = self._write(tmp_path, ["p,t,-1"])
        with pytest.raises(DatasetFormatError):
            adapt_vast(path, Split.TRAIN)


class TestEzAdapter:
    def _write(self, tmp_path, rows):
        path = tmp_path / "ez.csv"
        lines = ['Text,"Target 1","Stance 1"'] + rows
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_case_insensitive_favor(self, tmp_path):
        path = self._write(tmp_path, ["a post,climate,FAVOR"])
        assert adapt_ez(path, Split.TRAIN).samples[0].gold is StanceLabel.FAVOR

    def test_none_maps_to_neutral(self, tmp_path):
        path = self._write(tmp_path, ["a post,climate,NONE"])
        assert adapt_ez(path, Split.TRAIN).samples[0].gold is StanceLabel.NEUTRAL

    def test_full_file_row_count(self, tmp_path):
        # full EZ train has 13756 rows; same property checked small
        rows = [f"post {i},target {i},{'FAVOR AGAINST NONE'.split()[i % 3]}"
                for i in range(29)]
        path = self._write(tmp_path, rows)
        assert len(adapt_ez(path, Split.TRAIN)) == 29

    def test_empty_target_rejected(self, tmp_path):
        path = self._write(tmp_path, ["a post,,FAVOR"])
        with pytest.raises(DatasetFormatError, match="row 0"):
            adapt_ez(path, Split.TRAIN)

    def test_unknown_label_rejected(self, tmp_path):
        path = self._write(tmp_path, ["a post,climate,MAYBE"])
        with pytest.raises(DatasetFormatError):
            adapt_ez(path, Split.TRAIN)
