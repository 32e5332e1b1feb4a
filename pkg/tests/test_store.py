import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protoanchor import (
    ConsistencyError,
    ContractError,
    DegenerateVectorError,
    EmbeddingTable,
    FormatError,
    PromptTemplate,
    RowMeta,
    load_table,
    read_embt,
    render_prompts,
    write_embt,
    write_table,
)

from conftest import make_table


def write_files(tmp_path, rows, meta_lines, name="t"):
    matrix = tmp_path / f"{name}.embt"
    meta = tmp_path / f"{name}.jsonl"
    write_embt(matrix, np.asarray(rows, dtype=np.float32))
    meta.write_text("".join(json.dumps(m) + "\n" for m in meta_lines), encoding="utf-8")
    return matrix, meta


class TestLoad:
    def test_normalizes_345_triangle(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[3.0, 4.0]], [{"id": "a"}])
        table = load_table(matrix, meta)
        np.testing.assert_allclose(table.rows, [[0.6, 0.8]], atol=1e-7)
        assert table.ids == ["a"]
        assert table.dim == 2

    def test_axis_vectors(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, 0.0], [0.0, 2.0]],
                                   [{"id": "a"}, {"id": "b"}])
        table = load_table(matrix, meta)
        np.testing.assert_array_equal(table.rows, [[1.0, 0.0], [0.0, 1.0]])

    def test_row_count_mismatch(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, 0.0], [0.0, 1.0]],
                                   [{"id": "a"}, {"id": "b"}, {"id": "c"}])
        with pytest.raises(ConsistencyError):
            load_table(matrix, meta)

    def test_duplicate_id(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, 0.0], [0.0, 1.0]],
                                   [{"id": "a"}, {"id": "a"}])
        with pytest.raises(ConsistencyError, match="duplicate"):
            load_table(matrix, meta)

    def test_zero_row_names_id(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, 0.0], [0.0, 0.0]],
                                   [{"id": "a"}, {"id": "bad_clip"}])
        with pytest.raises(DegenerateVectorError, match="bad_clip"):
            load_table(matrix, meta)

    def test_nan_component(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, float("nan")]], [{"id": "a"}])
        with pytest.raises(FormatError):
            load_table(matrix, meta)

    def test_inf_component(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, float("inf")]], [{"id": "a"}])
        with pytest.raises(FormatError):
            load_table(matrix, meta)

    def test_bad_magic(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, 0.0]], [{"id": "a"}])
        blob = bytearray(matrix.read_bytes())
        blob[:4] = b"NOPE"
        matrix.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="magic"):
            load_table(matrix, meta)

    def test_bad_version(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, 0.0]], [{"id": "a"}])
        blob = bytearray(matrix.read_bytes())
        struct.pack_into("<I", blob, 4, 99)
        matrix.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="version"):
            load_table(matrix, meta)

    def test_labels_and_folds_parse(self, tmp_path):
        matrix, meta = write_files(
            tmp_path, [[1.0, 0.0]], [{"id": "a", "labels": ["dog", "bark"], "fold": 3}])
        table = load_table(matrix, meta)
        assert table.meta[0].labels == ["dog", "bark"]
        assert table.meta[0].fold == 3

    def test_negative_fold_rejected(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, 0.0]], [{"id": "a", "fold": -1}])
        with pytest.raises(FormatError):
            load_table(matrix, meta)

    def test_unknown_meta_keys_tolerated(self, tmp_path):
        matrix, meta = write_files(
            tmp_path, [[1.0, 0.0]], [{"id": "a", "members": [1, 2], "k": 2}])
        assert load_table(matrix, meta).ids == ["a"]

    def test_malformed_json_line(self, tmp_path):
        matrix, meta = write_files(tmp_path, [[1.0, 0.0]], [{"id": "a"}])
        meta.write_text("{not json\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_table(matrix, meta)

    def test_missing_file_has_path_context(self, tmp_path):
        with pytest.raises(OSError, match="nowhere.embt"):
            read_embt(tmp_path / "nowhere.embt")


class TestRoundTrip:
    def test_round_trip_bit_exact(self, tmp_path, two_row_table):
        write_table(two_row_table, tmp_path / "o.embt", tmp_path / "o.jsonl")
        again = load_table(tmp_path / "o.embt", tmp_path / "o.jsonl")
        np.testing.assert_array_equal(again.rows, two_row_table.rows)
        assert again.meta == two_row_table.meta

    def test_empty_table(self, tmp_path):
        empty = EmbeddingTable(np.zeros((0, 4), np.float32), [])
        write_table(empty, tmp_path / "e.embt", tmp_path / "e.jsonl")
        again = load_table(tmp_path / "e.embt", tmp_path / "e.jsonl")
        assert len(again) == 0
        assert again.dim == 4

    def test_truncated_payload(self, tmp_path, two_row_table):
        write_table(two_row_table, tmp_path / "t.embt", tmp_path / "t.jsonl")
        blob = (tmp_path / "t.embt").read_bytes()
        (tmp_path / "t.embt").write_bytes(blob[:-4])
        with pytest.raises(FormatError):
            load_table(tmp_path / "t.embt", tmp_path / "t.jsonl")

    def test_trailing_garbage(self, tmp_path, two_row_table):
        write_table(two_row_table, tmp_path / "t.embt", tmp_path / "t.jsonl")
        blob = (tmp_path / "t.embt").read_bytes()
        (tmp_path / "t.embt").write_bytes(blob + b"\x00\x00\x00\x00")
        with pytest.raises(FormatError):
            load_table(tmp_path / "t.embt", tmp_path / "t.jsonl")

    @pytest.mark.parametrize("cut", [0, 3, 10, 23])
    def test_truncation_fuzz(self, tmp_path, two_row_table, cut):
        write_table(two_row_table, tmp_path / "t.embt", tmp_path / "t.jsonl")
        blob = (tmp_path / "t.embt").read_bytes()
        (tmp_path / "t.embt").write_bytes(blob[:cut])
        with pytest.raises(FormatError):
            load_table(tmp_path / "t.embt", tmp_path / "t.jsonl")

    def test_header_layout(self, tmp_path):
        write_embt(tmp_path / "h.embt", np.asarray([[1.0, 0.0, 0.0]], np.float32))
        blob = (tmp_path / "h.embt").read_bytes()
        magic, version, count, dim, dtype, reserved = struct.unpack("<4sIQIB3s", blob[:24])
        assert magic == b"EMBT"
        assert (version, count, dim, dtype) == (1, 1, 3, 0)
        assert reserved == b"\x00\x00\x00"
        assert len(blob) == 24 + 12

    def test_load_write_load_idempotent(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = rng.normal(size=(17, 9)).astype(np.float32)
        m1, s1 = write_files(tmp_path, rows, [{"id": f"r{i}"} for i in range(17)])
        t1 = load_table(m1, s1)
        write_table(t1, tmp_path / "w.embt", tmp_path / "w.jsonl")
        t2 = load_table(tmp_path / "w.embt", tmp_path / "w.jsonl")
        np.testing.assert_array_equal(t1.rows, t2.rows)


class TestTableInvariants:
    def test_unit_norms_after_load(self, tmp_path):
        rng = np.random.default_rng(1)
        rows = (rng.normal(size=(50, 12)) * 3).astype(np.float32)
        matrix, meta = write_files(tmp_path, rows, [{"id": f"r{i}"} for i in range(50)])
        table = load_table(matrix, meta)
        norms = np.linalg.norm(table.rows.astype(np.float64), axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-5

    def test_rows_read_only(self, two_row_table):
        with pytest.raises(ValueError):
            two_row_table.rows[0, 0] = 5.0

    def test_empty_id_rejected(self):
        with pytest.raises(FormatError):
            make_table([[1.0, 0.0]], ids=[""])

    def test_subset_keeps_bits_and_meta(self):
        table = make_table([[1, 2], [3, 4], [5, 6]], ids=["a", "b", "c"])
        sub = table.subset([2, 0])
        np.testing.assert_array_equal(sub.rows, table.rows[[2, 0]])
        assert sub.ids == ["c", "a"]

    @settings(max_examples=60, deadline=None)
    @given(
        n=st.integers(1, 12),
        dim=st.integers(1, 6),
        seed=st.integers(0, 10_000),
        scale=st.floats(1e-3, 1e3),
    )
    def test_norm_invariant_property(self, n, dim, seed, scale):
        rng = np.random.default_rng(seed)
        rows = rng.normal(size=(n, dim)) * scale
        # regenerate any row that rounds to zero in float32
        rows[np.linalg.norm(rows, axis=1) < 1e-6] = 1.0
        table = make_table(rows.astype(np.float32))
        norms = np.linalg.norm(table.rows.astype(np.float64), axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-5


class TestPrompts:
    def test_sound_of_template(self):
        t = PromptTemplate("This is a sound of {}")
        assert render_prompts(["dog"], t) == ["This is a sound of dog"]

    def test_bare_label_capitalized(self):
        t = PromptTemplate("{}", "capitalize_first")
        assert render_prompts(["dog"], t) == ["Dog"]

    def test_multiple_labels_order_preserved(self):
        t = PromptTemplate("I can hear {}")
        assert render_prompts(["car horn", "siren"], t) == [
            "I can hear car horn",
            "I can hear siren",
        ]

    def test_lowercase_first_char(self):
        t = PromptTemplate("This is {}", "lowercase")
        assert t.render("dog") == "this is dog"

    def test_missing_placeholder_rejected(self):
        with pytest.raises(ContractError):
            PromptTemplate("no placeholder")

    def test_two_placeholders_rejected(self):
        with pytest.raises(ContractError):
            PromptTemplate("{} and {}")

    def test_unknown_case_mode_rejected(self):
        with pytest.raises(ContractError):
            PromptTemplate("{}", "shout")

    def test_empty_labels_rejected(self):
        with pytest.raises(ContractError):
            render_prompts([], PromptTemplate("{}"))

    @given(st.text(min_size=1, max_size=30).filter(lambda s: "{}" not in s))
    def test_render_contains_label_verbatim(self, label):
        t = PromptTemplate("xx {} yy")
        assert label in t.render(label)
