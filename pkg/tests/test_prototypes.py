import numpy as np
import pytest

from protoanchor import (
    BoundsError,
    ConsistencyError,
    DegenerateVectorError,
    EmptyClassError,
    build_supervised,
    build_text_anchored,
    knn,
    load_prototypes,
    save_prototypes,
)

from conftest import make_table

SQRT2_2 = 0.7071067811865476


def anchors_2d():
    return make_table([[1.0, 0.0], [0.0, 1.0]], ids=["right", "up"])


def audio_2d():
    return make_table(
        [[1.0, 0.1], [1.0, -0.1], [0.1, 1.0], [-0.1, 1.0]],
        ids=["a0", "a1", "a2", "a3"],
    )


class TestTextAnchored:
    def test_k1_equals_nearest_neighbor_bitwise(self):
        rng = np.random.default_rng(0)
        audio = make_table(rng.normal(size=(40, 8)).astype(np.float32))
        text = make_table(rng.normal(size=(5, 8)).astype(np.float32),
                          ids=[f"c{i}" for i in range(5)])
        protos = build_text_anchored(text, audio, 1)
        for c in range(5):
            nearest = knn(text.rows[c], audio, 1)[0].row
            assert protos.provenance[c].members == [nearest]
            np.testing.assert_array_equal(protos.vectors[c], audio.rows[nearest])

    def test_two_class_hand_example(self):
        protos = build_text_anchored(anchors_2d(), audio_2d(), 2)
        np.testing.assert_allclose(protos.vectors[0], [1.0, 0.0], atol=1e-6)
        np.testing.assert_allclose(protos.vectors[1], [0.0, 1.0], atol=1e-6)
        assert protos.class_names == ["right", "up"]
        assert protos.provenance[0].members == [0, 1]
        assert protos.provenance[1].members == [2, 3]

    def test_provenance_records_k_and_anchor(self):
        protos = build_text_anchored(anchors_2d(), audio_2d(), 3)
        for name, prov in zip(protos.class_names, protos.provenance):
            assert prov.anchor_id == name
            assert prov.k == 3
            assert len(prov.members) == 3

    def test_clusters_may_overlap(self):
        audio = make_table([[1.0, 0.05], [1.0, -0.05]])
        text = make_table([[1.0, 0.01], [1.0, -0.01]], ids=["x", "y"])
        protos = build_text_anchored(text, audio, 2)
        assert set(protos.provenance[0].members) == set(protos.provenance[1].members)

    @pytest.mark.parametrize("k", [0, 5, -1])
    def test_k_bounds(self, k):
        with pytest.raises(BoundsError):
            build_text_anchored(anchors_2d(), audio_2d(), k)

    def test_degenerate_centroid_names_class(self):
        audio = make_table([[1.0, 0.0], [-1.0, 0.0]])
        text = make_table([[0.0, 1.0]], ids=["ambiguous"])
        with pytest.raises(DegenerateVectorError, match="ambiguous"):
            build_text_anchored(text, audio, 2)

    def test_dim_mismatch(self):
        from protoanchor import ContractError

        text3 = make_table([[1.0, 0.0, 0.0]], ids=["c"])
        with pytest.raises(ContractError):
            build_text_anchored(text3, audio_2d(), 1)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        raw = rng.normal(size=(30, 6)).astype(np.float32)
        audio = make_table(raw, ids=[f"a{i}" for i in range(30)])
        text = make_table(rng.normal(size=(4, 6)).astype(np.float32),
                          ids=[f"c{i}" for i in range(4)])
        perm = rng.permutation(30)
        audio_p = make_table(raw[perm], ids=[f"a{i}" for i in perm])
        p1 = build_text_anchored(text, audio, 5)
        p2 = build_text_anchored(text, audio_p, 5)
        np.testing.assert_array_equal(p1.vectors, p2.vectors)
        # member indices map through the permutation
        inverse = np.argsort(perm)
        for prov1, prov2 in zip(p1.provenance, p2.provenance):
            assert [int(inverse[m]) for m in prov1.members] == prov2.members

    def test_centroid_idempotence(self):
        row = np.array([0.6, 0.8], np.float32)
        audio = make_table(np.tile(row, (6, 1)))
        text = make_table([[1.0, 0.0]], ids=["c"])
        protos = build_text_anchored(text, audio, 4)
        np.testing.assert_array_equal(protos.vectors[0], audio.rows[0])

    def test_unit_norm_invariant(self):
        rng = np.random.default_rng(2)
        audio = make_table(rng.normal(size=(50, 16)).astype(np.float32))
        text = make_table(rng.normal(size=(8, 16)).astype(np.float32),
                          ids=[f"c{i}" for i in range(8)])
        protos = build_text_anchored(text, audio, 10)
        norms = np.linalg.norm(protos.vectors.astype(np.float64), axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-5


class TestSupervised:
    def test_identical_rows_single_class(self):
        row = np.array([0.8, 0.6], np.float32)
        audio = make_table(np.tile(row, (4, 1)), labels=[["x"]] * 4)
        protos = build_supervised(audio, ["x"])
        np.testing.assert_array_equal(protos.vectors[0], audio.rows[0])
        assert protos.provenance[0].anchor_id == "supervised"
        assert protos.provenance[0].members == [0, 1, 2, 3]

    def test_orthogonal_pair_hand_example(self):
        audio = make_table([[1.0, 0.0], [0.0, 1.0]], labels=[["x"], ["x"]])
        protos = build_supervised(audio, ["x"])
        np.testing.assert_allclose(protos.vectors[0], [SQRT2_2, SQRT2_2], atol=1e-6)

    def test_absent_class(self):
        audio = make_table([[1.0, 0.0]], labels=[["x"]])
        with pytest.raises(EmptyClassError, match="ghost"):
            build_supervised(audio, ["ghost"])

    def test_multilabel_rows_join_both_classes(self):
        audio = make_table(
            [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            labels=[["a"], ["b"], ["a", "b"]],
        )
        protos = build_supervised(audio, ["a", "b"])
        assert protos.provenance[0].members == [0, 2]
        assert protos.provenance[1].members == [1, 2]
        assert protos.provenance[0].k == 2

    def test_class_order_preserved(self):
        audio = make_table([[1.0, 0.0], [0.0, 1.0]], labels=[["b"], ["a"]])
        protos = build_supervised(audio, ["b", "a"])
        assert protos.class_names == ["b", "a"]


class TestPersistence:
    def test_round_trip(self, tmp_path):
        protos = build_text_anchored(anchors_2d(), audio_2d(), 2)
        save_prototypes(protos, tmp_path / "p.embt", tmp_path / "p.jsonl")
        again = load_prototypes(tmp_path / "p.embt", tmp_path / "p.jsonl")
        np.testing.assert_array_equal(again.vectors, protos.vectors)
        assert again.class_names == protos.class_names
        assert again.provenance == protos.provenance

    def test_sidecar_loads_as_plain_table(self, tmp_path):
        from protoanchor import load_table

        protos = build_text_anchored(anchors_2d(), audio_2d(), 2)
        save_prototypes(protos, tmp_path / "p.embt", tmp_path / "p.jsonl")
        table = load_table(tmp_path / "p.embt", tmp_path / "p.jsonl")
        assert table.ids == protos.class_names

    def test_count_mismatch_detected(self, tmp_path):
        protos = build_text_anchored(anchors_2d(), audio_2d(), 2)
        save_prototypes(protos, tmp_path / "p.embt", tmp_path / "p.jsonl")
        lines = (tmp_path / "p.jsonl").read_text().splitlines()
        (tmp_path / "p.jsonl").write_text(lines[0] + "\n")
        with pytest.raises(ConsistencyError):
            load_prototypes(tmp_path / "p.embt", tmp_path / "p.jsonl")
