import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from follower.core import (DatasetManifest, DimensionMismatchError,
                           EmptySequenceError, Metric, SequenceSample,
                           embed_video)


def seq(frames, sid="s"):
    return SequenceSample(sid, np.asarray(frames, dtype=float))


class TestEmbedVideo:
    def test_single_frame_is_identity(self):
        assert np.allclose(embed_video(seq([[1.0, 2.0]])), [1.0, 2.0])

    def test_two_frame_mean(self):
        assert np.allclose(embed_video(seq([[0, 0], [2, 4]])), [1.0, 2.0])

    def test_permutation_invariant(self):
        frames = [[1, 5], [2, 3], [9, 0], [4, 4]]
        a = embed_video(seq(frames))
        b = embed_video(seq(frames[::-1]))
        assert np.array_equal(a, b)

    def test_repetition_invariant(self):
        frames = [[1.0, 2.5], [3.0, -1.0]]
        assert np.allclose(embed_video(seq(frames)),
                           embed_video(seq(frames * 3)))

    def test_empty_frames_rejected(self):
        with pytest.raises(EmptySequenceError):
            SequenceSample("s", np.zeros((0, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            seq([[1.0, np.nan]])

    @given(arrays(np.float64, (5, 3),
                  elements=st.floats(-1e6, 1e6)))
    def test_mean_within_envelope(self, frames):
        rep = embed_video(SequenceSample("s", frames))
        assert np.all(rep >= frames.min(axis=0) - 1e-9)
        assert np.all(rep <= frames.max(axis=0) + 1e-9)


class TestMetric:
    def test_identity_is_zero(self):
        m = Metric()
        assert m([3.0, 4.0], [3.0, 4.0]) == 0.0

    def test_euclidean_3_4_5(self):
        assert Metric()([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0)

    def test_cosine_orthogonal(self):
        # 1 - cos(90 degrees) = 1
        assert Metric("cosine")([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Metric()([1.0], [1.0, 2.0])

    def test_cosine_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            Metric("cosine")([0.0, 0.0], [1.0, 0.0])

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            Metric("manhattan")

    @given(arrays(np.float64, (2, 4), elements=st.floats(-1e3, 1e3)))
    def test_axioms(self, pair):
        a, b = pair
        for metric in (Metric(), Metric(normalize=True)):
            dab = metric(a, b)
            assert dab >= 0.0
            assert dab == pytest.approx(metric(b, a))
            assert metric(a, a) == pytest.approx(0.0, abs=1e-9)

    def test_to_all_matches_pairwise(self):
        rng = np.random.default_rng(0)
        mat = rng.normal(size=(20, 6))
        q = rng.normal(size=6)
        for metric in (Metric(), Metric("cosine"), Metric(normalize=True)):
            batch = metric.to_all(q, mat)
            single = [metric(q, row) for row in mat]
            assert np.allclose(batch, single)


class TestDatasetManifest:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            DatasetManifest([seq([[1.0]], "a"), seq([[2.0]], "a")])

    def test_objects_sorted(self):
        m = DatasetManifest([
            SequenceSample("1", [[0.0]], true_object="b"),
            SequenceSample("2", [[0.0]], true_object="a"),
        ])
        assert m.objects == ["a", "b"]
