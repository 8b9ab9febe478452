"""Mean-Pool and window-pooled document vectors, window weights, LIDF."""

import numpy as np
import pytest
from scipy.stats import beta as beta_dist

from docalign.docvec import (
    DocVectorizer, PertSpec, build_lidf, mean_pool, pert_weights, tk_pert,
)
from docalign.errors import DegenerateDocumentError, MissingDocumentError

from conftest import random_unit_rows, segdoc, store_from_rows


class TestMeanPool:
    def test_single_row_identity(self):
        row = np.array([[0.6, 0.8]], dtype=np.float32)
        np.testing.assert_allclose(mean_pool(row), [0.6, 0.8], atol=1e-7)

    def test_hand_mean(self):
        rows = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.float32)
        np.testing.assert_allclose(mean_pool(rows),
                                   [np.sqrt(2) / 2, np.sqrt(2) / 2], atol=1e-7)

    def test_cancelling_rows_are_degenerate(self):
        rows = np.array([[1.0, 0.0], [-1.0, 0.0]], dtype=np.float32)
        with pytest.raises(DegenerateDocumentError):
            mean_pool(rows)

    def test_unit_norm(self, rng):
        for _ in range(20):
            rows = random_unit_rows(rng, int(rng.integers(1, 30)), 16)
            assert abs(np.linalg.norm(mean_pool(rows)) - 1.0) < 1e-6


class TestPertWeights:
    def test_single_segment_forces_one(self):
        w = pert_weights(PertSpec(5, 20.0), 1)
        np.testing.assert_array_equal(w, np.ones((5, 1)))

    def test_single_window_is_symmetric(self):
        w = pert_weights(PertSpec(1, 12.0), 9)
        np.testing.assert_allclose(w[0], w[0][::-1], atol=1e-12)

    def test_matches_beta_pdf_oracle(self):
        # independent oracle: scipy Beta density evaluated directly
        spec = PertSpec(2, 16.0)
        w = pert_weights(spec, 4)
        x = (np.arange(4) + 0.5) / 4
        for j in range(2):
            mode = (j + 0.5) / 2
            a, b = 1 + 16.0 * mode, 1 + 16.0 * (1 - mode)
            pdf = beta_dist.pdf(x, a, b)
            np.testing.assert_allclose(w[j], pdf / pdf.sum(), atol=1e-9)

    def test_rows_are_distributions(self, rng):
        for _ in range(20):
            spec = PertSpec(int(rng.integers(1, 20)), float(rng.uniform(0.5, 40)))
            w = pert_weights(spec, int(rng.integers(1, 50)))
            assert (w >= 0).all()
            np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-9)

    def test_window_mirror_symmetry(self, rng):
        for _ in range(20):
            j = int(rng.integers(1, 12))
            n = int(rng.integers(1, 40))
            w = pert_weights(PertSpec(j, float(rng.uniform(1, 30))), n)
            np.testing.assert_allclose(w, w[::-1, ::-1], atol=1e-9)

    def test_no_underflow_at_large_gamma_and_n(self):
        w = pert_weights(PertSpec(16, 200.0), 5000)
        assert np.isfinite(w).all()
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-9)


class TestLidf:
    def test_unique_segment_weight_one(self):
        table = build_lidf([segdoc("d1", ["only here"]), segdoc("d2", ["other"])])
        assert table["only here"] == 1.0

    def test_boilerplate_in_all_docs(self):
        docs = [segdoc(f"d{i}", ["copyright", f"body {i}"]) for i in range(5)]
        table = build_lidf(docs)
        assert table["copyright"] == pytest.approx(1 / 5)

    def test_hand_count_three_of_ten(self):
        docs = [segdoc(f"d{i}", ["shared"] if i < 3 else [f"solo {i}"])
                for i in range(10)]
        assert build_lidf(docs)["shared"] == pytest.approx(1 / 3)

    def test_duplicates_within_doc_count_once(self):
        table = build_lidf([segdoc("d1", ["x", "x"]), segdoc("d2", ["x"])])
        assert table["x"] == pytest.approx(1 / 2)


class TestTkPert:
    def test_single_segment_single_window_identity(self):
        rows = np.array([[0.0, 1.0]], dtype=np.float32)
        out = tk_pert(rows, pert_weights(PertSpec(1, 16.0), 1), np.ones(1))
        np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-7)

    def test_single_window_equals_weighted_average_direction(self, rng):
        rows = random_unit_rows(rng, 5, 8)
        w = pert_weights(PertSpec(1, 16.0), 5)
        out = tk_pert(rows, w, np.ones(5))
        avg = (w[0][:, None] * rows).sum(axis=0)
        np.testing.assert_allclose(out, avg / np.linalg.norm(avg), atol=1e-6)

    def test_reduces_to_mean_pool_for_one_segment(self, rng):
        rows = random_unit_rows(rng, 1, 8)
        out = tk_pert(rows, pert_weights(PertSpec(1, 16.0), 1), np.ones(1))
        np.testing.assert_allclose(out, mean_pool(rows), atol=1e-7)

    def test_matches_scalar_loop_oracle(self, rng):
        # plain re-implementation without vectorization
        rows = random_unit_rows(rng, 3, 4)
        weights = pert_weights(PertSpec(2, 16.0), 3)
        lidf = np.array([1.0, 0.5, 0.25])
        out = tk_pert(rows, weights, lidf)

        window_vecs = []
        for j in range(2):
            v = np.zeros(4)
            for i in range(3):
                for k in range(4):
                    v[k] += weights[j][i] * lidf[i] * rows[i][k]
            norm = np.sqrt(sum(x * x for x in v))
            window_vecs.append(v / norm if norm > 0 else v)
        expected = np.concatenate(window_vecs)
        expected = expected / np.linalg.norm(expected)
        np.testing.assert_allclose(out, expected, atol=1e-9)

    def test_unit_norm_and_shape(self, rng):
        rows = random_unit_rows(rng, 7, 6)
        out = tk_pert(rows, pert_weights(PertSpec(3, 10.0), 7), np.ones(7))
        assert out.shape == (18,)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-6

    def test_lidf_scaling_invariance(self, rng):
        rows = random_unit_rows(rng, 6, 5)
        w = pert_weights(PertSpec(2, 8.0), 6)
        lidf = rng.uniform(0.1, 1.0, size=6)
        a = tk_pert(rows, w, lidf)
        b = tk_pert(rows, w, lidf * 37.0)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_all_zero_windows_degenerate(self):
        rows = np.array([[1.0, 0.0], [-1.0, 0.0]], dtype=np.float32)
        weights = np.full((2, 2), 0.5)
        with pytest.raises(DegenerateDocumentError):
            tk_pert(rows, weights, np.ones(2))


class TestDocVectorizer:
    def make_corpus(self, rng):
        docs = [segdoc("d1", ["a b", "c d"]), segdoc("d2", ["e f"])]
        store = store_from_rows([
            ("d1", random_unit_rows(rng, 2, 4)),
            ("d2", random_unit_rows(rng, 1, 4)),
        ])
        return docs, store

    def test_mean_method(self, rng):
        docs, store = self.make_corpus(rng)
        vecs = DocVectorizer(method="mean").fit(docs).transform(docs, store)
        assert vecs.ids == ("d1", "d2")
        assert vecs.matrix.shape == (2, 4)
        np.testing.assert_allclose(vecs.matrix[0], mean_pool(store.doc_rows("d1")), atol=1e-7)

    def test_tkpert_method_uses_lidf(self, rng):
        docs = [segdoc("d1", ["shared", "own1"]), segdoc("d2", ["shared", "own2"])]
        store = store_from_rows([
            ("d1", random_unit_rows(rng, 2, 4)),
            ("d2", random_unit_rows(rng, 1, 4).repeat(2, axis=0)),
        ])
        vec = DocVectorizer(method="tkpert", windows=2, gamma=16.0)
        vec.fit(docs)
        assert vec.lidf_["shared"] == pytest.approx(0.5)
        out = vec.transform(docs, store)
        assert out.matrix.shape == (2, 8)
        expected = tk_pert(store.doc_rows("d1"), pert_weights(PertSpec(2, 16.0), 2),
                           np.array([0.5, 1.0]))
        np.testing.assert_allclose(out.matrix[0], expected, atol=1e-7)

    def test_degenerate_docs_reported_not_dropped_silently(self, rng):
        docs = [segdoc("ok", ["x"]), segdoc("bad", ["y", "z"])]
        store = store_from_rows([
            ("ok", np.array([[1.0, 0.0]])),
            ("bad", np.array([[1.0, 0.0], [-1.0, 0.0]])),
        ])
        vec = DocVectorizer(method="mean")
        out = vec.fit(docs).transform(docs, store)
        assert out.ids == ("ok",)
        assert vec.degenerate_ids_ == ["bad"]

    def test_missing_embedding_named(self, rng):
        docs, store = self.make_corpus(rng)
        with pytest.raises(MissingDocumentError, match="d9"):
            DocVectorizer().fit(docs).transform([segdoc("d9", ["q"])], store)

    def test_requires_fit_and_store(self, rng):
        docs, store = self.make_corpus(rng)
        with pytest.raises(RuntimeError, match="not fitted"):
            DocVectorizer().transform(docs, store)
        with pytest.raises(ValueError, match="EmbeddingStore"):
            DocVectorizer().fit(docs).transform(docs)

    def test_get_params(self):
        params = DocVectorizer(method="tkpert", windows=16, gamma=20.0).get_params()
        assert params == {"method": "tkpert", "windows": 16, "gamma": 20.0}
