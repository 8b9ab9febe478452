"""Exact top-K retrieval against a full-sort oracle."""

import numpy as np
import pytest

from docalign.docvec import DocVectorSet
from docalign.retrieval import TopKRetriever, read_candidates, topk, write_candidates

from conftest import random_unit_rows


def vecset(ids, matrix, side="target"):
    return DocVectorSet(side=side, ids=tuple(ids),
                        matrix=np.asarray(matrix, dtype=np.float32))


def sort_all_oracle(src, tgt, k):
    """Independent oracle: score every pair with a per-pair float64 dot,
    sort (score desc, id asc), take the first K."""
    out = {}
    for i, sid in enumerate(src.ids):
        scored = []
        for j, tid in enumerate(tgt.ids):
            s = float(np.dot(src.matrix[i].astype(np.float64),
                             tgt.matrix[j].astype(np.float64)))
            scored.append((tid, s))
        scored.sort(key=lambda p: (-p[1], p[0]))
        out[sid] = scored[:min(k, len(scored))]
    return out


class TestTopk:
    def test_exact_copy_ranks_first(self, rng):
        tgt_rows = random_unit_rows(rng, 5, 8)
        src = vecset(["s0"], tgt_rows[2:3], side="source")
        tgt = vecset([f"t{i}" for i in range(5)], tgt_rows)
        [result] = topk(src, tgt, k=3)
        assert result.candidates[0][0] == "t2"
        assert result.candidates[0][1] == pytest.approx(1.0, abs=1e-6)

    def test_hand_dot_products(self):
        src = vecset(["s0"], [[1.0, 0.0, 0.0]], side="source")
        tgt = vecset(["t0", "t1", "t2"],
                     [[0.0, 1.0, 0.0], [0.8, 0.6, 0.0], [0.6, 0.0, 0.8]])
        [result] = topk(src, tgt, k=2)
        assert result.candidates[0] == ("t1", pytest.approx(0.8))
        assert result.candidates[1] == ("t2", pytest.approx(0.6))

    def test_k_clamped_to_target_count(self, rng):
        src = vecset(["s0"], random_unit_rows(rng, 1, 4), side="source")
        tgt = vecset([f"t{i}" for i in range(4)], random_unit_rows(rng, 4, 4))
        [result] = topk(src, tgt, k=10)
        assert len(result.candidates) == 4

    def test_matches_sort_all_oracle(self, rng):
        for _ in range(20):
            n_src = int(rng.integers(1, 20))
            n_tgt = int(rng.integers(1, 40))
            k = int(rng.integers(1, 10))
            src = vecset([f"s{i}" for i in range(n_src)],
                         random_unit_rows(rng, n_src, 16), side="source")
            tgt = vecset([f"t{i:03d}" for i in range(n_tgt)],
                         random_unit_rows(rng, n_tgt, 16))
            expected = sort_all_oracle(src, tgt, k)
            for result in topk(src, tgt, k, block_size=7):
                want = expected[result.src_id]
                assert [c[0] for c in result.candidates] == [w[0] for w in want]
                np.testing.assert_allclose([c[1] for c in result.candidates],
                                           [w[1] for w in want], atol=1e-9)

    def test_invariant_under_target_permutation(self, rng):
        src = vecset([f"s{i}" for i in range(5)],
                     random_unit_rows(rng, 5, 8), side="source")
        rows = random_unit_rows(rng, 12, 8)
        ids = [f"t{i}" for i in range(12)]
        tgt = vecset(ids, rows)
        perm = rng.permutation(12)
        tgt_shuffled = vecset([ids[p] for p in perm], rows[perm])
        a = topk(src, tgt, k=4)
        b = topk(src, tgt_shuffled, k=4)
        for ra, rb in zip(a, b):
            assert [c[0] for c in ra.candidates] == [c[0] for c in rb.candidates]

    def test_ties_broken_by_ascending_target_id(self):
        src = vecset(["s0"], [[1.0, 0.0]], side="source")
        tgt = vecset(["t9", "t1", "t5"], [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        [result] = topk(src, tgt, k=2)
        assert [c[0] for c in result.candidates] == ["t1", "t5"]

    def test_no_duplicate_targets(self, rng):
        src = vecset(["s0"], random_unit_rows(rng, 1, 4), side="source")
        tgt = vecset([f"t{i}" for i in range(6)], random_unit_rows(rng, 6, 4))
        [result] = topk(src, tgt, k=6)
        ids = [c[0] for c in result.candidates]
        assert len(set(ids)) == len(ids)

    def test_errors(self, rng):
        src = vecset(["s0"], random_unit_rows(rng, 1, 4), side="source")
        tgt = vecset(["t0"], random_unit_rows(rng, 1, 5))
        with pytest.raises(ValueError, match="dimensionality mismatch"):
            topk(src, tgt, k=1)
        empty = DocVectorSet(side="target", ids=(), matrix=np.empty((0, 4), dtype=np.float32))
        with pytest.raises(ValueError, match="target set is empty"):
            topk(src, empty, k=1)
        with pytest.raises(ValueError, match="k must be"):
            topk(src, vecset(["t0"], random_unit_rows(rng, 1, 4)), k=0)


class TestRetrieverEstimator:
    def test_fit_query(self, rng):
        tgt = vecset([f"t{i}" for i in range(8)], random_unit_rows(rng, 8, 4))
        src = vecset(["s0", "s1"], random_unit_rows(rng, 2, 4), side="source")
        retriever = TopKRetriever(k=3)
        results = retriever.fit(tgt).query(src)
        assert len(results) == 2
        assert all(len(r.candidates) == 3 for r in results)

    def test_unfitted_raises(self, rng):
        src = vecset(["s0"], random_unit_rows(rng, 1, 4), side="source")
        with pytest.raises(RuntimeError, match="not fitted"):
            TopKRetriever().query(src)

    def test_get_params(self):
        assert TopKRetriever(k=32).get_params() == {"k": 32, "block_size": 1024}


class TestCandidatesFile:
    def test_tsv_round_trip(self, tmp_path, rng):
        src = vecset(["s0", "s1"], random_unit_rows(rng, 2, 4), side="source")
        tgt = vecset([f"t{i}" for i in range(5)], random_unit_rows(rng, 5, 4))
        results = topk(src, tgt, k=3)
        path = tmp_path / "cand.tsv"
        write_candidates(results, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 6
        assert lines[0].split("\t")[2] == "1"  # rank column
        loaded = read_candidates(path)
        assert [r.src_id for r in loaded] == ["s0", "s1"]
        for orig, back in zip(results, loaded):
            assert [c[0] for c in orig.candidates] == [c[0] for c in back.candidates]
            for (_, a), (_, b) in zip(orig.candidates, back.candidates):
                assert abs(a - b) <= 5e-7  # 6-decimal serialization
