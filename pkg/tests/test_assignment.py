"""Greedy 1-1 filtering."""

import pytest

from docalign.assignment import AlignmentSet, one_to_one, read_alignment, write_alignment
from docalign.scoring import ScoredPair


def sp(src, tgt, score):
    return ScoredPair(src_id=src, tgt_id=tgt, score=score, method="bimax")


class TestOneToOne:
    def test_disjoint_ids_all_accepted(self):
        scored = [sp("s1", "t1", 0.9), sp("s2", "t2", 0.3)]
        out = one_to_one(scored)
        assert out.as_id_pairs() == {("s1", "t1"), ("s2", "t2")}

    def test_hand_greedy_simulation(self):
        scored = [sp("s1", "t1", 0.9), sp("s2", "t1", 0.8), sp("s2", "t2", 0.7)]
        out = one_to_one(scored)
        assert [p[:2] for p in out.pairs] == [("s1", "t1"), ("s2", "t2")]

    def test_equal_scores_source_id_ascending_wins(self):
        scored = [sp("s2", "t1", 0.5), sp("s1", "t1", 0.5)]
        out = one_to_one(scored)
        assert out.pairs == (("s1", "t1", 0.5),)

    def test_equal_scores_same_source_target_ascending(self):
        scored = [sp("s1", "t9", 0.5), sp("s1", "t2", 0.5)]
        out = one_to_one(scored)
        assert out.pairs == (("s1", "t2", 0.5),)

    def test_output_is_matching(self):
        scored = [sp(f"s{i}", f"t{i % 3}", 1.0 - i * 0.01) for i in range(10)]
        out = one_to_one(scored)
        srcs = [p[0] for p in out.pairs]
        tgts = [p[1] for p in out.pairs]
        assert len(set(srcs)) == len(srcs)
        assert len(set(tgts)) == len(tgts)

    def test_invariant_under_input_permutation(self, rng):
        scored = [sp(f"s{i}", f"t{int(rng.integers(0, 6))}", float(rng.uniform()))
                  for i in range(12)]
        base = one_to_one(scored)
        for _ in range(5):
            perm = list(rng.permutation(len(scored)))
            assert one_to_one([scored[i] for i in perm]) == base

    def test_size_bound(self):
        scored = [sp("s1", "t1", 0.9), sp("s1", "t2", 0.8),
                  sp("s2", "t1", 0.7), sp("s2", "t2", 0.6)]
        out = one_to_one(scored)
        assert len(out) <= 2

    def test_non_finite_score_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            one_to_one([sp("s1", "t1", float("nan"))])

    def test_matching_invariant_enforced(self):
        with pytest.raises(ValueError, match="matching"):
            AlignmentSet(pairs=(("s1", "t1", 0.5), ("s1", "t2", 0.4)))


class TestAlignmentFile:
    def test_tsv_round_trip(self, tmp_path):
        out = one_to_one([sp("s1", "t1", 0.912345), sp("s2", "t2", 0.25)])
        path = tmp_path / "a.tsv"
        write_alignment(out, path)
        assert path.read_text(encoding="utf-8") == "s1\tt1\t0.912345\ns2\tt2\t0.250000\n"
        loaded = read_alignment(path)
        assert loaded.as_id_pairs() == out.as_id_pairs()
